"""Temporary Swap / Removal augmentation of causally partitioned sequences.

A training pair is rebuilt from the stored sequence on every call: the
sequence is split into an input and a target subsequence, the configured
operator perturbs one or both of them, and both sides are left-padded to the
model length. Nothing is written back, so each iteration sees fresh draws.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import accumulate
from typing import NamedTuple, Sequence

from .errors import InvalidParam, SequenceTooLong, SequenceTooShort

PAD = 0


class Op(enum.Enum):
    NONE = "none"
    SWAP = "swap"
    REMOVAL = "removal"


class ApplyTo(enum.Enum):
    INPUT = "input"
    TARGET = "target"
    BOTH = "both"


@dataclass(frozen=True)
class AugmentConfig:
    op: Op = Op.NONE
    alpha: float = 0.5
    scope: float = 0.5
    rho: float = 0.5
    apply_to: ApplyTo = ApplyTo.BOTH
    constrained: bool = True
    max_len: int = 50

    def __post_init__(self):
        # Accept plain strings from config files / CLI flags.
        for name, kind in (("op", Op), ("apply_to", ApplyTo)):
            value = getattr(self, name)
            if not isinstance(value, kind):
                try:
                    object.__setattr__(self, name, kind(str(value).lower()))
                except ValueError:
                    choices = ", ".join(m.value for m in kind)
                    raise InvalidParam(f"{name} must be one of {choices}, got {value!r}") from None
        for name in ("alpha", "scope", "rho"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParam(f"{name} must lie in [0, 1], got {value}")
        if self.max_len < 2:
            raise InvalidParam(f"max_len must be >= 2, got {self.max_len}")


class TrainingPair(NamedTuple):
    input: tuple
    target: tuple


class SwapDraw(NamedTuple):
    """Positions chosen by one Swap call; ``offset`` is None for Random(S)."""

    index_a: int
    index_b: int
    offset: int | None

    @property
    def transposes(self) -> bool:
        return self.index_a != self.index_b


def causal_partition(seq: Sequence[int], max_len: int) -> tuple[list, list]:
    """Split the last ``max_len`` items into input (all but last) and target (all but first)."""
    if len(seq) < 2:
        raise SequenceTooShort(f"need at least 2 items to form a pair, got {len(seq)}")
    window = list(seq[-max_len:])
    return window[:-1], window[1:]


def offset_weights(m: int, alpha: float) -> list[float]:
    """Geometric weights ``alpha**i`` over offsets ``0..m-1``, normalised to sum to 1.

    ``0**0`` is taken as 1, so ``alpha=0`` puts all mass on offset 0.
    """
    if m < 1:
        raise InvalidParam(f"support must be >= 1, got {m}")
    if not 0.0 <= alpha <= 1.0:
        raise InvalidParam(f"alpha must lie in [0, 1], got {alpha}")
    raw = [1.0] + [alpha**i for i in range(1, m)]
    total = math.fsum(raw)
    return [x / total for x in raw]


@lru_cache(maxsize=4096)
def _cum_offset_weights(m: int, alpha: float) -> tuple:
    return tuple(accumulate(offset_weights(m, alpha)))


def swap_scope(n: int, scope: float) -> int:
    return max(math.floor(n * scope), 1)


def draw_swap(n: int, alpha: float, scope: float, constrained: bool, rng) -> SwapDraw:
    """Draw the pair of positions a Swap would transpose in a length-``n`` sequence.

    In constrained mode ``index_b`` may fall outside ``0..n-1``; the caller then
    leaves the sequence unchanged.
    """
    if not constrained:
        return SwapDraw(rng.randint(n), rng.randint(n), None)
    reach = swap_scope(n, scope)
    index_a = rng.randint(n)
    offset = rng.categorical(_cum_offset_weights(reach, alpha))
    index_b = index_a + rng.sign() * offset
    return SwapDraw(index_a, index_b, offset)


def swap(seq: Sequence[int], alpha: float, scope: float, constrained: bool, rng) -> list:
    """Transpose a random pivot with a nearby item; returns a new list."""
    out = list(seq)
    n = len(out)
    if n == 0:
        return out
    a, b, _ = draw_swap(n, alpha, scope, constrained, rng)
    if 0 <= b < n and a != b:
        out[a], out[b] = out[b], out[a]
    return out


def removal(seq: Sequence[int], rho: float, constrained: bool, rng) -> list:
    """Delete ``T`` uniformly chosen items one at a time, keeping survivors in order.

    ``T`` is uniform over ``0..floor(rho*n)``, or over ``0..n-1`` for Random(R).
    """
    out = list(seq)
    n = len(out)
    if n == 0:
        return out
    budget = math.floor(rho * n) if constrained else n - 1
    count = rng.randint(budget + 1)
    for _ in range(count):
        del out[rng.randint(len(out))]
    return out


def pad_left(seq: Sequence[int], max_len: int) -> tuple:
    if len(seq) > max_len:
        raise SequenceTooLong(f"sequence of length {len(seq)} exceeds max_len={max_len}")
    return (PAD,) * (max_len - len(seq)) + tuple(seq)


def apply_op(seq: list, cfg: AugmentConfig, rng) -> list:
    if cfg.op is Op.SWAP:
        return swap(seq, cfg.alpha, cfg.scope, cfg.constrained, rng)
    if cfg.op is Op.REMOVAL:
        return removal(seq, cfg.rho, cfg.constrained, rng)
    return seq


def build_training_pair(seq: Sequence[int], cfg: AugmentConfig, rng) -> TrainingPair:
    """Partition, augment and pad one sequence into a fresh training pair.

    The input side draws from ``rng`` before the target side, so a pair is a
    deterministic function of the sequence, the config and the stream key.
    """
    inp, tgt = causal_partition(seq, cfg.max_len)
    if cfg.apply_to in (ApplyTo.INPUT, ApplyTo.BOTH):
        inp = apply_op(inp, cfg, rng)
    if cfg.apply_to in (ApplyTo.TARGET, ApplyTo.BOTH):
        tgt = apply_op(tgt, cfg, rng)
    return TrainingPair(pad_left(inp, cfg.max_len), pad_left(tgt, cfg.max_len))
