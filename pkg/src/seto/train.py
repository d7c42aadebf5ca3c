"""Training loop with fresh per-iteration augmentation and early stopping."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .augment import PAD, AugmentConfig, build_training_pair
from .data import SAMPLED, Dataset, Splits, leave_one_out_split
from .errors import CatalogTooSmall, EmptyDataset, InvalidParam
from .evaluation import build_candidates, evaluate
from .model import DecayModel, ModelParams, bpr_step, init_params
from .rng import AUGMENT, NEGATIVES, SHUFFLE, RngStream

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 128
    lr: float = 0.001
    dim: int = 50
    max_len: int = 50
    l2: float = 1e-5
    max_epochs: int = 200
    eval_every: int = 10
    patience_evals: int = 2
    seed: int = 0

    def __post_init__(self):
        for name in ("batch_size", "dim", "max_len", "max_epochs", "eval_every", "patience_evals"):
            if getattr(self, name) < 1:
                raise InvalidParam(f"{name} must be positive, got {getattr(self, name)}")
        if self.lr < 0 or self.l2 < 0:
            raise InvalidParam("lr and l2 must be non-negative")
        if self.eval_every > self.max_epochs:
            raise InvalidParam(
                f"eval_every ({self.eval_every}) exceeds max_epochs ({self.max_epochs})")


@dataclass
class TrainHistory:
    losses: list = field(default_factory=list)
    evals: list = field(default_factory=list)  # (epoch, metric) in evaluation order
    best_epoch: int | None = None
    best_metric: float | None = None
    seconds: float = 0.0

    @property
    def epochs(self) -> int:
        return len(self.losses)

    def to_csv(self) -> str:
        evals = dict(self.evals)
        rows = ["epoch,loss,val_ndcg10"]
        for epoch, loss in enumerate(self.losses, start=1):
            metric = evals.get(epoch)
            rows.append(f"{epoch},{loss!r},{'' if metric is None else repr(metric)}")
        return "\n".join(rows) + "\n"


def sample_negatives(rng, excluded, num_items: int, targets) -> np.ndarray:
    """One negative per non-pad target, uniform over items outside ``excluded``.

    A negative never equals its own target; pad targets get pad negatives.
    Draws are rejection-sampled in vectorised rounds from ``rng.generator``.
    """
    targets = np.asarray(targets)
    out = np.zeros_like(targets)
    slots = np.flatnonzero(targets != PAD)
    if slots.size == 0:
        return out
    blocked = np.zeros(num_items + 1, dtype=bool)
    blocked[PAD] = True
    blocked[[i for i in set(excluded) if 0 <= i <= num_items]] = True
    free = np.flatnonzero(~blocked)
    if free.size == 0 or (free.size == 1 and np.any(targets[slots] == free[0])):
        raise CatalogTooSmall("no item outside the user's interacted items")
    gen = rng.generator
    pending = slots
    while pending.size:
        draw = gen.integers(1, num_items + 1, size=pending.size)
        ok = ~blocked[draw] & (draw != targets[pending])
        out[pending[ok]] = draw[ok]
        pending = pending[~ok]
    return out


def sample_negative(rng, excluded, num_items: int, target: int) -> int:
    """Single negative for ``target``; see :func:`sample_negatives`."""
    return int(sample_negatives(rng, excluded, num_items, [target])[0])


def epoch_pairs(train_seqs: dict, users, aug_cfg: AugmentConfig, seed: int, epoch: int,
                batch_size: int):
    """Yield ``(batch, [(user, pair, neg_rng), ...])`` for one epoch in shuffled order."""
    order = RngStream(seed, SHUFFLE, epoch).shuffled(users)
    for batch, start in enumerate(range(0, len(order), batch_size)):
        items = []
        for index, user in enumerate(order[start:start + batch_size]):
            pair = build_training_pair(
                train_seqs[user], aug_cfg, RngStream(seed, AUGMENT, epoch, batch, index))
            items.append((user, pair, RngStream(seed, NEGATIVES, epoch, batch, index)))
        yield batch, items


def train(dataset: Dataset, aug_cfg: AugmentConfig, train_cfg: TrainConfig,
          splits: Splits | None = None,
          evaluator: Callable[[ModelParams], float] | None = None,
          on_epoch: Callable | None = None) -> tuple[ModelParams, TrainHistory]:
    """Train a :class:`DecayModel` on the training part of ``dataset``.

    Each epoch visits every user with at least two training items exactly once
    and rebuilds their pair from the stored sequence. Every ``eval_every``
    epochs ``evaluator`` (validation NDCG@10 on sampled candidates by default)
    is consulted; training stops after ``patience_evals`` evaluations in a row
    without strict improvement, and the best parameters are returned.
    """
    if aug_cfg.max_len != train_cfg.max_len:
        raise InvalidParam(
            f"augment max_len {aug_cfg.max_len} != train max_len {train_cfg.max_len}")
    if splits is None:
        splits = leave_one_out_split(dataset)
    users = sorted(u for u, seq in splits.train.items() if len(seq) >= 2)
    if not users:
        raise EmptyDataset("no user has two or more training interactions")
    if evaluator is None:
        evaluator = _validation_ndcg(dataset, splits, train_cfg.seed)

    before = dataset.content_hash()
    params = init_params(dataset.num_items, train_cfg.dim, train_cfg.max_len, train_cfg.seed)
    history = TrainHistory()
    best = params.copy()
    bad_evals = 0
    start_time = time.perf_counter()

    for epoch in range(1, train_cfg.max_epochs + 1):
        total, count = 0.0, 0
        for _, items in epoch_pairs(splits.train, users, aug_cfg, train_cfg.seed, epoch,
                                    train_cfg.batch_size):
            inputs = np.array([pair.input for _, pair, _ in items])
            targets = np.array([pair.target for _, pair, _ in items])
            negatives = np.stack([
                sample_negatives(rng, splits.train[u], dataset.num_items, targets[i])
                for i, (u, _, rng) in enumerate(items)])
            positions = int((targets != PAD).sum())
            loss = bpr_step(params, inputs, targets, negatives, train_cfg.lr, train_cfg.l2)
            total += loss * positions
            count += positions
        history.losses.append(total / count if count else 0.0)
        if on_epoch is not None:
            on_epoch(epoch, history)

        if epoch % train_cfg.eval_every == 0:
            metric = float(evaluator(params))
            history.evals.append((epoch, metric))
            log.info("epoch %d loss %.5f val %.5f", epoch, history.losses[-1], metric)
            if history.best_metric is None or metric > history.best_metric:
                history.best_metric, history.best_epoch = metric, epoch
                best = params.copy()
                bad_evals = 0
            else:
                bad_evals += 1
                if bad_evals >= train_cfg.patience_evals:
                    break

    history.seconds = time.perf_counter() - start_time
    if dataset.content_hash() != before:
        raise RuntimeError("training mutated the dataset")
    return (best if history.best_epoch is not None else params), history


def _validation_ndcg(dataset: Dataset, splits: Splits, seed: int):
    cands = build_candidates(splits, dataset, SAMPLED, seed, "valid")

    def run(params: ModelParams) -> float:
        report = evaluate(DecayModel(params), splits, dataset, SAMPLED, ks=(10,), seed=seed,
                          split="valid", candidate_sets=cands)
        return report.ndcg[10]
    return run
