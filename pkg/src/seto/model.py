"""Reference sequence scorers.

``DecayModel`` builds a context vector at every position as a decay-weighted
sum of the embeddings seen so far,

    h[t] = sum_{k <= t, x[k] != pad} w[t - k] * E[x[k]],

and scores item ``j`` at that position as ``h[t] . E[j] + b[j]``. It trains
with a BPR loss and plain SGD on hand-derived gradients. ``MarkovModel`` is a
count-based first-order baseline.
"""
from __future__ import annotations

import struct
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from .augment import PAD
from .errors import InvalidParam, NumericalError
from .rng import INIT, RngStream

MAGIC = b"SETO"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIII")


@dataclass
class ModelParams:
    E: np.ndarray  # (num_items + 1, d); row 0 is the pad and stays zero
    b: np.ndarray  # (num_items + 1,); b[0] stays zero
    w: np.ndarray  # (L,); w[delta] weighs the item delta steps back

    @property
    def num_items(self) -> int:
        return self.E.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.E.shape[1]

    @property
    def max_len(self) -> int:
        return self.w.shape[0]

    def copy(self) -> ModelParams:
        return ModelParams(self.E.copy(), self.b.copy(), self.w.copy())

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.E).all() and np.isfinite(self.b).all() and np.isfinite(self.w).all())


def init_params(num_items: int, dim: int, max_len: int, seed: int = 0,
                decay: float = 0.8, scale: float = 0.05) -> ModelParams:
    gen = RngStream(seed, INIT).generator
    E = gen.uniform(-scale, scale, size=(num_items + 1, dim))
    E[PAD] = 0.0
    return ModelParams(E, np.zeros(num_items + 1), decay ** np.arange(max_len, dtype=np.float64))


def _decay_matrix(w: np.ndarray) -> np.ndarray:
    L = w.shape[0]
    delta = np.subtract.outer(np.arange(L), np.arange(L))
    return np.where(delta >= 0, w[np.clip(delta, 0, None)], 0.0)


def context_vectors(params: ModelParams, inputs) -> np.ndarray:
    """Context vector at every position; ``inputs`` is (L,) or (B, L)."""
    X = np.asarray(inputs)
    squeeze = X.ndim == 1
    X = np.atleast_2d(X)
    emb = params.E[X] * (X != PAD)[..., None]
    H = _decay_matrix(params.w) @ emb
    return H[0] if squeeze else H


def score(params: ModelParams, h: np.ndarray, item: int) -> float:
    return float(h @ params.E[item] + params.b[item])


@dataclass
class Gradients:
    E: np.ndarray
    b: np.ndarray
    w: np.ndarray


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _scatter_rows(shape, *parts):
    """Sum value rows into a zero matrix at (possibly repeated) row indices."""
    rows, dim = shape
    idx = np.concatenate([np.ravel(i) for i, _ in parts])
    vals = np.concatenate([v.reshape(-1, dim) for _, v in parts])
    flat = (idx[:, None] * dim + np.arange(dim)).ravel()
    return np.bincount(flat, weights=vals.ravel(), minlength=rows * dim).reshape(rows, dim)


def bpr_loss_and_grad(params: ModelParams, inputs, targets, negatives, l2: float = 0.0):
    """Summed BPR loss over non-pad target positions and its gradient.

    Each scored position contributes ``-ln sigmoid(pos - neg)`` plus
    ``l2 * (|E[pos]|^2 + |E[neg]|^2 + b[pos]^2 + b[neg]^2)``.

    Returns ``(total_loss, num_positions, Gradients)``.
    """
    X = np.atleast_2d(np.asarray(inputs))
    P = np.atleast_2d(np.asarray(targets))
    N = np.atleast_2d(np.asarray(negatives))
    if not X.shape == P.shape == N.shape:
        raise InvalidParam(f"shape mismatch: {X.shape}, {P.shape}, {N.shape}")
    B, L = X.shape
    if L != params.max_len:
        raise InvalidParam(f"sequence length {L} != model max_len {params.max_len}")
    mask = P != PAD
    if np.any(mask & (N == PAD)):
        raise InvalidParam("negative item missing at a scored position")
    N = np.where(mask, N, PAD)

    in_mask = (X != PAD)[..., None]
    emb_x = params.E[X] * in_mask
    D = _decay_matrix(params.w)
    H = D @ emb_x
    emb_p, emb_n = params.E[P], params.E[N]
    delta = np.einsum("btd,btd->bt", H, emb_p - emb_n) + params.b[P] - params.b[N]

    m = mask.astype(np.float64)
    reg = (np.einsum("btd,btd->bt", emb_p, emb_p) + np.einsum("btd,btd->bt", emb_n, emb_n)
           + params.b[P] ** 2 + params.b[N] ** 2)
    total = float(np.sum(m * (-_log_sigmoid(delta) + l2 * reg)))
    count = int(mask.sum())

    # d(-ln sigmoid(x))/dx = -sigmoid(-x)
    g = -m * np.exp(_log_sigmoid(-delta))
    gH = g[..., None] * (emb_p - emb_n)

    gx = (D.T @ gH) * in_mask
    gE = _scatter_rows(
        params.E.shape,
        (P, g[..., None] * H + 2.0 * l2 * m[..., None] * emb_p),
        (N, -g[..., None] * H + 2.0 * l2 * m[..., None] * emb_n),
        (X, gx),
    )
    gb = np.bincount(np.concatenate([P.ravel(), N.ravel()]),
                     weights=np.concatenate([(g + 2.0 * l2 * m * params.b[P]).ravel(),
                                             (-g + 2.0 * l2 * m * params.b[N]).ravel()]),
                     minlength=params.b.shape[0])

    # M[t, k] = gH[t] . E[x[k]] summed over the batch; dw[delta] sums diagonal delta.
    M = np.einsum("btd,bkd->tk", gH, emb_x, optimize=True)
    rows, cols = np.tril_indices(L)
    gw = np.bincount(rows - cols, weights=M[rows, cols], minlength=L)

    gE[PAD] = 0.0
    gb[PAD] = 0.0
    return total, count, Gradients(gE, gb, gw)


def bpr_step(params: ModelParams, inputs, targets, negatives, lr: float, l2: float = 0.0) -> float:
    """One SGD step on the summed BPR loss; returns the mean per-position loss.

    Accepts a single pair (1-D arrays) or a batch (2-D arrays). Raises
    :class:`NumericalError` if the loss or updated parameters are not finite.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        total, count, grads = bpr_loss_and_grad(params, inputs, targets, negatives, l2)
    if not np.isfinite(total):
        raise NumericalError(f"non-finite loss {total}; learning rate too high?")
    if lr:
        with np.errstate(over="ignore", invalid="ignore"):
            params.E -= lr * grads.E
            params.b -= lr * grads.b
            params.w -= lr * grads.w
        if not params.is_finite():
            raise NumericalError("parameters became non-finite; learning rate too high?")
    return total / count if count else 0.0


class DecayModel:
    """Scores the next item from the context at the last history position."""

    def __init__(self, params: ModelParams):
        self.params = params

    def score_all(self, histories) -> np.ndarray:
        """Score matrix ``(len(histories), num_items + 1)``; column 0 is the pad."""
        L = self.params.max_len
        X = np.zeros((len(histories), L), dtype=np.int64)
        for row, hist in enumerate(histories):
            tail = list(hist)[-L:]
            if tail:
                X[row, L - len(tail):] = tail
        emb = self.params.E[X] * (X != PAD)[..., None]
        h = np.einsum("k,bkd->bd", self.params.w[::-1], emb)
        return h @ self.params.E.T + self.params.b


def save_checkpoint(params: ModelParams, path) -> None:
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, params.num_items, params.dim, params.max_len)
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in (params.E, params.b, params.w):
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path) -> ModelParams:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise InvalidParam(f"{path}: truncated checkpoint header")
    magic, version, num_items, dim, max_len = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise InvalidParam(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise InvalidParam(f"{path}: unsupported checkpoint version {version}")
    sizes = [(num_items + 1) * dim, num_items + 1, max_len]
    if len(blob) != _HEADER.size + 4 * sum(sizes):
        raise InvalidParam(f"{path}: payload size does not match header")
    flat = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).astype(np.float64)
    E, b, w = np.split(flat, np.cumsum(sizes)[:-1])
    return ModelParams(E.reshape(num_items + 1, dim), b, w)


@dataclass
class MarkovModel:
    transitions: dict  # item -> Counter of successors
    popularity: np.ndarray  # (num_items + 1,)

    @property
    def num_items(self) -> int:
        return self.popularity.shape[0] - 1

    def score_all(self, histories) -> np.ndarray:
        return np.stack([markov_scores(self, hist[-1] if len(hist) else PAD) for hist in histories])


def markov_fit(sequences, num_items: int) -> MarkovModel:
    transitions = defaultdict(Counter)
    popularity = np.zeros(num_items + 1)
    for seq in sequences:
        for item in seq:
            popularity[item] += 1
        for prev, nxt in zip(seq, seq[1:]):
            transitions[prev][nxt] += 1
    return MarkovModel(dict(transitions), popularity)


def markov_scores(model: MarkovModel, last: int) -> np.ndarray:
    """Transition counts from ``last``, with popularity as tie-break and fallback.

    Popularity is scaled into [0, 1) so it can only reorder items with equal
    transition counts.
    """
    pop = model.popularity
    scores = pop / (pop.max() + 1.0)
    for item, count in model.transitions.get(last, {}).items():
        scores[item] += count
    scores[PAD] = 0.0
    return scores
