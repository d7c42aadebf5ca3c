"""Interaction-log ingestion, leave-one-out splitting and candidate sets."""
from __future__ import annotations

import hashlib
import io
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import CatalogTooSmall, EmptyDataset, ParseError, TruthMissing

FULL = "full"
SAMPLED = "sampled"


@dataclass(frozen=True)
class Dataset:
    """Per-user chronological item sequences with dense internal ids.

    Users are numbered ``0..num_users-1`` and items ``1..num_items``, both in
    order of first appearance; item id 0 is the pad symbol.
    """

    sequences: Mapping[int, tuple]
    num_users: int
    num_items: int
    user_ids: tuple = field(repr=False)
    item_ids: tuple = field(repr=False)  # item_ids[0] is None (pad)

    def __post_init__(self):
        object.__setattr__(self, "_user_index", {u: i for i, u in enumerate(self.user_ids)})
        object.__setattr__(
            self, "_item_index", {it: i for i, it in enumerate(self.item_ids) if i > 0}
        )

    def user_index(self, external) -> int:
        return self._user_index[external]

    def item_index(self, external) -> int:
        return self._item_index[external]

    def external_user(self, index: int):
        return self.user_ids[index]

    def external_item(self, index: int):
        return self.item_ids[index]

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.num_users}:{self.num_items}\n".encode())
        for user in sorted(self.sequences):
            h.update(f"{user}:{','.join(map(str, self.sequences[user]))}\n".encode())
        return h.hexdigest()


def ingest_events(events: Iterable[tuple]) -> Dataset:
    """Build a :class:`Dataset` from ``(user, item, timestamp)`` triples.

    Events may arrive in any order. Each user's items are sorted by timestamp,
    ties keeping input order, and repeated interactions are kept.
    """
    user_index: dict = {}
    item_index: dict = {}
    per_user: dict[int, list] = {}
    for pos, (user, item, ts) in enumerate(events):
        u = user_index.setdefault(user, len(user_index))
        i = item_index.setdefault(item, len(item_index) + 1)
        per_user.setdefault(u, []).append((ts, pos, i))
    if not per_user:
        raise EmptyDataset("no valid events")
    sequences = {u: tuple(i for _, _, i in sorted(evs)) for u, evs in per_user.items()}
    return Dataset(
        sequences=sequences,
        num_users=len(user_index),
        num_items=len(item_index),
        user_ids=tuple(user_index),
        item_ids=(None, *item_index),
    )


def parse_events(lines: Iterable[str], header: bool = False):
    """Yield ``(user, item, timestamp)`` from tab-separated lines.

    Blank lines and lines starting with ``#`` are skipped; a malformed row
    raises :class:`ParseError` carrying its 1-based line number.
    """
    first = True
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        if first and header:
            first = False
            continue
        first = False
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(f"expected 3 tab-separated fields, got {len(parts)}", lineno)
        user, item, ts = parts
        if not user or not item:
            raise ParseError("empty user or item field", lineno)
        try:
            ts = int(ts)
        except ValueError:
            raise ParseError(f"timestamp {ts!r} is not an integer", lineno) from None
        yield user, item, ts


def read_tsv(path, header: bool = False) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return ingest_events(parse_events(fh, header=header))


def write_tsv(events: Iterable[tuple], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for user, item, ts in events:
            fh.write(f"{user}\t{item}\t{ts}\n")


def dump_sequences(dataset: Dataset, out) -> None:
    """Write ``user<TAB>item1,item2,...`` per user using external ids."""
    if isinstance(out, (str, os.PathLike)):
        with open(out, "w", encoding="utf-8") as fh:
            return dump_sequences(dataset, fh)
    for u in range(dataset.num_users):
        items = ",".join(str(dataset.external_item(i)) for i in dataset.sequences[u])
        out.write(f"{dataset.external_user(u)}\t{items}\n")


def dumps_sequences(dataset: Dataset) -> str:
    buf = io.StringIO()
    dump_sequences(dataset, buf)
    return buf.getvalue()


@dataclass(frozen=True)
class Splits:
    train: Mapping[int, tuple]
    valid: Mapping[int, int]
    test: Mapping[int, int]

    @property
    def eval_users(self) -> list[int]:
        return sorted(self.test)

    def history(self, user: int, split: str) -> tuple:
        """Items seen before the held-out target of ``split`` ("valid" or "test")."""
        if split == "valid":
            return self.train[user]
        if split == "test":
            return self.train[user] + (self.valid[user],)
        raise ValueError(f"unknown split {split!r}")

    def target(self, user: int, split: str) -> int:
        return {"valid": self.valid, "test": self.test}[split][user]


def leave_one_out_split(dataset: Dataset) -> Splits:
    train, valid, test = {}, {}, {}
    for u, seq in dataset.sequences.items():
        if len(seq) < 3:
            train[u] = seq
            continue
        train[u], valid[u], test[u] = seq[:-2], seq[-2], seq[-1]
    return Splits(train, valid, test)


@dataclass(frozen=True)
class CandidateSet:
    kind: str
    items: np.ndarray
    truth: int


def full_candidates(num_items: int, truth: int) -> CandidateSet:
    if not 1 <= truth <= num_items:
        raise TruthMissing(f"item {truth} is not in the catalog 1..{num_items}")
    return CandidateSet(FULL, np.arange(1, num_items + 1), truth)


def sample_candidates(
    user: int, dataset: Dataset, truth: int, rng, k: int = 100
) -> CandidateSet:
    """Ground truth plus ``k`` distinct items the user never interacted with."""
    seen = set(dataset.sequences[user])
    if truth not in seen and not 1 <= truth <= dataset.num_items:
        raise TruthMissing(f"item {truth} is not in the catalog")
    pool = [i for i in range(1, dataset.num_items + 1) if i not in seen and i != truth]
    if len(pool) < k:
        raise CatalogTooSmall(
            f"user {user} has only {len(pool)} non-interacted items, {k} requested"
        )
    items = np.array([truth, *rng.sample(pool, k)], dtype=np.int64)
    return CandidateSet(SAMPLED, items, truth)
