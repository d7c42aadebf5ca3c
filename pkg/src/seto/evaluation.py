"""Leave-one-out ranking evaluation with Recall@K and NDCG@K."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import FULL, SAMPLED, Dataset, Splits, full_candidates, sample_candidates
from .errors import TruthMissing
from .rng import CANDIDATES, RngStream

CANDIDATE_LABELS = {SAMPLED: "sampled100", FULL: "full"}


def rank_of_truth(scores, candidates, truth: int) -> int:
    """1-based rank of ``truth``; equal-scored candidates are ranked ahead of it."""
    scores = np.asarray(scores)
    hits = np.flatnonzero(np.asarray(candidates) == truth)
    if hits.size == 0:
        raise TruthMissing(f"truth item {truth} not among candidates")
    truth_score = scores[hits[0]]
    return int(np.sum(scores >= truth_score)) - hits.size + 1


def recall_at_k(rank: int, k: int) -> float:
    return 1.0 if rank <= k else 0.0


def ndcg_at_k(rank: int, k: int) -> float:
    return 1.0 / math.log2(rank + 1) if rank <= k else 0.0


@dataclass
class EvalReport:
    ks: tuple
    recall: dict
    ndcg: dict
    users: int
    candidates: str
    ranks: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        out = {}
        for k in self.ks:
            out[f"recall@{k}"] = self.recall[k]
            out[f"ndcg@{k}"] = self.ndcg[k]
        out["users"] = self.users
        out["candidates"] = CANDIDATE_LABELS.get(self.candidates, self.candidates)
        return out

    def to_record(self) -> str:
        """Tab-separated ``metric<TAB>value`` lines followed by a JSON one-liner."""
        d = self.to_dict()
        lines = [f"{key}\t{value}" for key, value in d.items()]
        lines.append(json.dumps(d))
        return "\n".join(lines) + "\n"


def build_candidates(splits: Splits, dataset: Dataset, candidates: str = SAMPLED,
                     seed: int = 0, split: str = "valid", num_negatives: int = 100) -> dict:
    """Candidate set per evaluated user, fixed by (seed, user)."""
    out = {}
    for u in splits.eval_users:
        truth = splits.target(u, split)
        if candidates == SAMPLED:
            out[u] = sample_candidates(u, dataset, truth, RngStream(seed, CANDIDATES, u),
                                       k=num_negatives)
        elif candidates == FULL:
            out[u] = full_candidates(dataset.num_items, truth)
        else:
            raise ValueError(f"unknown candidate kind {candidates!r}")
    return out


def evaluate(model, splits: Splits, dataset: Dataset, candidates: str = SAMPLED,
             ks=(10,), seed: int = 0, split: str = "valid", num_negatives: int = 100,
             candidate_sets: dict | None = None, chunk: int = 512) -> EvalReport:
    """Rank each eligible user's held-out item given their preceding history.

    ``model`` only needs ``score_all(histories)`` returning a score row over
    item ids ``0..num_items`` per history. Sampled candidates are fixed per
    (seed, user) so repeated evaluations see the same distractors; pass the
    output of :func:`build_candidates` as ``candidate_sets`` to reuse them.
    """
    ks = tuple(sorted(set(int(k) for k in ks)))
    if candidate_sets is None:
        candidate_sets = build_candidates(splits, dataset, candidates, seed, split, num_negatives)
    users = splits.eval_users
    ranks = []
    for start in range(0, len(users), chunk):
        block = users[start:start + chunk]
        scores = model.score_all([splits.history(u, split) for u in block])
        for row, u in zip(scores, block):
            cand = candidate_sets[u]
            ranks.append(rank_of_truth(row[cand.items], cand.items, cand.truth))
    n = len(ranks)
    recall = {k: (math.fsum(recall_at_k(r, k) for r in ranks) / n if n else 0.0) for k in ks}
    ndcg = {k: (math.fsum(ndcg_at_k(r, k) for r in ranks) / n if n else 0.0) for k in ks}
    return EvalReport(ks, recall, ndcg, n, candidates, ranks)
