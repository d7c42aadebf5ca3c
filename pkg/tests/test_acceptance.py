"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
import itertools
import time

import numpy as np
import pytest

from conftest import reachable_swaps
from seto.augment import (AugmentConfig, causal_partition, draw_swap, offset_weights, pad_left,
                          removal, swap)
from seto.data import ingest_events, leave_one_out_split
from seto.evaluation import evaluate, ndcg_at_k, rank_of_truth, recall_at_k
from seto.model import DecayModel, bpr_loss_and_grad
from seto.rng import RngStream
from seto.synthetic import markov_corpus
from seto.train import TrainConfig, epoch_pairs, train
from test_model import finite_difference, random_instance, reference_loss

# Criterion 6 setup: corpus generator defaults (branching 4, lengths 10..30),
# window covering the longest sequence, lr below the divergence threshold of
# the summed mini-batch gradient, and an epoch budget that fits five minutes.
DIRECTION_SEEDS = (0, 1, 2, 3, 4)
DIRECTION_TRAIN = dict(lr=0.01, dim=32, max_len=30, batch_size=128, max_epochs=50,
                       eval_every=5, patience_evals=2)


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def test_criterion_1_operator_exactness(capsys):
    start = time.perf_counter()
    weights = offset_weights(3, 0.5)
    ok_w = all(abs(a - b) <= 1e-9 for a, b in zip(weights, [4 / 7, 2 / 7, 1 / 7]))
    ok_pad = pad_left([3, 4], 5) == (0, 0, 0, 3, 4)
    ok_part = causal_partition([1, 2, 3, 4], 50) == ([1, 2, 3], [2, 3, 4])
    long = list(range(1, 61))
    inp, tgt = causal_partition(long, 50)
    ok_trunc = inp == list(range(11, 60)) and tgt == list(range(12, 61))
    elapsed = time.perf_counter() - start
    ok = ok_w and ok_pad and ok_part and ok_trunc and elapsed < 1
    assert report(capsys, 1, ok, f"weights={weights} pad={ok_pad} partition={ok_part and ok_trunc}"
                  f" {elapsed:.3f}s")


def test_criterion_2_distributional_fidelity(capsys):
    start = time.perf_counter()
    draws = 200_000
    rng = RngStream(2024)
    offsets = np.zeros(10)
    for _ in range(draws):
        offsets[draw_swap(20, 0.5, 0.5, True, rng).offset] += 1
    swap_err = np.abs(offsets / draws - offset_weights(10, 0.5)).max()

    rng = RngStream(2025)
    seq = list(range(1, 11))
    removed = np.zeros(6)
    for _ in range(draws):
        removed[10 - len(removal(seq, 0.5, True, rng))] += 1
    removal_err = np.abs(removed / draws - 1 / 6).max()
    elapsed = time.perf_counter() - start
    ok = swap_err <= 0.005 and removal_err <= 0.005 and elapsed < 10
    assert report(capsys, 2, ok, f"max offset err {swap_err:.4f}, max T err {removal_err:.4f},"
                  f" {elapsed:.1f}s")


def test_criterion_3_brute_force_oracle(capsys):
    start = time.perf_counter()
    rng = RngStream(3)
    scopes = (0.2, 0.5, 1.0)
    outside = 0
    checked = 0
    for length in range(1, 7):
        for seq in itertools.product(range(1, 7), repeat=length):
            scope = scopes[checked % 3]
            if tuple(swap(seq, 0.5, scope, True, rng)) not in reachable_swaps(seq, scope):
                outside += 1
            checked += 1

    uncovered = 0
    for scope in scopes:
        seq = (1, 2, 3, 4, 5, 6)
        expected = reachable_swaps(seq, scope)
        seen = {tuple(swap(seq, 0.5, scope, True, rng)) for _ in range(100_000 // 3 + 1)}
        uncovered += len(expected - seen) + len(seen - expected)
    elapsed = time.perf_counter() - start
    ok = outside == 0 and uncovered == 0 and elapsed < 30
    assert report(capsys, 3, ok, f"{checked} sequences, {outside} outside reachable set,"
                  f" {uncovered} coverage gaps, {elapsed:.1f}s")


@pytest.fixture(scope="module")
def direction_runs():
    """Train op=None and op=Swap on the same corpus for every seed, once."""
    runs = []
    start = time.perf_counter()
    for seed in DIRECTION_SEEDS:
        dataset = ingest_events(markov_corpus(num_users=2000, num_items=500, seed=seed,
                                              transpose_prob=0.2, dropout_prob=0.1))
        splits = leave_one_out_split(dataset)
        cfg = TrainConfig(seed=seed, **DIRECTION_TRAIN)
        row = {"seed": seed, "dataset": dataset, "splits": splits,
               "hash": dataset.content_hash()}
        for op in ("none", "swap"):
            aug = AugmentConfig(op=op, alpha=0.5, scope=0.5, apply_to="both",
                                max_len=cfg.max_len)
            params, _ = train(dataset, aug, cfg, splits=splits)
            row[op] = evaluate(DecayModel(params), splits, dataset, "sampled", ks=(10,),
                               seed=seed, split="valid").recall[10]
        row["hash_after"] = dataset.content_hash()
        runs.append(row)
    return runs, time.perf_counter() - start


def test_criterion_4_temporariness(direction_runs, capsys):
    runs, _ = direction_runs
    hash_ok = all(r["hash"] == r["hash_after"] for r in runs)
    splits = runs[0]["splits"]
    users = sorted(u for u, seq in splits.train.items() if len(seq) >= 2)
    aug = AugmentConfig(op="swap", alpha=0.5, scope=0.5, max_len=DIRECTION_TRAIN["max_len"])

    def pairs(epoch):
        return {u: p for _, items in epoch_pairs(splits.train, users, aug, 0, epoch, 128)
                for u, p, _ in items}
    first, second = pairs(1), pairs(2)
    differing = sum(first[u] != second[u] for u in users)
    ok = hash_ok and differing > 0
    assert report(capsys, 4, ok, f"hash unchanged={hash_ok}, {differing}/{len(users)} pairs"
                  " differ between epochs 1 and 2")


def test_criterion_5_gradient_correctness(capsys):
    start = time.perf_counter()
    worst = 0.0
    for seed in range(20):
        params, *args = random_instance(100 + seed, dim=4, L=6)
        _, _, grads = bpr_loss_and_grad(params, *args, 0.01)
        fd = finite_difference(params, args, 0.01, eps=1e-4)
        for name in "Ebw":
            a, n = getattr(grads, name), fd[name]
            worst = max(worst, np.linalg.norm(a - n) / max(np.linalg.norm(n), 1e-12))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-5 and elapsed < 5
    assert report(capsys, 5, ok, f"worst relative error {worst:.2e} over 20 instances,"
                  f" {elapsed:.2f}s")


def test_criterion_6_direction_of_effect(direction_runs, capsys):
    runs, elapsed = direction_runs
    none = np.array([r["none"] for r in runs])
    swapped = np.array([r["swap"] for r in runs])
    wins = int((swapped >= none).sum())
    ok = wins >= 4 and swapped.mean() > none.mean() and elapsed < 300
    per_seed = ", ".join(f"s{r['seed']}: {r['none']:.4f}->{r['swap']:.4f}" for r in runs)
    assert report(capsys, 6, ok, f"swap>=none in {wins}/5 seeds, mean {none.mean():.4f}"
                  f" -> {swapped.mean():.4f} ({per_seed}), {elapsed:.0f}s")


def test_criterion_7_scope_zero_equivalence(capsys):
    start = time.perf_counter()
    dataset = ingest_events(markov_corpus(num_users=300, num_items=200, seed=7))
    cfg = TrainConfig(lr=0.01, dim=16, max_len=30, max_epochs=5, eval_every=5, seed=7)
    _, base = train(dataset, AugmentConfig(op="none", max_len=30), cfg)
    _, zero = train(dataset, AugmentConfig(op="swap", scope=0.0, max_len=30), cfg)
    elapsed = time.perf_counter() - start
    ok = base.losses == zero.losses and elapsed < 60
    assert report(capsys, 7, ok, f"{len(base.losses)} epoch losses bit-identical="
                  f"{base.losses == zero.losses}, {elapsed:.1f}s")


def test_criterion_8_metric_correctness(capsys):
    start = time.perf_counter()
    gen = RngStream(8).generator
    cands = np.arange(101)
    hits = [recall_at_k(rank_of_truth(gen.random(101), cands, 0), 10) for _ in range(10_000)]
    recall = float(np.mean(hits))
    ndcg = ndcg_at_k(3, 10)
    elapsed = time.perf_counter() - start
    ok = abs(recall - 10 / 101) <= 0.01 and ndcg == 0.5 and elapsed < 5
    assert report(capsys, 8, ok, f"random recall@10 {recall:.4f} (target {10 / 101:.4f}),"
                  f" ndcg(3,10)={ndcg}, {elapsed:.2f}s")


def test_criterion_9_protocol_conformance(capsys):
    start = time.perf_counter()
    dataset = ingest_events(markov_corpus(num_users=60, num_items=150, seed=9, min_len=2,
                                          max_len=10))
    patience = 3
    metrics = iter(np.linspace(1.0, 0.0, 100))
    cfg = TrainConfig(lr=0.01, dim=4, max_len=10, max_epochs=50, eval_every=1,
                      patience_evals=patience, seed=9)
    _, hist = train(dataset, AugmentConfig(max_len=10), cfg, evaluator=lambda p: next(metrics))
    stop_ok = len(hist.evals) == patience + 1 and hist.epochs == patience + 1

    splits = leave_one_out_split(dataset)
    rebuilt = all(
        (splits.train[u] + ((splits.valid[u], splits.test[u]) if u in splits.test else ()))
        == seq for u, seq in dataset.sequences.items())
    elapsed = time.perf_counter() - start
    ok = stop_ok and rebuilt and elapsed < 5
    assert report(capsys, 9, ok, f"stopped after {len(hist.evals)} evals (patience {patience}),"
                  f" split reconstructs all={rebuilt}, {elapsed:.2f}s")
