"""Synthetic interaction logs drawn from a latent first-order Markov chain.

Clean trajectories follow a sparse random transition matrix; the observed
log then suffers adjacent transpositions and independent item dropout, the
kind of order and presence noise the augmentation operators imitate.
"""
from __future__ import annotations

import numpy as np

from .rng import RngStream

_SYNTH = 6


def transition_table(num_items: int, branching: int, gen: np.random.Generator):
    succ = np.stack([gen.choice(np.arange(1, num_items + 1), size=branching, replace=False)
                     for _ in range(num_items + 1)])
    probs = gen.dirichlet(np.ones(branching), size=num_items + 1)
    return succ, np.cumsum(probs, axis=1)


def markov_corpus(num_users: int = 2000, num_items: int = 500, seed: int = 0,
                  branching: int = 4, min_len: int = 10, max_len: int = 30,
                  transpose_prob: float = 0.2, dropout_prob: float = 0.1):
    """Return ``(user, item, timestamp)`` events for ``num_users`` noisy trajectories.

    Every observed sequence keeps at least three items so that it survives a
    leave-one-out split.
    """
    gen = RngStream(seed, _SYNTH).generator
    succ, cum = transition_table(num_items, branching, gen)
    events = []
    for user in range(num_users):
        length = int(gen.integers(min_len, max_len + 1))
        seq = [int(gen.integers(1, num_items + 1))]
        for _ in range(length - 1):
            row = seq[-1]
            k = min(int(np.searchsorted(cum[row], gen.random(), side="right")), branching - 1)
            seq.append(int(succ[row, k]))
        i = 0
        while i < len(seq) - 1:
            if gen.random() < transpose_prob:
                seq[i], seq[i + 1] = seq[i + 1], seq[i]
                i += 2
            else:
                i += 1
        keep = gen.random(len(seq)) >= dropout_prob
        observed = [item for item, k in zip(seq, keep) if k]
        if len(observed) < 3:
            observed = seq[-3:]
        events.extend((f"u{user}", f"i{item}", t) for t, item in enumerate(observed))
    return events
