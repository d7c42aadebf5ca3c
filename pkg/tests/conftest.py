import itertools
import math

import pytest


class ScriptedRng:
    """Stand-in stream that replays fixed draws, in call order."""

    def __init__(self, *draws):
        self.draws = list(draws)

    def _next(self):
        if not self.draws:
            raise AssertionError("scripted draws exhausted")
        return self.draws.pop(0)

    def randint(self, n):
        value = self._next()
        assert 0 <= value < n, (value, n)
        return value

    def categorical(self, cum_weights):
        value = self._next()
        assert 0 <= value < len(cum_weights)
        return value

    def sign(self):
        value = self._next()
        assert value in (-1, 1)
        return value


@pytest.fixture
def scripted():
    return ScriptedRng


def reachable_swaps(seq, scope):
    """Every output a constrained Swap can give, by enumerating transpositions."""
    n = len(seq)
    reach = max(math.floor(n * scope), 1)
    out = {tuple(seq)}
    for i, j in itertools.combinations(range(n), 2):
        if j - i <= reach - 1:
            s = list(seq)
            s[i], s[j] = s[j], s[i]
            out.add(tuple(s))
    return out


def is_subsequence(small, big):
    it = iter(big)
    return all(any(x == y for y in it) for x in small)
