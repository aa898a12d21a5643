"""Multi-index bookkeeping for the hierarchy.

States are all (j_1..j_K) with sum <= n_max, ordered by total phonon
number n ascending (so per-level slices are contiguous) and
colexicographically within each level.  Neighbor tables give O(1) lookups
for the ladder couplings.
"""

from dataclasses import dataclass, field
from math import comb

import numpy as np

ABSENT = -1

DEFAULT_STATE_BUDGET = 2_000_000


class HierarchySizeError(Exception):
    pass


def state_count(num_modes, n_max):
    """Number of multi-indices with sum <= n_max: C(n_max + K, K)."""
    return comb(n_max + num_modes, num_modes)


def _compositions(total, parts):
    """Compositions of `total` into `parts` parts, colex ascending."""
    if parts == 1:
        yield (total,)
        return
    for last in range(total + 1):
        for head in _compositions(total - last, parts - 1):
            yield head + (last,)


@dataclass(frozen=True)
class IndexSpace:
    """Enumerated multi-index set with rank/unrank and neighbor tables."""

    num_modes: int
    n_max: int
    size: int
    indices: np.ndarray = field(repr=False)       # size x K
    level_start: np.ndarray = field(repr=False)   # n -> first state of level n
    lower: np.ndarray = field(repr=False)         # size x K, ABSENT if j_k = 0
    raise_: np.ndarray = field(repr=False)        # size x K, ABSENT at the top
    _rank: dict = field(repr=False, default_factory=dict)

    def rank(self, j):
        """Ordinal of a multi-index; raises KeyError outside the space."""
        j = tuple(int(x) for x in j)
        return self._rank[j]

    def unrank(self, s):
        """Multi-index of ordinal s."""
        if not 0 <= s < self.size:
            raise IndexError(f"state {s} outside [0, {self.size})")
        return tuple(int(x) for x in self.indices[s])

    def level_of(self, s):
        return int(self.indices[s].sum())

    def level_slice(self, n):
        """Contiguous slice of the states with total phonon number n."""
        return slice(int(self.level_start[n]), int(self.level_start[n + 1]))

    def shift(self, s, k, kp):
        """raise(lower(s, k), kp); ABSENT if j_k = 0."""
        m = self.lower[s, k]
        return ABSENT if m == ABSENT else int(self.raise_[m, kp])


def enumerate_space(num_modes, n_max, budget=DEFAULT_STATE_BUDGET):
    """Build the IndexSpace for K modes truncated at total number n_max."""
    if num_modes < 1 or n_max < 0:
        raise ValueError("need num_modes >= 1 and n_max >= 0")
    total = state_count(num_modes, n_max)
    if total > budget:
        raise HierarchySizeError(
            f"hierarchy needs {total} states for K={num_modes}, "
            f"n_max={n_max}, above the budget of {budget}"
        )

    tuples = []
    level_start = np.zeros(n_max + 2, dtype=np.int64)
    for n in range(n_max + 1):
        level_start[n] = len(tuples)
        tuples.extend(_compositions(n, num_modes))
    level_start[n_max + 1] = len(tuples)
    indices = np.array(tuples, dtype=np.int64)
    rank = {t: i for i, t in enumerate(tuples)}

    lower = np.full((total, num_modes), ABSENT, dtype=np.int64)
    raise_ = np.full((total, num_modes), ABSENT, dtype=np.int64)
    for s, j in enumerate(tuples):
        n = sum(j)
        for k in range(num_modes):
            if j[k] > 0:
                lower[s, k] = rank[j[:k] + (j[k] - 1,) + j[k + 1:]]
            if n < n_max:
                raise_[s, k] = rank[j[:k] + (j[k] + 1,) + j[k + 1:]]

    return IndexSpace(num_modes, n_max, total, indices, level_start, lower, raise_, rank)
