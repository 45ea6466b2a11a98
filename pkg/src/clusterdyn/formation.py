"""Minimum VI between formations, and sizes of the clustering spaces.

Given two formations (multisets of cluster sizes) over ``n`` nodes, the
formation part of VI is the smallest VI attainable by any pair of clusterings
with those formations. Every such pair is summarized by an integer matrix
with the formations as row and column sums, so the search runs over the
integer points of a transportation polytope.

Because the row/column margins are fixed, minimizing VI is the same as
maximizing ``sum(m * log2(m))`` over the cells, which is what both solvers
optimize internally. Reported values are always recomputed cell by cell
from the witness matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .core import Clustering, ConfusionMatrix, Formation, confusion, formation_of
from .metric import vi_from_counts

__all__ = [
    "FormationError",
    "FormationTransition",
    "SpaceCounts",
    "DEFAULT_EXACT_LIMIT",
    "min_formation_vi_exact",
    "min_formation_vi_heuristic",
    "vif_for_transition",
    "count_spaces",
    "partition_count",
    "bell_number",
    "bell_no_singletons",
]

DEFAULT_EXACT_LIMIT = 10
_EPS = 1e-12


class FormationError(ValueError):
    pass


@dataclass(frozen=True)
class FormationTransition:
    source: Formation
    dest: Formation
    min_vi: float
    witness: ConfusionMatrix


def _xlogx(m: int) -> float:
    return m * math.log2(m) if m > 1 else 0.0


def _check_pair(f1: Formation, f2: Formation) -> None:
    if f1.n != f2.n:
        raise FormationError(f"formations cover different node counts: {f1.n} vs {f2.n}")
    if f1.n == 0:
        raise FormationError("formations are empty")


def _transition(f1: Formation, f2: Formation, counts) -> FormationTransition:
    cm = ConfusionMatrix.from_counts(counts)
    return FormationTransition(f1, f2, vi_from_counts(cm), cm)


# --------------------------------------------------------------------------
# exact solver


def min_formation_vi_exact(
    f1: Formation, f2: Formation, limit: int = DEFAULT_EXACT_LIMIT
) -> FormationTransition:
    """Global minimum over every integer matrix with margins ``f1``/``f2``.

    Rows are filled one at a time; the best completion for a given row index
    and vector of residual column capacities is memoized, which prunes the
    enumeration to distinct states without skipping any feasible matrix.
    """
    _check_pair(f1, f2)
    if f1.n > limit:
        raise FormationError(f"n={f1.n} exceeds the exact-solver limit {limit}")
    rows = f1.sizes
    cols = f2.sizes
    k, l = len(rows), len(cols)

    @lru_cache(maxsize=None)
    def best(i: int, residual: tuple[int, ...]) -> tuple[float, tuple[tuple[int, ...], ...]]:
        if i == k:
            return 0.0, ()
        top_score = -math.inf
        top_rows: tuple = ()
        for row in _row_fillings(rows[i], residual):
            rest = tuple(r - v for r, v in zip(residual, row))
            score, tail = best(i + 1, rest)
            score += sum(_xlogx(v) for v in row)
            if score > top_score + _EPS:
                top_score, top_rows = score, (row,) + tail
        return top_score, top_rows

    _, witness = best(0, tuple(cols))
    return _transition(f1, f2, np.array(witness, dtype=np.int64).reshape(k, l))


def _row_fillings(total: int, capacity: tuple[int, ...]):
    """All non-negative vectors bounded by ``capacity`` summing to ``total``."""
    suffix = [0] * (len(capacity) + 1)
    for j in range(len(capacity) - 1, -1, -1):
        suffix[j] = suffix[j + 1] + capacity[j]
    row = [0] * len(capacity)

    def rec(j: int, left: int):
        if j == len(capacity):
            if left == 0:
                yield tuple(row)
            return
        lo = max(0, left - suffix[j + 1])
        for v in range(min(capacity[j], left), lo - 1, -1):
            row[j] = v
            yield from rec(j + 1, left - v)
        row[j] = 0

    if total <= suffix[0]:
        yield from rec(0, total)


# --------------------------------------------------------------------------
# heuristic


def _greedy(rows: tuple[int, ...], cols: tuple[int, ...], equal_first: bool) -> np.ndarray:
    """Largest-to-largest mass assignment.

    With ``equal_first`` every row is first paired with an equal-sized column
    where one exists, since such a pair costs nothing.
    """
    r = list(rows)
    c = list(cols)
    m = np.zeros((len(r), len(c)), dtype=np.int64)
    if equal_first:
        for i in range(len(r)):
            for j in range(len(c)):
                if r[i] and r[i] == c[j]:
                    m[i, j] = r[i]
                    r[i] = c[j] = 0
                    break
    while True:
        best = None
        for i, ri in enumerate(r):
            if not ri:
                continue
            for j, cj in enumerate(c):
                if not cj:
                    continue
                cand = (min(ri, cj), ri == cj, -i, -j)
                if best is None or cand > best:
                    best = cand
        if best is None:
            return m
        amount, _, i, j = best
        i, j = -i, -j
        m[i, j] += amount
        r[i] -= amount
        c[j] -= amount


def _local_search(m: np.ndarray) -> np.ndarray:
    """Exchange improvement on 2x2 sub-matrices until no move helps.

    A move shifts ``d`` units from cells (i, l) and (k, j) onto (i, j) and
    (k, l), which keeps every margin. Best improvement per sweep.
    """
    m = m.copy()
    g = [_xlogx(v) for v in range(int(m.sum()) + 1)]
    while True:
        nz = list(zip(*np.nonzero(m)))
        best_gain = _EPS
        best_move = None
        for a in range(len(nz)):
            i, l = nz[a]
            for b in range(len(nz)):
                k, j = nz[b]
                if k == i or j == l:
                    continue
                mil, mkj, mij, mkl = m[i, l], m[k, j], m[i, j], m[k, l]
                base = g[mil] + g[mkj] + g[mij] + g[mkl]
                for d in range(1, min(mil, mkj) + 1):
                    gain = g[mil - d] + g[mkj - d] + g[mij + d] + g[mkl + d] - base
                    if gain > best_gain:
                        best_gain = gain
                        best_move = (i, l, k, j, d)
        if best_move is None:
            return m
        i, l, k, j, d = best_move
        m[i, l] -= d
        m[k, j] -= d
        m[i, j] += d
        m[k, l] += d


def _objective(m: np.ndarray) -> float:
    return math.fsum(_xlogx(int(v)) for v in m.ravel() if v > 1)


@lru_cache(maxsize=65536)
def _heuristic_oriented(rows: tuple[int, ...], cols: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    starts = (_greedy(rows, cols, True), _greedy(rows, cols, False))
    candidates = [_local_search(s) for s in starts]
    best = max(candidates, key=_objective)
    return tuple(tuple(int(v) for v in row) for row in best)


def _canonical_seed(counts: np.ndarray) -> np.ndarray:
    # rows and columns by descending margin, then lexicographically
    m = np.asarray(counts, dtype=np.int64)
    rows = sorted(range(m.shape[0]), key=lambda i: (-m[i].sum(), tuple(-m[i])))
    m = m[rows]
    cols = sorted(range(m.shape[1]), key=lambda j: (-m[:, j].sum(), tuple(-m[:, j])))
    return m[:, cols]


@lru_cache(maxsize=65536)
def _seeded_search(seed: tuple[tuple[int, ...], ...]) -> tuple[tuple[int, ...], ...]:
    out = _local_search(np.array(seed, dtype=np.int64))
    return tuple(tuple(int(v) for v in row) for row in out)


def min_formation_vi_heuristic(
    f1: Formation, f2: Formation, seed: Optional[ConfusionMatrix] = None
) -> FormationTransition:
    """Feasible upper bound on the formation minimum.

    Two greedy constructions are each improved by 2x2 exchanges; when a
    ``seed`` matrix realizing the formations is given it is improved the same
    way and competes with them, so the result never exceeds the seed's VI.
    The pair is solved in a fixed orientation and transposed back, which
    makes the answer symmetric in ``f1``/``f2``.
    """
    _check_pair(f1, f2)
    if seed is not None and not seed.realizes(f1, f2):
        raise FormationError(
            f"seed margins {seed.row_formation}->{seed.col_formation} do not realize {f1}->{f2}"
        )
    flip = f1.sizes > f2.sizes
    rows, cols = (f2.sizes, f1.sizes) if flip else (f1.sizes, f2.sizes)
    best = np.array(_heuristic_oriented(rows, cols), dtype=np.int64)
    if flip:
        best = best.T
    result = _transition(f1, f2, best)
    if seed is None or vi_from_counts(seed) >= result.min_vi:
        return result
    improved = np.array(_seeded_search(_tuple_matrix(_canonical_seed(seed.counts))), dtype=np.int64)
    candidate = _transition(f1, f2, improved)
    if candidate.min_vi < result.min_vi:
        return candidate
    return result


def _tuple_matrix(m: np.ndarray) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(v) for v in row) for row in m)


def vif_for_transition(x: Clustering, y: Clustering) -> float:
    """Formation part of ``vi(x, y)``; never exceeds the total VI."""
    if x.clusters == y.clusters:
        return 0.0
    seed = confusion(x, y)
    f1, f2 = formation_of(x), formation_of(y)
    if f1 == f2:
        return 0.0
    return min_formation_vi_heuristic(f1, f2, seed).min_vi


# --------------------------------------------------------------------------
# counting


@dataclass(frozen=True)
class SpaceCounts:
    n: int
    min_part: int
    partitions: int
    partitions_no_singletons: int
    bell: int
    bell_no_singletons: int


def partition_count(n: int, min_part: int = 1) -> int:
    """Number of integer partitions of ``n`` with every part ``>= min_part``."""
    if n < 0:
        return 0
    ways = [1] + [0] * n
    for part in range(max(min_part, 1), n + 1):
        for total in range(part, n + 1):
            ways[total] += ways[total - part]
    return ways[n]


def bell_number(n: int) -> int:
    """Bell number via the Bell triangle."""
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def bell_no_singletons(n: int) -> int:
    """Set partitions of ``n`` elements without singleton blocks.

    Every set partition splits uniquely into its singletons (``k`` of them)
    and a singleton-free partition of the rest, hence
    ``B(n) = sum_k C(n, k) * a(n - k)``, solved for ``a(n)``.
    """
    a = [1]
    for m in range(1, n + 1):
        a.append(bell_number(m) - sum(math.comb(m, k) * a[m - k] for k in range(1, m + 1)))
    return a[n]


def count_spaces(n: int, min_part: int = 1) -> SpaceCounts:
    if not 1 <= n <= 40:
        raise FormationError(f"n must lie in [1, 40], got {n}")
    if min_part < 1:
        raise FormationError(f"min_part must be >= 1, got {min_part}")
    return SpaceCounts(
        n=n,
        min_part=min_part,
        partitions=partition_count(n, min_part),
        partitions_no_singletons=partition_count(n, max(2, min_part)),
        bell=bell_number(n),
        bell_no_singletons=bell_no_singletons(n),
    )
