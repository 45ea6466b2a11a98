import itertools
import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.utilities.iterables import multiset_partitions

from clusterdyn.core import ConfusionMatrix, Formation, confusion, formation_of, make_clustering
from clusterdyn.formation import (
    FormationError,
    bell_no_singletons,
    bell_number,
    count_spaces,
    min_formation_vi_exact,
    min_formation_vi_heuristic,
    partition_count,
    vif_for_transition,
)
from clusterdyn.metric import vi, vi_from_counts
from clusterdyn.oracle import integer_partitions

from conftest import random_partition, set_partitions

F = lambda *s: Formation(s)  # noqa: E731

# regression baseline, confirmed optimal by the exact solver (see test_worked_pair_heuristic_is_optimal)
WORKED_VIF = 0.5151886656916783


def brute_force_min(f1: Formation, f2: Formation) -> float:
    """Every integer matrix with the given margins, no pruning at all."""
    rows, cols = f1.sizes, f2.sizes
    best = math.inf
    ranges = [range(min(r, c) + 1) for r in rows for c in cols]
    for flat in itertools.product(*ranges):
        m = np.array(flat).reshape(len(rows), len(cols))
        if tuple(m.sum(1)) == rows and tuple(m.sum(0)) == cols:
            best = min(best, vi_from_counts(ConfusionMatrix.from_counts(m)))
    return best


def test_exact_examples():
    assert min_formation_vi_exact(F(2, 2), F(2, 2)).min_vi == 0.0
    assert min_formation_vi_exact(F(4), F(2, 2)).min_vi == pytest.approx(1.0)
    assert brute_force_min(F(2, 2), F(3, 1)) == pytest.approx(1.188721875540867)
    assert min_formation_vi_exact(F(2, 2), F(3, 1)).min_vi == pytest.approx(1.188721875540867, abs=1e-12)


def test_exact_errors():
    with pytest.raises(FormationError, match="different node counts"):
        min_formation_vi_exact(F(2, 2), F(3, 2))
    with pytest.raises(FormationError, match="limit"):
        min_formation_vi_exact(F(11), F(6, 5))


@pytest.mark.parametrize("n", range(1, 5))
def test_exact_matches_brute_force(n):
    forms = [Formation(p) for p in integer_partitions(n)]
    for f1, f2 in itertools.product(forms, forms):
        res = min_formation_vi_exact(f1, f2)
        assert res.witness.realizes(f1, f2)
        assert res.min_vi == pytest.approx(vi_from_counts(res.witness), abs=0)
        assert res.min_vi == pytest.approx(brute_force_min(f1, f2), abs=1e-12)


def test_heuristic_examples():
    for f in (F(2, 2), F(5, 3, 3, 1), F(2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2)):
        assert min_formation_vi_heuristic(f, f).min_vi == 0.0
    assert min_formation_vi_heuristic(F(4), F(2, 2)).min_vi == pytest.approx(1.0)


def test_heuristic_matches_exact_small():
    for n in range(1, 9):
        forms = [Formation(p) for p in integer_partitions(n)]
        for f1, f2 in itertools.product(forms, forms):
            h = min_formation_vi_heuristic(f1, f2)
            e = min_formation_vi_exact(f1, f2)
            assert h.witness.realizes(f1, f2)
            assert h.min_vi >= e.min_vi - 1e-12
            if n <= 6:
                assert h.min_vi == pytest.approx(e.min_vi, abs=1e-12)
            assert (h.min_vi == 0) == (f1 == f2)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=1, max_size=8), st.randoms(use_true_random=False))
def test_heuristic_symmetric(sizes, rnd):
    n = sum(sizes)
    other = []
    left = n
    while left:
        s = rnd.randint(1, left)
        other.append(s)
        left -= s
    f1, f2 = Formation(sizes), Formation(other)
    a = min_formation_vi_heuristic(f1, f2)
    b = min_formation_vi_heuristic(f2, f1)
    assert a.min_vi == b.min_vi
    assert np.array_equal(a.witness.counts, b.witness.counts.T)


def test_heuristic_seed_is_upper_bound(rng):
    for _ in range(300):
        x = make_clustering(random_partition(rng, range(24), min_size=2))
        y = make_clustering(random_partition(rng, range(24), min_size=2))
        seed = confusion(x, y)
        res = min_formation_vi_heuristic(formation_of(x), formation_of(y), seed)
        assert res.min_vi <= vi(x, y)
        assert res.witness.realizes(formation_of(x), formation_of(y))


def test_invalid_seed():
    seed = ConfusionMatrix.from_counts([[1, 1], [1, 1]])
    with pytest.raises(FormationError, match="seed"):
        min_formation_vi_heuristic(F(3, 1), F(2, 2), seed)


def test_vif_for_transition():
    pairs = make_clustering([{0, 1}, {2, 3}])
    swapped = make_clustering([{0, 2}, {1, 3}])
    assert vif_for_transition(pairs, pairs) == 0.0
    assert vif_for_transition(pairs, swapped) == 0.0


def test_worked_pair_vif(worked_pair):
    x, y = worked_pair
    v = vif_for_transition(x, y)
    assert 0 < v < 0.785615
    assert v == pytest.approx(WORKED_VIF, abs=1e-12)


@pytest.mark.slow
def test_worked_pair_heuristic_is_optimal(worked_pair):
    x, y = worked_pair
    exact = min_formation_vi_exact(formation_of(x), formation_of(y), limit=24)
    assert exact.min_vi == pytest.approx(WORKED_VIF, abs=1e-12)


def test_partition_counts_against_sympy():
    assert partition_count(24) == sympy.partition(24) == 1575
    brute = sum(1 for p in sympy.utilities.iterables.partitions(24) if 1 not in p)
    assert partition_count(24, 2) == brute == 320
    for n in range(1, 30):
        assert partition_count(n) == sympy.partition(n)


def test_bell_against_oracles():
    for n in range(0, 30):
        assert bell_number(n) == sympy.bell(n)
    for n in range(0, 9):
        brute = sum(1 for p in set_partitions(range(n)) if all(len(b) > 1 for b in p))
        assert bell_no_singletons(n) == brute
    for n in range(0, 30):
        alternating = sum((-1) ** k * math.comb(n, k) * int(sympy.bell(n - k)) for k in range(n + 1))
        assert bell_no_singletons(n) == alternating


def test_count_spaces_24():
    c = count_spaces(24, 1)
    assert (c.partitions, c.partitions_no_singletons) == (1575, 320)
    assert c.bell == 445958869294805289
    assert c.bell_no_singletons == 40073660040755337
    assert count_spaces(24, 2).partitions == 320
    with pytest.raises(FormationError):
        count_spaces(41)
    with pytest.raises(FormationError):
        count_spaces(0)


def test_multiset_partition_oracle_small():
    # sympy's set partitions as a third route for the Bell numbers
    for n in range(1, 8):
        assert sum(1 for _ in multiset_partitions(list(range(n)))) == bell_number(n)
