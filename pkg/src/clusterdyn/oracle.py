"""Exhaustive cross-check of the formation heuristic against the exact solver."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .core import Formation
from .formation import (
    DEFAULT_EXACT_LIMIT,
    FormationError,
    count_spaces,
    min_formation_vi_exact,
    min_formation_vi_heuristic,
)

# differences below this are rounding noise between equally optimal witnesses
GAP_TOLERANCE = 1e-12


def integer_partitions(n: int, largest: int | None = None) -> Iterator[tuple[int, ...]]:
    """Partitions of ``n`` as non-increasing tuples."""
    if n == 0:
        yield ()
        return
    largest = n if largest is None else largest
    for first in range(min(n, largest), 0, -1):
        for rest in integer_partitions(n - first, first):
            yield (first,) + rest


@dataclass
class OracleRow:
    n: int
    pairs: int
    max_gap: float
    mean_gap: float
    mean_relative_gap: float
    gaps: list[dict] = field(default_factory=list)


def compare(n: int) -> OracleRow:
    forms = [Formation(p) for p in integer_partitions(n)]
    gaps = []
    abs_gaps = []
    rel = []
    for f1 in forms:
        for f2 in forms:
            exact = min_formation_vi_exact(f1, f2, limit=max(n, DEFAULT_EXACT_LIMIT))
            heur = min_formation_vi_heuristic(f1, f2)
            gap = heur.min_vi - exact.min_vi
            if gap < GAP_TOLERANCE:
                gap = 0.0
            abs_gaps.append(gap)
            rel.append(gap / exact.min_vi if exact.min_vi > 0 else 0.0)
            if gap:
                gaps.append({
                    "source": list(f1.sizes),
                    "dest": list(f2.sizes),
                    "exact": exact.min_vi,
                    "heuristic": heur.min_vi,
                    "exact_witness": exact.witness.counts.tolist(),
                    "heuristic_witness": heur.witness.counts.tolist(),
                })
    pairs = len(abs_gaps)
    return OracleRow(n, pairs, max(abs_gaps), sum(abs_gaps) / pairs, sum(rel) / pairs, gaps)


def oracle_report(n_max: int, limit: int = DEFAULT_EXACT_LIMIT) -> dict:
    if n_max > limit:
        raise FormationError(f"n_max={n_max} exceeds the exact-solver limit {limit}")
    rows = [compare(n) for n in range(1, n_max + 1)]
    counts = count_spaces(24, 1)
    return {
        "n_max": n_max,
        "rows": [
            {
                "n": r.n,
                "pairs": r.pairs,
                "max_gap": r.max_gap,
                "mean_gap": r.mean_gap,
                "mean_relative_gap": r.mean_relative_gap,
                "nonzero_gaps": r.gaps,
            }
            for r in rows
        ],
        "max_gap": max(r.max_gap for r in rows),
        "mean_relative_gap": sum(r.mean_relative_gap * r.pairs for r in rows) / sum(r.pairs for r in rows),
        "counts_24": {
            "partitions": counts.partitions,
            "partitions_no_singletons": counts.partitions_no_singletons,
            "bell": counts.bell,
            "bell_no_singletons": counts.bell_no_singletons,
        },
    }
