"""Variation of Information between clusterings, in bits.

All sums go through :func:`math.fsum`, which rounds exactly once, so results
do not depend on cell order: ``vi(x, y) == vi(y, x)`` holds bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .core import Clustering, ConfusionMatrix, Team, check_same_roster, flows

__all__ = [
    "MetricError",
    "ViBreakdown",
    "cell_contribution",
    "vi_from_counts",
    "cell_contributions",
    "vi",
    "vi_rate",
    "node_contributions",
    "node_contribution",
    "breakdown",
    "vi_bounds",
    "vi_ceiling",
]


class MetricError(ValueError):
    pass


def cell_contribution(m: int, a: int, b: int, n: int) -> float:
    """Share of one confusion cell: ``-(m/n) * (log2(m/a) + log2(m/b))``.

    ``m`` is the intersection size, ``a``/``b`` the source and destination
    cluster sizes. Empty cells contribute nothing.
    """
    if m == 0:
        return 0.0
    if m == a and m == b:
        return 0.0
    r = m / n
    return -r * (math.log2(m / a) + math.log2(m / b))


def cell_contributions(cm: ConfusionMatrix) -> np.ndarray:
    """Matrix of per-cell contributions (the per-flow VI table)."""
    n = cm.n
    out = np.zeros(cm.shape, dtype=float)
    for i, j in zip(*np.nonzero(cm.counts)):
        out[i, j] = cell_contribution(int(cm.counts[i, j]), cm.row_sums[i], cm.col_sums[j], n)
    return out


def vi_from_counts(cm: ConfusionMatrix) -> float:
    n = cm.n
    if n == 0:
        raise MetricError("confusion matrix is empty")
    counts = cm.counts
    return math.fsum(
        cell_contribution(int(counts[i, j]), cm.row_sums[i], cm.col_sums[j], n)
        for i, j in zip(*np.nonzero(counts))
    )


def vi(x: Clustering, y: Clustering) -> float:
    """Variation of Information ``H(X|Y) + H(Y|X)`` in bits."""
    check_same_roster(x, y)
    if not x.roster:
        raise MetricError("cannot compare clusterings of an empty roster")
    if x.clusters == y.clusters:
        return 0.0
    n = x.n
    return math.fsum(
        cell_contribution(len(members), len(x.clusters[i]), len(y.clusters[j]), n)
        for (i, j), members in flows(x, y).items()
    )


def vi_rate(x: Clustering, y: Clustering, dt: float) -> float:
    """VI per second (bps) over an interval of ``dt`` seconds."""
    if not dt > 0:
        raise MetricError(f"dt must be positive, got {dt}")
    return vi(x, y) / dt


def node_contributions(x: Clustering, y: Clustering) -> dict[int, float]:
    """Each node's equal share of the cell it flows through."""
    check_same_roster(x, y)
    out = dict.fromkeys(x.roster, 0.0)
    if x.clusters == y.clusters:
        return out
    n = x.n
    for (i, j), members in flows(x, y).items():
        m = len(members)
        share = cell_contribution(m, len(x.clusters[i]), len(y.clusters[j]), n) / m
        for v in members:
            out[v] = share
    return out


def node_contribution(x: Clustering, y: Clustering, node: int) -> float:
    check_same_roster(x, y)
    if node not in x.roster:
        raise MetricError(f"node {node} is not in the roster")
    i = x.labels[node]
    j = y.labels[node]
    m = len(set(x.clusters[i]).intersection(y.clusters[j]))
    return cell_contribution(m, len(x.clusters[i]), len(y.clusters[j]), x.n) / m


@dataclass(frozen=True)
class ViBreakdown:
    """VI of one transition split by cause and by node/team (all in bits)."""

    total: float
    formation_part: float
    compositional_part: float
    per_node: Mapping[int, float] = field(default_factory=dict)
    per_team: Mapping[Team, float] = field(default_factory=dict)

    @classmethod
    def zero(cls, roster) -> "ViBreakdown":
        return cls(0.0, 0.0, 0.0, dict.fromkeys(roster, 0.0), {Team.HOME: 0.0, Team.VISITOR: 0.0})


def breakdown(
    x: Clustering,
    y: Clustering,
    vif: float,
    teams: Mapping[int, Team] | None = None,
) -> ViBreakdown:
    """Split ``vi(x, y)`` into formation and compositional parts.

    ``teams`` maps node ids to teams; nodes without an entry count as home.
    The compositional part is defined as ``total - vif`` so the two parts add
    up exactly.
    """
    total = vi(x, y)
    if vif > total:
        raise MetricError(f"formation part {vif!r} exceeds total VI {total!r}")
    if vif < 0:
        raise MetricError(f"formation part must be non-negative, got {vif!r}")
    per_node = node_contributions(x, y)
    teams = teams or {}
    home = [c for v, c in per_node.items() if teams.get(v, Team.HOME) is Team.HOME]
    away = [c for v, c in per_node.items() if teams.get(v, Team.HOME) is Team.VISITOR]
    per_team = {Team.HOME: math.fsum(home), Team.VISITOR: math.fsum(away)}
    return ViBreakdown(total, vif, total - vif, per_node, per_team)


def vi_bounds(n: int, m: int) -> tuple[float, float]:
    """Reference bounds for ``n`` nodes with at most ``m`` clusters.

    Returns ``(2/n, log2(m))``. The first value is the nonzero floor. The
    second is the VI of splitting one cluster into ``m`` equal parts, and it
    caps the VI between the all-in-one clustering and any clustering with at
    most ``m`` clusters.

    Notes
    -----
    ``log2(m)`` is not a ceiling for arbitrary pairs. Twelve pairs against
    two interleaved halves of 24 nodes give ``log2(24)``. The general
    ceilings are ``log2(n)`` and ``log2(k) + log2(l)``; see
    :func:`vi_ceiling`.
    """
    if n < 2:
        raise MetricError(f"need at least 2 nodes, got {n}")
    if not 1 <= m <= n:
        raise MetricError(f"cluster count bound must lie in [1, {n}], got {m}")
    return 2.0 / n, math.log2(m)


def vi_ceiling(n: int, k: int | None = None, l: int | None = None) -> float:
    """Upper bound on VI for ``n`` nodes, tightened by cluster counts if given.

    ``VI <= H(X) + H(Y) <= log2(k) + log2(l)`` and ``VI <= log2(n)``.
    """
    if n < 1:
        raise MetricError(f"need at least 1 node, got {n}")
    bound = math.log2(n)
    if k is not None and l is not None:
        bound = min(bound, math.log2(k) + math.log2(l))
    return bound
