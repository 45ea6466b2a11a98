"""Clusterings, formations and confusion matrices.

A clustering is a partition of a node roster into disjoint, non-empty
clusters. Clusters are stored in canonical order (by size, then by smallest
member) with members sorted, so two clusterings built from the same cluster
sets are equal, hash equal and serialize identically.
"""
from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "ClusteringError",
    "RosterMismatchError",
    "Team",
    "Role",
    "Node",
    "Profile",
    "Clustering",
    "Formation",
    "ConfusionMatrix",
    "make_clustering",
    "formation_of",
    "confusion",
    "canonical_key",
    "key_digest",
    "clustering_to_json",
    "clustering_from_json",
]


class ClusteringError(ValueError):
    """Raised when a set of clusters does not partition its roster."""


class RosterMismatchError(ValueError):
    """Raised when two clusterings over different rosters are compared."""


class Team(str, Enum):
    HOME = "H"
    VISITOR = "V"


class Role(str, Enum):
    PLAYER = "P"
    GOAL = "G"


class Profile(str, Enum):
    GENERIC = "generic"
    SOCCER = "soccer"


@dataclass(frozen=True, order=True)
class Node:
    """A roster member. Goal frames carry the team defending that goal."""

    id: int
    team: Team = Team.HOME
    role: Role = Role.PLAYER

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"node id must be non-negative, got {self.id}")


CanonicalKey = tuple  # tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class Clustering:
    """Validated partition of ``roster`` into ``clusters`` (canonical order).

    Build through :func:`make_clustering`; the constructor assumes its input
    is already canonical.
    """

    clusters: tuple[tuple[int, ...], ...]
    roster: frozenset[int]
    labels: Mapping[int, int] = field(compare=False, repr=False, hash=False)

    @property
    def k(self) -> int:
        return len(self.clusters)

    @property
    def n(self) -> int:
        return len(self.roster)

    @property
    def key(self) -> CanonicalKey:
        return self.clusters

    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.clusters)

    def cluster_of(self, node: int) -> tuple[int, ...]:
        return self.clusters[self.labels[node]]

    def __iter__(self):
        return iter(self.clusters)

    def __len__(self):
        return len(self.clusters)


def _canonical_order(clusters: Iterable[Iterable[int]]) -> tuple[tuple[int, ...], ...]:
    ordered = [tuple(sorted(c)) for c in clusters]
    ordered.sort(key=lambda c: (len(c), c[0] if c else -1))
    return tuple(ordered)


def make_clustering(
    clusters: Iterable[Iterable[int]],
    roster: Iterable[int] | None = None,
    profile: Profile | str = Profile.GENERIC,
) -> Clustering:
    """Validate ``clusters`` as a partition of ``roster`` and canonicalize.

    Parameters
    ----------
    clusters
        Iterable of node-id collections.
    roster
        Node ids that must be covered exactly. Defaults to the union of the
        clusters.
    profile
        ``"soccer"`` additionally rejects singleton clusters.

    Raises
    ------
    ClusteringError
        On overlapping clusters, empty clusters, uncovered or extra nodes, or a
        singleton under the soccer profile.
    """
    profile = Profile(profile)
    clusters = [list(c) for c in clusters]
    labels: dict[int, int] = {}
    for idx, members in enumerate(clusters):
        if not members:
            raise ClusteringError(f"cluster {idx} is empty")
        if len(set(members)) != len(members):
            raise ClusteringError(f"cluster {idx} lists a node twice: {sorted(members)}")
        if profile is Profile.SOCCER and len(members) < 2:
            raise ClusteringError(f"singleton cluster {members} not allowed under soccer profile")
        for v in members:
            if v in labels:
                raise ClusteringError(
                    f"node {v} appears in clusters {labels[v]} and {idx} (overlap)"
                )
            labels[v] = idx
    covered = frozenset(labels)
    if roster is not None:
        roster = frozenset(roster)
        missing = roster - covered
        extra = covered - roster
        if missing:
            raise ClusteringError(f"roster nodes not covered by any cluster: {sorted(missing)}")
        if extra:
            raise ClusteringError(f"nodes outside the roster: {sorted(extra)}")
    canon = _canonical_order(clusters)
    canon_labels = {v: i for i, c in enumerate(canon) for v in c}
    return Clustering(canon, covered, canon_labels)


@dataclass(frozen=True)
class Formation:
    """Multiset of cluster sizes, stored sorted in descending order."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        if any(s <= 0 for s in self.sizes):
            raise ValueError(f"formation parts must be positive: {self.sizes}")
        object.__setattr__(self, "sizes", tuple(sorted(self.sizes, reverse=True)))

    @classmethod
    def of(cls, sizes: Iterable[int]) -> "Formation":
        return cls(tuple(sizes))

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def has_singletons(self) -> bool:
        return 1 in self.sizes

    def __str__(self) -> str:
        counts = sorted(Counter(self.sizes).items())
        parts = [f"{s}^{m}" if m > 1 else str(s) for s, m in counts]
        return "{" + ",".join(parts) + "}"


def formation_of(c: Clustering) -> Formation:
    return Formation(c.sizes())


@dataclass(frozen=True)
class ConfusionMatrix:
    """Node flows ``counts[i, j] = |x_i & y_j|`` between two clusterings.

    ``row_sums``/``col_sums`` are kept in matrix order; the formations are
    their sorted multisets.
    """

    counts: np.ndarray
    row_sums: tuple[int, ...]
    col_sums: tuple[int, ...]

    @classmethod
    def from_counts(cls, counts) -> "ConfusionMatrix":
        counts = np.asarray(counts, dtype=np.int64)
        if counts.ndim != 2:
            raise ValueError("confusion counts must be a 2-d matrix")
        if (counts < 0).any():
            raise ValueError("confusion counts must be non-negative")
        return cls(
            counts,
            tuple(int(s) for s in counts.sum(axis=1)),
            tuple(int(s) for s in counts.sum(axis=0)),
        )

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    @property
    def row_formation(self) -> Formation:
        return Formation(self.row_sums)

    @property
    def col_formation(self) -> Formation:
        return Formation(self.col_sums)

    def realizes(self, source: Formation, dest: Formation) -> bool:
        return self.row_formation == source and self.col_formation == dest

    def transpose(self) -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts.T.copy(), self.col_sums, self.row_sums)


def check_same_roster(x: Clustering, y: Clustering) -> None:
    if x.roster != y.roster:
        diff = sorted(x.roster ^ y.roster)
        raise RosterMismatchError(f"clusterings differ in roster; symmetric difference {diff}")


def flows(x: Clustering, y: Clustering) -> dict[tuple[int, int], list[int]]:
    """Members of every non-empty intersection ``x_i & y_j``, keyed by (i, j)."""
    check_same_roster(x, y)
    ly = y.labels
    out: dict[tuple[int, int], list[int]] = {}
    for i, members in enumerate(x.clusters):
        for v in members:
            out.setdefault((i, ly[v]), []).append(v)
    return out


def confusion(x: Clustering, y: Clustering) -> ConfusionMatrix:
    """Confusion matrix from ``x`` (rows) to ``y`` (columns)."""
    counts = np.zeros((x.k, y.k), dtype=np.int64)
    for (i, j), members in flows(x, y).items():
        counts[i, j] = len(members)
    return ConfusionMatrix(counts, x.sizes(), y.sizes())


def canonical_key(c: Clustering) -> CanonicalKey:
    """Order-independent, injective key for a clustering."""
    return c.clusters


def key_digest(c: Clustering) -> str:
    """Short stable hex digest of the canonical key, for serialized output."""
    payload = json.dumps(c.clusters, separators=(",", ":")).encode()
    return hashlib.blake2b(payload, digest_size=12).hexdigest()


def clustering_to_json(c: Clustering) -> dict:
    return {"roster": sorted(c.roster), "clusters": [list(m) for m in c.clusters]}


def clustering_from_json(obj: Mapping, profile: Profile | str = Profile.GENERIC) -> Clustering:
    return make_clustering(obj["clusters"], obj.get("roster"), profile)
