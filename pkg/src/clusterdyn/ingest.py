"""Tracking input: position feeds, event tags and clustered sample streams.

Positions are clustered by the nearest-neighbour rule: every node is joined
to its closest node (Euclidean, ties to the lower id) and the clusters are
the connected components of the resulting graph. A node and its nearest
neighbour therefore always share a cluster, and no cluster is a singleton.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .core import (
    Clustering,
    ClusteringError,
    Node,
    Profile,
    Role,
    Team,
    make_clustering,
)

logger = logging.getLogger(__name__)

__all__ = [
    "IngestError",
    "EventKind",
    "MatchEvent",
    "PositionSample",
    "Bucket",
    "PositionTable",
    "SampleStream",
    "nearest_neighbors",
    "cluster_positions",
    "cluster_frames",
    "parse_positions",
    "parse_events",
    "assemble_stream",
    "stream_to_json",
    "stream_from_json",
    "load_stream",
    "dump_stream",
    "events_to_json",
]

POSITION_COLUMNS = ("t", "node", "team", "role", "x", "y")


class IngestError(ValueError):
    pass


class EventKind(str, Enum):
    CORNER = "corner"
    GOAL = "goal"
    SUBSTITUTION = "substitution"
    RED_CARD = "red_card"
    OTHER = "other"


ROSTER_EVENTS = (EventKind.SUBSTITUTION, EventKind.RED_CARD)


@dataclass(frozen=True)
class MatchEvent:
    minute: int
    kind: EventKind
    team: Team | None = None

    def __post_init__(self):
        if self.minute < 0:
            raise IngestError(f"event minute must be non-negative, got {self.minute}")

    def to_json(self) -> dict:
        return {
            "minute": self.minute,
            "kind": self.kind.value,
            "team": self.team.value if self.team else None,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "MatchEvent":
        try:
            minute = obj["minute"]
            kind = EventKind(obj["kind"])
        except (KeyError, ValueError) as exc:
            raise IngestError(f"malformed event {obj!r}: {exc}") from None
        if not isinstance(minute, int) or isinstance(minute, bool):
            raise IngestError(f"event minute must be an integer: {obj!r}")
        team = obj.get("team")
        try:
            team = Team(team) if team is not None else None
        except ValueError:
            raise IngestError(f"event team must be 'H', 'V' or null: {obj!r}") from None
        return cls(minute, kind, team)


@dataclass(frozen=True)
class PositionSample:
    t: float
    node: int
    x: float
    y: float


@dataclass
class Bucket:
    """All positions observed in one sampling interval, ids ascending."""

    t: float
    ids: np.ndarray
    xy: np.ndarray


@dataclass
class PositionTable:
    buckets: list[Bucket]
    nodes: dict[int, Node]
    rate_hz: float
    gaps: list[tuple[float, float]] = field(default_factory=list)

    def __len__(self):
        return len(self.buckets)


@dataclass
class SampleStream:
    """Time-ordered clusterings with node metadata and tagged events."""

    times: np.ndarray
    clusterings: list[Clustering]
    nodes: dict[int, Node]
    events: list[MatchEvent]
    rate_hz: float

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.clusterings):
            raise IngestError("times and clusterings differ in length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            bad = int(np.argmin(np.diff(self.times) > 0)) + 1
            raise IngestError(f"sample times must increase strictly (sample {bad})")
        if not self.rate_hz > 0:
            raise IngestError(f"rate must be positive, got {self.rate_hz}")

    def __len__(self):
        return len(self.clusterings)

    @property
    def roster_timeline(self) -> list[frozenset[int]]:
        return [c.roster for c in self.clusterings]

    @property
    def boundaries(self) -> list[int]:
        """Sample indices whose roster differs from the previous sample."""
        return [
            i
            for i in range(1, len(self.clusterings))
            if self.clusterings[i].roster != self.clusterings[i - 1].roster
        ]

    def teams(self) -> dict[int, Team]:
        return {v: node.team for v, node in self.nodes.items()}

    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def downsample(self, step: int) -> "SampleStream":
        """Every ``step``-th sample, as if captured at ``rate_hz / step``."""
        if step < 1:
            raise IngestError(f"downsampling step must be >= 1, got {step}")
        return SampleStream(
            self.times[::step],
            self.clusterings[::step],
            self.nodes,
            self.events,
            self.rate_hz / step,
        )


# --------------------------------------------------------------------------
# clustering rule


def nearest_neighbors(xy: np.ndarray) -> np.ndarray:
    """Index of each row's closest other row; ties resolve to the lower index.

    ``xy`` may be ``(N, 2)`` or a stack ``(T, N, 2)``.
    """
    xy = np.asarray(xy, dtype=float)
    diff = xy[..., :, None, :] - xy[..., None, :, :]
    d2 = np.einsum("...ijk,...ijk->...ij", diff, diff)
    n = xy.shape[-2]
    idx = np.arange(n)
    d2[..., idx, idx] = np.inf
    return np.argmin(d2, axis=-1)


def _components(nn: Sequence[int]) -> list[list[int]]:
    parent = list(range(len(nn)))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in enumerate(nn):
        ra, rb = find(a), find(int(b))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for a in range(len(nn)):
        groups.setdefault(find(a), []).append(a)
    return list(groups.values())


def _validate_frame(ids: np.ndarray, xy: np.ndarray) -> None:
    if len(ids) < 2:
        raise IngestError(f"need at least 2 nodes to cluster, got {len(ids)}")
    if len(np.unique(ids)) != len(ids):
        raise IngestError("duplicate node ids in one sample")
    if not np.all(np.isfinite(xy)):
        raise IngestError("non-finite coordinates")


def cluster_positions(
    positions: Iterable[PositionSample] | Mapping[int, tuple[float, float]],
    profile: Profile | str = Profile.SOCCER,
) -> Clustering:
    """Nearest-neighbour clustering of one time slice.

    Accepts either ``PositionSample`` records or a ``{node: (x, y)}`` map.
    """
    if isinstance(positions, Mapping):
        items = [(int(v), float(p[0]), float(p[1])) for v, p in positions.items()]
    else:
        items = [(p.node, p.x, p.y) for p in positions]
    ids = np.array([v for v, _, _ in items], dtype=np.int64)
    xy = np.array([[x, y] for _, x, y in items], dtype=float).reshape(-1, 2)
    _validate_frame(ids, xy)
    order = np.argsort(ids, kind="stable")
    return cluster_frames(ids[order], xy[order][None], profile)[0]


def cluster_frames(ids: np.ndarray, frames: np.ndarray, profile=Profile.SOCCER, chunk: int = 4096) -> list[Clustering]:
    """Cluster a stack of frames ``(T, N, 2)`` sharing the sorted roster ``ids``."""
    ids = np.asarray(ids)
    frames = np.asarray(frames, dtype=float)
    _validate_frame(ids, frames[0] if len(frames) else np.zeros((0, 2)))
    if not np.all(np.isfinite(frames)):
        raise IngestError("non-finite coordinates")
    if np.any(np.diff(ids) <= 0):
        raise IngestError("frame ids must be strictly ascending")
    id_list = [int(v) for v in ids]
    roster = frozenset(id_list)
    out: list[Clustering] = []
    for start in range(0, len(frames), chunk):
        nn = nearest_neighbors(frames[start : start + chunk])
        for row in nn.tolist():
            groups = _components(row)
            out.append(make_clustering(([id_list[a] for a in g] for g in groups), roster, profile))
    return out


# --------------------------------------------------------------------------
# parsing


def _open_text(source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, Path)):
        return open(source, newline=""), True
    return source, False


def parse_positions(source, format: str = "csv", rate_hz: float = 10.0) -> PositionTable:
    """Read a ``t,node,team,role,x,y`` CSV feed into time buckets.

    Rows are bucketed at ``rate_hz``. Raises :class:`IngestError` naming the
    offending row for malformed values, repeated nodes within a bucket,
    inconsistent node metadata or a timestamp that goes backwards.
    """
    if format != "csv":
        raise IngestError(f"unsupported position format {format!r}")
    if not rate_hz > 0:
        raise IngestError(f"rate must be positive, got {rate_hz}")
    fh, owned = _open_text(source)
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise IngestError("empty position file")
        header = [h.strip() for h in header]
        if tuple(header) != POSITION_COLUMNS:
            raise IngestError(f"expected header {','.join(POSITION_COLUMNS)}, got {','.join(header)}")
        nodes: dict[int, Node] = {}
        buckets: list[Bucket] = []
        cur_idx = None
        cur_ids: list[int] = []
        cur_xy: list[tuple[float, float]] = []
        last_t = -math.inf

        def flush():
            if cur_idx is None:
                return
            order = np.argsort(cur_ids, kind="stable")
            buckets.append(
                Bucket(
                    round(cur_idx / rate_hz, 6),
                    np.asarray(cur_ids, dtype=np.int64)[order],
                    np.asarray(cur_xy, dtype=float).reshape(-1, 2)[order],
                )
            )

        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(POSITION_COLUMNS):
                raise IngestError(f"row {lineno}: expected 6 fields, got {len(row)}")
            t_s, node_s, team_s, role_s, x_s, y_s = (cell.strip() for cell in row)
            try:
                t = float(t_s)
                node = int(node_s)
                team = Team(team_s)
                role = Role(role_s)
                x = float(x_s)
                y = float(y_s)
            except ValueError as exc:
                raise IngestError(f"row {lineno}: {exc}") from None
            if not (math.isfinite(t) and math.isfinite(x) and math.isfinite(y)):
                raise IngestError(f"row {lineno}: non-finite value")
            if t < last_t:
                raise IngestError(f"row {lineno}: timestamp regression, t={t} after t={last_t}")
            last_t = t
            meta = Node(node, team, role)
            if nodes.setdefault(node, meta) != meta:
                raise IngestError(f"row {lineno}: node {node} changes team/role")
            idx = int(round(t * rate_hz))
            if idx != cur_idx:
                flush()
                cur_idx, cur_ids, cur_xy = idx, [], []
            if node in cur_ids:
                raise IngestError(f"row {lineno}: node {node} repeated at t={t}")
            cur_ids.append(node)
            cur_xy.append((x, y))
        flush()
    finally:
        if owned:
            fh.close()
    gaps = []
    step = 1.0 / rate_hz
    for a, b in zip(buckets, buckets[1:]):
        if b.t - a.t > step * 1.5:
            gaps.append((a.t, b.t))
    if gaps:
        logger.warning("position feed has %d gap(s); first between t=%s and t=%s", len(gaps), *gaps[0])
    return PositionTable(buckets, nodes, rate_hz, gaps)


def parse_events(source) -> list[MatchEvent]:
    """Read an events JSON array of ``{"minute", "kind", "team"}`` objects."""
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            data = json.load(fh)
    elif isinstance(source, io.IOBase) or hasattr(source, "read"):
        data = json.load(source)
    else:
        data = source
    if not isinstance(data, list):
        raise IngestError("events JSON must be an array")
    return [MatchEvent.from_json(obj) for obj in data]


def events_to_json(events: Iterable[MatchEvent]) -> list[dict]:
    return [e.to_json() for e in events]


# --------------------------------------------------------------------------
# stream assembly


def _roster_change_explained(t: float, events: Sequence[MatchEvent]) -> bool:
    # tags carry minute resolution; allow the neighbouring minutes
    minute = t / 60.0
    return any(e.kind in ROSTER_EVENTS and e.minute - 1 <= minute < e.minute + 2 for e in events)


def assemble_stream(
    table: PositionTable,
    events: Sequence[MatchEvent] = (),
    profile: Profile | str = Profile.SOCCER,
    carry_forward: bool = False,
) -> SampleStream:
    """One clustering per bucket.

    A roster change must coincide with a substitution or red-card tag. Without
    one, a node that disappears is a tracking dropout: an error, or with
    ``carry_forward`` its last known position is reused.
    """
    events = list(events)
    frames_ids: list[np.ndarray] = []
    frames_xy: list[np.ndarray] = []
    prev_ids: np.ndarray | None = None
    last_pos: dict[int, np.ndarray] = {}
    for b in table.buckets:
        ids, xy = b.ids, b.xy
        if len(ids) < 2:
            raise IngestError(f"bucket t={b.t} has {len(ids)} node(s); need at least 2")
        if prev_ids is not None and not np.array_equal(ids, prev_ids):
            if not _roster_change_explained(b.t, events):
                missing = np.setdiff1d(prev_ids, ids)
                added = np.setdiff1d(ids, prev_ids)
                if not carry_forward or len(added):
                    raise IngestError(
                        f"roster change at t={b.t} without a substitution/red-card tag "
                        f"(missing {missing.tolist()}, new {added.tolist()})"
                    )
                extra_xy = np.array([last_pos[int(v)] for v in missing])
                ids = np.concatenate([ids, missing])
                xy = np.concatenate([xy, extra_xy])
                order = np.argsort(ids)
                ids, xy = ids[order], xy[order]
        for v, p in zip(ids.tolist(), xy):
            last_pos[v] = p
        frames_ids.append(ids)
        frames_xy.append(xy)
        prev_ids = ids

    clusterings: list[Clustering] = []
    start = 0
    while start < len(frames_ids):
        stop = start + 1
        while stop < len(frames_ids) and np.array_equal(frames_ids[stop], frames_ids[start]):
            stop += 1
        clusterings.extend(cluster_frames(frames_ids[start], np.stack(frames_xy[start:stop]), profile))
        start = stop
    times = np.array([b.t for b in table.buckets])
    return SampleStream(times, clusterings, dict(table.nodes), events, table.rate_hz)


def stream_to_json(stream: SampleStream) -> dict:
    return {
        "rate_hz": stream.rate_hz,
        "nodes": [
            {"id": n.id, "team": n.team.value, "role": n.role.value}
            for n in sorted(stream.nodes.values())
        ],
        "samples": [
            {"t": round(float(t), 6), "clusters": [list(c) for c in cl.clusters]}
            for t, cl in zip(stream.times, stream.clusterings)
        ],
        "events": events_to_json(stream.events),
    }


def stream_from_json(obj: Mapping, profile: Profile | str = Profile.SOCCER) -> SampleStream:
    """Build a stream from its JSON form; ``nodes`` is optional (all home players)."""
    try:
        rate = float(obj["rate_hz"])
        samples = obj["samples"]
    except (KeyError, TypeError, ValueError) as exc:
        raise IngestError(f"malformed stream JSON: {exc}") from None
    nodes = {}
    for entry in obj.get("nodes") or []:
        try:
            node = Node(int(entry["id"]), Team(entry.get("team", "H")), Role(entry.get("role", "P")))
        except (KeyError, ValueError) as exc:
            raise IngestError(f"malformed node entry {entry!r}: {exc}") from None
        nodes[node.id] = node
    times = []
    clusterings = []
    for i, s in enumerate(samples):
        try:
            clusterings.append(make_clustering(s["clusters"], None, profile))
            times.append(float(s["t"]))
        except ClusteringError as exc:
            raise IngestError(f"sample {i} (t={s.get('t')}): {exc}") from None
        except (KeyError, TypeError) as exc:
            raise IngestError(f"sample {i}: malformed ({exc})") from None
    for c in clusterings:
        for v in c.roster:
            nodes.setdefault(v, Node(v))
    events = parse_events(obj.get("events") or [])
    return SampleStream(np.array(times), clusterings, nodes, events, rate)


def load_stream(path, profile: Profile | str = Profile.SOCCER) -> SampleStream:
    with open(path) as fh:
        return stream_from_json(json.load(fh), profile)


def dump_stream(stream: SampleStream, path) -> None:
    with open(path, "w") as fh:
        json.dump(stream_to_json(stream), fh, separators=(",", ":"))
        fh.write("\n")
