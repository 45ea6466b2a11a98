"""Event/peak correlation, simplex transitions and per-player activity."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .analysis import Peak, ViSeries
from .core import Node, Team, flows
from .ingest import EventKind, MatchEvent, SampleStream
from .metric import cell_contribution

__all__ = [
    "InsightError",
    "CorrelationReport",
    "SimplexTransition",
    "PlayerProfile",
    "correlate_events",
    "mine_transitions",
    "player_profile",
    "transition_chart_data",
    "coverage",
    "simplex_label",
]


class InsightError(ValueError):
    pass


@dataclass(frozen=True)
class CorrelationReport:
    kind: str
    window: float
    baseline_radius: float
    peaks_used: int
    events_total: int
    events_recognized: int
    p_peak_given_event: Optional[float]
    p_peak_random: float
    recognized_minutes: tuple[int, ...] = ()

    @property
    def undefined(self) -> bool:
        return self.events_total == 0

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "window_s": self.window,
            "baseline_radius_s": self.baseline_radius,
            "peaks_used": self.peaks_used,
            "events_total": self.events_total,
            "events_recognized": self.events_recognized,
            "recognized_minutes": list(self.recognized_minutes),
            "p_peak_given_event": self.p_peak_given_event,
            "p_peak_random": self.p_peak_random,
            "undefined": self.undefined,
        }


def coverage(centers: Iterable[float], radius: float, span: tuple[float, float]) -> float:
    """Fraction of ``span`` covered by the union of ``[c - radius, c + radius]``."""
    start, stop = span
    length = stop - start
    if length <= 0:
        raise InsightError(f"empty match span {span}")
    intervals = sorted((max(c - radius, start), min(c + radius, stop)) for c in centers)
    covered = 0.0
    cur_a = cur_b = None
    for a, b in intervals:
        if b <= a:
            continue
        if cur_b is None or a > cur_b:
            if cur_b is not None:
                covered += cur_b - cur_a
            cur_a, cur_b = a, b
        else:
            cur_b = max(cur_b, b)
    if cur_b is not None:
        covered += cur_b - cur_a
    return covered / length


def correlate_events(
    peaks: Sequence[Peak],
    events: Sequence[MatchEvent],
    kind: EventKind | str = EventKind.CORNER,
    window: float = 30.0,
    span: tuple[float, float] | None = None,
    baseline_radius: float | None = None,
) -> CorrelationReport:
    """How often a tagged event has a peak nearby, against a chance baseline.

    Tags have minute resolution, so an event at minute ``m`` is recognized when
    a peak falls in ``[60m - window, 60m + 60 + window)``. The baseline is the
    share of ``span`` lying within ``baseline_radius`` (default ``window``) of
    some peak.
    """
    if not window > 0:
        raise InsightError(f"window must be positive, got {window}")
    kind = EventKind(kind)
    radius = window if baseline_radius is None else baseline_radius
    peak_t = sorted(p.t for p in peaks)
    if span is None:
        span = (min(peak_t, default=0.0), max(peak_t, default=1.0))
    selected = [e for e in events if e.kind is kind]
    hits = []
    for e in selected:
        lo = 60.0 * e.minute - window
        hi = 60.0 * e.minute + 60.0 + window
        if any(lo <= t < hi for t in peak_t):
            hits.append(e.minute)
    p_random = coverage(peak_t, radius, span) if peak_t else 0.0
    return CorrelationReport(
        kind=kind.value,
        window=window,
        baseline_radius=radius,
        peaks_used=len(peak_t),
        events_total=len(selected),
        events_recognized=len(hits),
        p_peak_given_event=len(hits) / len(selected) if selected else None,
        p_peak_random=p_random,
        recognized_minutes=tuple(hits),
    )


# --------------------------------------------------------------------------
# simplex transitions


def _composition(members: Sequence[int], nodes: Mapping[int, Node]) -> dict:
    home = sum(1 for v in members if nodes.get(v, Node(v)).team is Team.HOME)
    return {"size": len(members), "home": home, "visitor": len(members) - home}


def simplex_label(members: Sequence[int], nodes: Mapping[int, Node]) -> str:
    """Node numbers, home side first: ``"3,12-22"``."""
    home = sorted(v for v in members if nodes.get(v, Node(v)).team is Team.HOME)
    away = sorted(v for v in members if nodes.get(v, Node(v)).team is Team.VISITOR)
    return ",".join(map(str, home)) + "-" + ",".join(map(str, away))


@dataclass
class SimplexTransition:
    """A source cluster feeding a different destination cluster at the next sample."""

    source: tuple[int, ...]
    dest: tuple[int, ...]
    occurrences: list[float] = field(default_factory=list)
    accumulated_vi: float = 0.0
    per_player_vi: dict[int, float] = field(default_factory=dict)
    formation_pair: tuple[dict, dict] = ({}, {})

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.source) & set(self.dest)))

    def to_json(self, nodes: Mapping[int, Node]) -> dict:
        return {
            "source": list(self.source),
            "dest": list(self.dest),
            "source_label": simplex_label(self.source, nodes),
            "dest_label": simplex_label(self.dest, nodes),
            "occurrences": list(self.occurrences),
            "accumulated_vi": self.accumulated_vi,
            "per_player_vi": {str(v): c for v, c in sorted(self.per_player_vi.items())},
            "source_composition": self.formation_pair[0],
            "dest_composition": self.formation_pair[1],
        }


def mine_transitions(
    stream: SampleStream, series: ViSeries, top_n: Optional[int] = 10
) -> list[SimplexTransition]:
    """Accumulate every changing cell of every transition by exact node sets.

    Ranked by accumulated VI (ties by node sets); ``top_n=None`` keeps all.
    """
    acc: dict[tuple, list] = {}
    for point, (t, src, bits) in enumerate(zip(series.t, series.source, series.bits)):
        if bits == 0:
            continue
        x = stream.clusterings[src]
        y = stream.clusterings[src + 1]
        n = x.n
        for (i, j), members in flows(x, y).items():
            a, b = x.clusters[i], y.clusters[j]
            if a == b:
                continue
            c = cell_contribution(len(members), len(a), len(b), n)
            entry = acc.setdefault((a, b), [[], [], {}])
            entry[0].append(float(t))
            entry[1].append(c)
            for v in members:
                entry[2].setdefault(v, []).append(c / len(members))
    out = []
    for (a, b), (occ, contribs, per_player) in acc.items():
        out.append(
            SimplexTransition(
                source=a,
                dest=b,
                occurrences=occ,
                accumulated_vi=math.fsum(contribs),
                per_player_vi={v: math.fsum(cs) for v, cs in per_player.items()},
                formation_pair=(_composition(a, stream.nodes), _composition(b, stream.nodes)),
            )
        )
    out.sort(key=lambda tr: (-tr.accumulated_vi, tr.source, tr.dest))
    return out if top_n is None else out[:top_n]


# --------------------------------------------------------------------------
# players


@dataclass
class PlayerProfile:
    node: int
    t: list[float]
    bits: list[float]
    rate: list[float]
    total: float
    match_average_per_player: float
    top_transitions: list[SimplexTransition]

    def to_json(self, nodes: Mapping[int, Node]) -> dict:
        meta = nodes.get(self.node, Node(self.node))
        return {
            "node": self.node,
            "team": meta.team.value,
            "role": meta.role.value,
            "total_vi": self.total,
            "match_average_per_player": self.match_average_per_player,
            "series": {"t": self.t, "bits": self.bits, "bps": self.rate},
            "top_transitions": [
                dict(tr.to_json(nodes), player_vi=tr.per_player_vi.get(self.node, 0.0))
                for tr in self.top_transitions
            ],
        }


def match_average_per_player(stream: SampleStream, series: ViSeries) -> float:
    """Total match VI shared over the active roster, pair by pair."""
    return math.fsum(
        bits / stream.clusterings[src].n
        for bits, src in zip(series.bits, series.source)
        if bits
    )


def player_profile(
    stream: SampleStream,
    series: ViSeries,
    node: int,
    top_n: int = 10,
    transitions: Optional[Sequence[SimplexTransition]] = None,
) -> PlayerProfile:
    """Per-transition contribution of ``node`` and its strongest transitions.

    ``transitions`` may pass a full (untruncated) mining result to avoid
    recomputing it for every player.
    """
    if not any(node in c.roster for c in stream.clusterings):
        raise InsightError(f"node {node} never appears in the stream")
    t, bits, rate = [], [], []
    for k, src in enumerate(series.source):
        if node not in stream.clusterings[src].roster:
            continue
        c = series.node_bits[k].get(node, 0.0)
        t.append(float(series.t[k]))
        bits.append(c)
        rate.append(c / float(series.dt[k]))
    if transitions is None:
        transitions = mine_transitions(stream, series, top_n=None)
    mine = [tr for tr in transitions if node in tr.per_player_vi]
    mine.sort(key=lambda tr: (-tr.per_player_vi[node], tr.source, tr.dest))
    return PlayerProfile(
        node=node,
        t=t,
        bits=bits,
        rate=rate,
        total=math.fsum(bits),
        match_average_per_player=match_average_per_player(stream, series),
        top_transitions=mine[:top_n],
    )


def transition_chart_data(
    transitions: Sequence[SimplexTransition],
    span: tuple[float, float],
    nodes: Mapping[int, Node] | None = None,
    node: int | None = None,
) -> dict:
    """Plot-ready records for circular transition charts.

    Circle area is proportional to the accumulated VI (or to ``node``'s share
    of it); every occurrence maps to an angle, a full match being a full turn.
    """
    nodes = nodes or {}
    start, stop = span
    length = stop - start
    if length <= 0:
        raise InsightError(f"empty match span {span}")

    def weight(tr: SimplexTransition) -> float:
        return tr.accumulated_vi if node is None else tr.per_player_vi.get(node, 0.0)

    top = max((weight(tr) for tr in transitions), default=0.0)
    records = []
    for tr in transitions:
        w = weight(tr)
        area = w / top if top > 0 else 0.0
        records.append({
            "source_label": simplex_label(tr.source, nodes),
            "dest_label": simplex_label(tr.dest, nodes),
            "source_composition": tr.formation_pair[0],
            "dest_composition": tr.formation_pair[1],
            "vi": w,
            "area": area,
            "radius": math.sqrt(area / math.pi),
            "angles": [2 * math.pi * (t - start) / length for t in tr.occurrences],
        })
    return {"span": [start, stop], "node": node, "transitions": records}
