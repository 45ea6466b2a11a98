"""Synthetic matches for desk-scale validation.

Players jitter around fixed anchor spots (a mean-reverting random walk). The
jitter decays linearly over the match, and around each burst time the whole
roster is pulled toward a set-piece spot and agitated, which reshuffles the
nearest-neighbour clusters the way a corner kick would.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .core import Node, Profile, Role, Team
from .ingest import EventKind, MatchEvent, SampleStream, cluster_frames

logger = logging.getLogger(__name__)

PITCH = (105.0, 68.0)


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator parameters.

    ``baseline_change_rate`` is the jitter scale (m/sqrt(s)) at kick-off;
    ``decay_slope`` is the fraction of it lost by the final whistle.
    ``burst_intensity`` multiplies the jitter at a burst's centre, and
    bursts last ``burst_duration`` seconds.
    """

    duration: float = 5400.0
    roster: int = 24
    rate_hz: float = 10.0
    burst_times: tuple[float, ...] = ()
    burst_intensity: float = 6.0
    burst_duration: float = 12.0
    baseline_change_rate: float = 0.35
    decay_slope: float = 0.3
    reversion: float = 0.05
    events: tuple[MatchEvent, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "burst_times", tuple(float(b) for b in self.burst_times))
        if not self.duration > 0 or not self.rate_hz > 0:
            raise ValueError("duration and rate must be positive")
        if self.roster < 4:
            raise ValueError(f"roster must have at least 4 nodes, got {self.roster}")
        for b in self.burst_times:
            if not 0 <= b <= self.duration:
                raise ValueError(f"burst time {b} outside [0, {self.duration}]")
        for name in ("burst_intensity", "burst_duration", "baseline_change_rate", "reversion"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0 <= self.decay_slope <= 1:
            raise ValueError(f"decay_slope must lie in [0, 1], got {self.decay_slope}")

    @property
    def samples(self) -> int:
        return int(round(self.duration * self.rate_hz))


def roster_nodes(size: int) -> list[Node]:
    """Players split between teams, then the home and visitor goal frames."""
    players = size - 2
    home = (players + 1) // 2
    nodes = [Node(i, Team.HOME if i < home else Team.VISITOR) for i in range(players)]
    nodes.append(Node(players, Team.HOME, Role.GOAL))
    nodes.append(Node(players + 1, Team.VISITOR, Role.GOAL))
    return nodes


def _anchors(nodes: Sequence[Node], rng: np.random.Generator) -> np.ndarray:
    w, h = PITCH
    out = np.empty((len(nodes), 2))
    keepers = {Team.HOME: False, Team.VISITOR: False}
    for k, node in enumerate(nodes):
        own_goal_x = 0.0 if node.team is Team.HOME else w
        if node.role is Role.GOAL:
            out[k] = (own_goal_x, h / 2)
        elif not keepers[node.team]:
            keepers[node.team] = True
            out[k] = (abs(own_goal_x - 4.0), h / 2 + rng.normal(0, 2))
        else:
            out[k] = (rng.uniform(0.15 * w, 0.85 * w), rng.uniform(0.08 * h, 0.92 * h))
    return out


def burst_profile(t: np.ndarray, spec: SyntheticSpec) -> np.ndarray:
    """Burst weight in [0, 1] at each time (raised cosine around each burst)."""
    weight = np.zeros_like(t)
    half = spec.burst_duration / 2
    for b in spec.burst_times:
        inside = np.abs(t - b) < half
        weight[inside] = np.maximum(weight[inside], 0.5 * (1 + np.cos(np.pi * (t[inside] - b) / half)))
    return weight


def generate_positions(spec: SyntheticSpec, seed: int = 0):
    """Positions ``(T, N, 2)`` for the roster, sample times and node metadata."""
    rng = np.random.default_rng(seed)
    nodes = roster_nodes(spec.roster)
    n = len(nodes)
    dt = 1.0 / spec.rate_hz
    t = np.arange(spec.samples) * dt
    anchors = _anchors(nodes, rng)
    mobile = np.array([node.role is Role.PLAYER for node in nodes], dtype=float)

    burst = burst_profile(t, spec)
    sigma = spec.baseline_change_rate * (1.0 - spec.decay_slope * t / spec.duration)
    sigma = sigma * (1.0 + spec.burst_intensity * burst)
    noise = rng.normal(size=(len(t), n, 2)) * (sigma * np.sqrt(dt))[:, None, None]
    noise *= mobile[None, :, None]
    a = 1.0 - spec.reversion * dt
    offsets = lfilter([1.0], [1.0, -a], noise, axis=0)

    # set pieces draw everyone toward one spot near a goal mouth
    spots = np.zeros((len(t), 2))
    for b in spec.burst_times:
        side = rng.integers(2)
        spot = (PITCH[0] * (0.08 if side == 0 else 0.92), PITCH[1] / 2 + rng.normal(0, 4))
        near = np.abs(t - b) < spec.burst_duration
        spots[near] = spot
    pull = (0.6 * burst)[:, None, None] * mobile[None, :, None]
    base = anchors[None, :, :] + pull * (spots[:, None, :] - anchors[None, :, :])
    positions = base + offsets
    ids = np.array([node.id for node in nodes])
    return t, ids, positions, {node.id: node for node in nodes}


def corner_events(spec: SyntheticSpec) -> list[MatchEvent]:
    return [MatchEvent(int(b // 60), EventKind.CORNER) for b in spec.burst_times]


def generate_stream(spec: SyntheticSpec, seed: int = 0) -> SampleStream:
    """Clustered synthetic match; bursts are tagged as corners."""
    logger.info("generating synthetic match: %d samples, %d nodes, seed=%d", spec.samples, spec.roster, seed)
    t, ids, positions, nodes = generate_positions(spec, seed)
    clusterings = cluster_frames(ids, positions, Profile.SOCCER)
    events = sorted(corner_events(spec) + list(spec.events), key=lambda e: (e.minute, e.kind.value))
    return SampleStream(np.round(t, 6), clusterings, nodes, events, spec.rate_hz)


def positions_csv_rows(t, ids, positions, nodes):
    """Rows for the ``t,node,team,role,x,y`` position format."""
    for k, tk in enumerate(t):
        for j, v in enumerate(ids):
            node = nodes[int(v)]
            x, y = positions[k, j]
            yield (f"{tk:.1f}", int(v), node.team.value, node.role.value, f"{x:.4f}", f"{y:.4f}")
