"""Time-series analytics over per-transition VI rates.

The series carries one point per consecutive pair of samples sharing a
roster. Pairs straddling a roster change (substitution, send-off) are
recorded as gaps and contribute no value.
"""
from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .core import Team, formation_of
from .formation import vif_for_transition
from .ingest import SampleStream
from .metric import breakdown

logger = logging.getLogger(__name__)

__all__ = [
    "AnalysisError",
    "PeakTargetError",
    "ViSeries",
    "EnvelopeSpline",
    "Peak",
    "Distribution",
    "MatchSummary",
    "ChannelStats",
    "vi_series",
    "moving_average",
    "envelope",
    "find_peaks",
    "distribution",
    "trend",
    "summarize",
    "CHANNELS",
]

CHANNELS = ("total", "home", "visitor", "compositional", "formation")


class AnalysisError(ValueError):
    pass


@dataclass
class ViSeries:
    """Per-transition rates in bps; ``bits`` keeps the unscaled total VI.

    ``source`` holds the index of each point's first sample in the stream and
    ``node_bits`` each point's nonzero per-node contributions (in bits).
    """

    t: np.ndarray
    dt: np.ndarray
    total: np.ndarray
    formation: np.ndarray
    compositional: np.ndarray
    home: np.ndarray
    visitor: np.ndarray
    bits: np.ndarray
    source: np.ndarray
    node_bits: list[dict[int, float]] = field(default_factory=list)
    gaps: list[tuple[float, float]] = field(default_factory=list)

    def __len__(self):
        return len(self.t)

    def channel(self, name: str) -> np.ndarray:
        if name not in CHANNELS:
            raise AnalysisError(f"unknown channel {name!r}")
        return getattr(self, name)

    def smoothed(self, window: float) -> "ViSeries":
        """Copy with every rate channel replaced by its trailing moving average."""
        kw = {name: moving_average(self.t, self.channel(name), window) for name in CHANNELS}
        return ViSeries(
            t=self.t, dt=self.dt, bits=self.bits, source=self.source,
            node_bits=self.node_bits, gaps=self.gaps, **kw,
        )


def vi_series(stream: SampleStream) -> ViSeries:
    """VI breakdown for every consecutive same-roster pair, as rates."""
    if len(stream) < 2:
        raise AnalysisError("a series needs at least 2 samples")
    teams = stream.teams()
    rows = []
    node_bits: list[dict[int, float]] = []
    gaps = []
    cl = stream.clusterings
    times = stream.times
    for i in range(1, len(cl)):
        x, y = cl[i - 1], cl[i]
        if x.roster != y.roster:
            gaps.append((float(times[i - 1]), float(times[i])))
            continue
        dt = float(times[i] - times[i - 1])
        if x.clusters == y.clusters:
            rows.append((times[i], dt, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, i - 1))
            node_bits.append({})
            continue
        b = breakdown(x, y, vif_for_transition(x, y), teams)
        rows.append((
            times[i], dt,
            b.total / dt, b.formation_part / dt, b.compositional_part / dt,
            b.per_team[Team.HOME] / dt, b.per_team[Team.VISITOR] / dt,
            b.total, i - 1,
        ))
        node_bits.append({v: c for v, c in b.per_node.items() if c})
    arr = np.array(rows, dtype=float).reshape(-1, 9)
    return ViSeries(
        t=arr[:, 0], dt=arr[:, 1], total=arr[:, 2], formation=arr[:, 3],
        compositional=arr[:, 4], home=arr[:, 5], visitor=arr[:, 6], bits=arr[:, 7],
        source=arr[:, 8].astype(np.int64), node_bits=node_bits, gaps=gaps,
    )


def moving_average(t: Sequence[float], values: Sequence[float], window: float) -> np.ndarray:
    """Trailing mean over the samples in ``(t_i - window, t_i]``, at every ``t_i``."""
    if not window > 0:
        raise AnalysisError(f"window must be positive, got {window}")
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(t) == 0:
        return v.copy()
    csum = np.concatenate([[0.0], np.cumsum(v)])
    # small slack keeps samples exactly one window back out of the window
    lo = np.searchsorted(t, t - window + 1e-9 * max(1.0, window), side="left")
    hi = np.arange(1, len(t) + 1)
    return (csum[hi] - csum[lo]) / (hi - lo)


# --------------------------------------------------------------------------
# envelope and peaks


@dataclass(frozen=True)
class Peak:
    t: float
    value: float


def _local_maxima(v: np.ndarray) -> np.ndarray:
    """Interior indices of strict local maxima; plateaus report their middle."""
    n = len(v)
    if n < 3:
        return np.zeros(0, dtype=np.int64)
    change = np.flatnonzero(np.diff(v) != 0) + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [n]])
    vals = v[starts]
    out = []
    for r in range(1, len(starts) - 1):
        if vals[r] > vals[r - 1] and vals[r] > vals[r + 1]:
            out.append((starts[r] + ends[r] - 1) // 2)
    return np.asarray(out, dtype=np.int64)


def _monotone_tangents(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Shape-preserving slopes, zero at both ends and at every local extremum."""
    m = np.zeros(len(x))
    if len(x) < 3:
        return m
    h = np.diff(x)
    delta = np.diff(y) / h
    for k in range(1, len(x) - 1):
        d0, d1 = delta[k - 1], delta[k]
        if d0 * d1 <= 0:
            continue
        w1 = 2 * h[k] + h[k - 1]
        w2 = h[k] + 2 * h[k - 1]
        m[k] = (w1 + w2) / (w1 / d0 + w2 / d1)
    return m


@dataclass
class EnvelopeSpline:
    """Cubic Hermite curve through selected maxima of a series.

    Pivots are the two series endpoints plus local maxima picked in
    descending order, each kept only if it lies at least
    ``max_pivot_gap * (1 - F(value))`` seconds from every pivot already kept,
    where ``F`` is the empirical CDF of the series. High values may therefore
    sit close together; typical values need up to ``max_pivot_gap``.
    """

    t: np.ndarray
    values: np.ndarray
    max_pivot_gap: float
    pivot_t: np.ndarray
    pivot_v: np.ndarray
    tangents: np.ndarray
    anchors: int = 2

    def __call__(self, at) -> np.ndarray:
        at = np.asarray(at, dtype=float)
        if len(self.pivot_t) == 1:
            return np.full(at.shape, self.pivot_v[0])
        clipped = np.clip(at, self.pivot_t[0], self.pivot_t[-1])
        spline = CubicHermiteSpline(self.pivot_t, self.pivot_v, self.tangents)
        return spline(clipped)

    def derivative(self, at) -> np.ndarray:
        at = np.asarray(at, dtype=float)
        if len(self.pivot_t) == 1:
            return np.zeros(at.shape)
        spline = CubicHermiteSpline(self.pivot_t, self.pivot_v, self.tangents)
        inside = (at >= self.pivot_t[0]) & (at <= self.pivot_t[-1])
        return np.where(inside, spline.derivative()(np.clip(at, self.pivot_t[0], self.pivot_t[-1])), 0.0)

    def peaks(self) -> list[Peak]:
        """Stationary maxima: interior pivots above both neighbouring pivots.

        Between pivots the curve is monotone, so these are exactly the
        curve's interior local maxima. A run of equal pivots standing above
        its neighbours counts once, at its first pivot.
        """
        pv = self.pivot_v
        out = []
        k = 1
        while k < len(pv) - 1:
            j = k
            while j + 1 < len(pv) - 1 and pv[j + 1] == pv[k]:
                j += 1
            if pv[k] > pv[k - 1] and pv[j] > pv[j + 1]:
                out.append(Peak(float(self.pivot_t[k]), float(pv[k])))
            k = j + 1
        return out

    def sample(self, step: float) -> tuple[np.ndarray, np.ndarray]:
        if not step > 0:
            raise AnalysisError(f"sampling step must be positive, got {step}")
        grid = np.arange(self.t[0], self.t[-1] + step / 2, step)
        return grid, self(grid)


def envelope(t: Sequence[float], values: Sequence[float], max_pivot_gap: float = 80.0) -> EnvelopeSpline:
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(t) == 0:
        raise AnalysisError("cannot build an envelope of an empty series")
    if not max_pivot_gap >= 0:
        raise AnalysisError(f"max_pivot_gap must be non-negative, got {max_pivot_gap}")
    if len(t) == 1:
        return EnvelopeSpline(t, v, max_pivot_gap, t.copy(), v.copy(), np.zeros(1), anchors=1)

    sorted_v = np.sort(v)
    cand = _local_maxima(v)
    cdf = np.searchsorted(sorted_v, v[cand], side="right") / len(v)
    order = np.lexsort((t[cand], -v[cand]))
    kept: list[float] = []
    chosen = []
    for r in order:
        i = cand[r]
        sep = max_pivot_gap * (1.0 - cdf[r])
        pos = bisect.bisect_left(kept, t[i])
        if pos < len(kept) and kept[pos] - t[i] < sep:
            continue
        if pos > 0 and t[i] - kept[pos - 1] < sep:
            continue
        kept.insert(pos, t[i])
        chosen.append(i)
    idx = np.array(sorted({0, len(t) - 1, *chosen}), dtype=np.int64)
    px, py = t[idx], v[idx]
    return EnvelopeSpline(t, v, max_pivot_gap, px, py, _monotone_tangents(px, py))


class PeakTargetError(AnalysisError):
    """No pivot gap yields a peak count in the requested band."""

    def __init__(self, message: str, closest: EnvelopeSpline, count: int):
        super().__init__(message)
        self.closest = closest
        self.count = count


def find_peaks(
    env: EnvelopeSpline,
    target_count: Optional[int] = None,
    band: tuple[int, int] | None = None,
    gap_bounds: tuple[float, float] | None = None,
    max_iter: int = 80,
) -> tuple[list[Peak], EnvelopeSpline]:
    """Peaks of ``env``; with ``target_count`` the pivot gap is tuned first.

    The gap is bisected on a log scale until the peak count lands in
    ``band`` (default ``[target - 1, target + 2]``). Returns the peaks and the
    envelope they came from.
    """
    if target_count is None:
        return env.peaks(), env
    if target_count < 0:
        raise AnalysisError("target_count must be non-negative")
    lo_band, hi_band = band or (max(target_count - 1, 0), target_count + 2)
    span = float(env.t[-1] - env.t[0]) or 1.0
    step = float(np.min(np.diff(env.t))) if len(env.t) > 1 else 1.0
    lo, hi = gap_bounds or (step, 1000.0 * span)
    best: tuple[int, EnvelopeSpline, list[Peak]] | None = None

    def attempt(gap: float):
        nonlocal best
        e = envelope(env.t, env.values, gap)
        pk = e.peaks()
        dist = 0 if lo_band <= len(pk) <= hi_band else min(abs(len(pk) - lo_band), abs(len(pk) - hi_band))
        if best is None or dist < best[0]:
            best = (dist, e, pk)
        return pk, e

    for gap in (env.max_pivot_gap, lo, hi):
        pk, e = attempt(gap)
        if lo_band <= len(pk) <= hi_band:
            return pk, e
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        pk, e = attempt(mid)
        if lo_band <= len(pk) <= hi_band:
            return pk, e
        if len(pk) > hi_band:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1 + 1e-9:
            break
    _, closest, pk = best
    raise PeakTargetError(
        f"no pivot gap gives {lo_band}..{hi_band} peaks; closest has {len(pk)}",
        closest,
        len(pk),
    )


# --------------------------------------------------------------------------
# distribution, trend, summary


@dataclass
class Distribution:
    edges: np.ndarray
    density: np.ndarray
    values: np.ndarray = field(repr=False)

    def cdf(self, at) -> np.ndarray:
        return np.searchsorted(self.values, np.asarray(at, dtype=float), side="right") / len(self.values)

    @property
    def cdf_at_edges(self) -> np.ndarray:
        return self.cdf(self.edges[1:])


def distribution(values: Sequence[float], bin_width: float = 0.05) -> Distribution:
    """Histogram density on ``[0, max]`` with fixed bins, plus the empirical CDF."""
    v = np.sort(np.asarray(values, dtype=float))
    if len(v) == 0:
        raise AnalysisError("distribution of an empty series")
    if not bin_width > 0:
        raise AnalysisError(f"bin width must be positive, got {bin_width}")
    nbins = max(1, int(math.ceil(v[-1] / bin_width - 1e-9)))
    edges = np.arange(nbins + 1) * bin_width
    if edges[-1] < v[-1]:
        edges[-1] = v[-1]
    counts, _ = np.histogram(np.clip(v, 0, None), bins=edges)
    density = counts / (len(v) * np.diff(edges))
    return Distribution(edges, density, v)


def trend(t: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of ``values`` against ``t``."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(t) < 2:
        raise AnalysisError("trend needs at least 2 points")
    tc = t - t.mean()
    sxx = float(np.dot(tc, tc))
    if sxx == 0:
        raise AnalysisError("trend is undefined when all times coincide")
    return float(np.dot(tc, v - v.mean()) / sxx)


@dataclass(frozen=True)
class ChannelStats:
    mean: float
    sigma: float
    cv: Optional[float]
    slope: Optional[float]


@dataclass(frozen=True)
class MatchSummary:
    channels: dict[str, ChannelStats]
    points: int
    null_fraction: float
    unique_clusterings: int
    unique_full_formations: int
    reappearances: int
    reappearance_rate: float
    formation_to_compositional: Optional[float]

    def to_json(self) -> dict:
        out = {
            name: {"mean": s.mean, "sigma": s.sigma, "cv": s.cv, "slope": s.slope}
            for name, s in self.channels.items()
        }
        out.update(
            points=self.points,
            null_fraction=self.null_fraction,
            unique_clusterings=self.unique_clusterings,
            unique_full_formations=self.unique_full_formations,
            reappearances=self.reappearances,
            reappearance_rate=self.reappearance_rate,
            formation_to_compositional=self.formation_to_compositional,
        )
        return out


def _channel_stats(t: np.ndarray, v: np.ndarray) -> ChannelStats:
    if len(v) == 0:
        return ChannelStats(0.0, 0.0, None, None)
    mean = math.fsum(v) / len(v)
    sigma = float(np.sqrt(np.mean((v - mean) ** 2)))
    cv = sigma / mean if mean > 0 else None
    slope = trend(t, v) if len(t) > 1 and t[-1] > t[0] else None
    return ChannelStats(mean, sigma, cv, slope)


def reappearance(keys: Sequence) -> tuple[int, int]:
    """Count samples whose clustering was seen before, skipping immediate repeats.

    Returns ``(reappearances, eligible)`` where eligible samples are those
    differing from their predecessor (plus the first sample).
    """
    seen = set()
    hits = eligible = 0
    prev = object()
    for k in keys:
        if k == prev:
            continue
        eligible += 1
        if k in seen:
            hits += 1
        seen.add(k)
        prev = k
    return hits, eligible


def summarize(stream: SampleStream, series: ViSeries) -> MatchSummary:
    """Match-level statistics on the raw per-transition rates."""
    channels = {name: _channel_stats(series.t, series.channel(name)) for name in CHANNELS}
    n_points = len(series)
    null_fraction = float(np.count_nonzero(series.bits == 0) / n_points) if n_points else 0.0
    keys = [c.clusters for c in stream.clusterings]
    full = max((c.n for c in stream.clusterings), default=0)
    formations = {formation_of(c) for c in stream.clusterings if c.n == full}
    hits, eligible = reappearance(keys)
    vic = channels["compositional"].mean
    ratio = channels["formation"].mean / vic if vic > 0 else None
    return MatchSummary(
        channels=channels,
        points=n_points,
        null_fraction=null_fraction,
        unique_clusterings=len(set(keys)),
        unique_full_formations=len(formations),
        reappearances=hits,
        reappearance_rate=hits / eligible if eligible else 0.0,
        formation_to_compositional=ratio,
    )
