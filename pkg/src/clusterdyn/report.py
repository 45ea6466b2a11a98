"""Full analysis of a stream, written as a directory of fixed-name files."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .analysis import (
    EnvelopeSpline,
    MatchSummary,
    Peak,
    PeakTargetError,
    ViSeries,
    distribution,
    envelope,
    find_peaks,
    summarize,
    vi_series,
)
from .config import RunConfig
from .ingest import EventKind, SampleStream
from .insight import (
    CorrelationReport,
    correlate_events,
    mine_transitions,
    player_profile,
    transition_chart_data,
)

logger = logging.getLogger(__name__)

SERIES_COLUMNS = ("t", "total_bps", "vif_bps", "vic_bps", "home_bps", "visitor_bps", "ma_total_bps")


@dataclass
class Analysis:
    stream: SampleStream
    series: ViSeries
    smoothed: ViSeries
    envelope: EnvelopeSpline
    peaks: list[Peak]
    target_met: bool
    summary: MatchSummary
    correlation: dict[str, CorrelationReport]


def analyze(stream: SampleStream, config: RunConfig) -> Analysis:
    series = vi_series(stream)
    if len(series) == 0:
        raise ValueError("stream has no same-roster transitions to analyze")
    smoothed = series.smoothed(config.ma_window)
    env = envelope(smoothed.t, smoothed.total, config.max_pivot_gap)
    target_met = True
    try:
        peaks, env = find_peaks(env, config.peak_target)
    except PeakTargetError as exc:
        logger.warning("%s; using the closest envelope", exc)
        env, peaks, target_met = exc.closest, exc.closest.peaks(), False
    span = stream.span()
    kinds = [EventKind.CORNER] + sorted({e.kind for e in stream.events} - {EventKind.CORNER}, key=lambda k: k.value)
    correlation = {
        k.value: correlate_events(peaks, stream.events, k, config.event_window, span) for k in kinds
    }
    return Analysis(
        stream, series, smoothed, env, peaks, target_met, summarize(stream, series), correlation
    )


def _fmt(v: float) -> str:
    return repr(float(v))


def write_series_csv(path: Path, series: ViSeries, smoothed: ViSeries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_COLUMNS)
        for k in range(len(series)):
            w.writerow([
                _fmt(series.t[k]), _fmt(series.total[k]), _fmt(series.formation[k]),
                _fmt(series.compositional[k]), _fmt(series.home[k]), _fmt(series.visitor[k]),
                _fmt(smoothed.total[k]),
            ])


def _dump(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def write_bundle(stream: SampleStream, config: RunConfig, out_dir) -> Analysis:
    """Run the full pipeline and write the report bundle into ``out_dir``.

    Files: ``series.csv``, ``summary.json``, ``peaks.json``,
    ``correlation.json``, ``transitions.json`` and ``players/<id>.json``.
    """
    out = Path(out_dir)
    (out / "players").mkdir(parents=True, exist_ok=True)
    result = analyze(stream, config)
    series, env = result.series, result.envelope

    write_series_csv(out / "series.csv", series, result.smoothed)

    summary = result.summary.to_json()
    dist = distribution(result.smoothed.total, config.bin_width)
    summary["distribution"] = {
        "source": f"total, {config.ma_window:g}s moving average",
        "edges": dist.edges.tolist(),
        "pdf": dist.density.tolist(),
        "cdf": dist.cdf_at_edges.tolist(),
    }
    summary["config"] = config.to_json()
    summary["samples"] = len(stream)
    summary["roster_boundaries"] = [float(stream.times[i]) for i in stream.boundaries]
    _dump(out / "summary.json", summary)

    grid, curve = env.sample(config.spline_step)
    _dump(out / "peaks.json", {
        "max_pivot_gap": env.max_pivot_gap,
        "target": config.peak_target,
        "target_met": result.target_met,
        "pivots": {"t": env.pivot_t.tolist(), "value": env.pivot_v.tolist()},
        "spline": {"step": config.spline_step, "t": grid.tolist(), "value": curve.tolist()},
        "peaks": [{"t": p.t, "value": p.value} for p in result.peaks],
    })

    _dump(out / "correlation.json", {k: r.to_json() for k, r in result.correlation.items()})

    all_transitions = mine_transitions(stream, series, top_n=None)
    top = all_transitions[: config.top_n]
    span = stream.span()
    _dump(out / "transitions.json", {
        "count": len(all_transitions),
        "top": [tr.to_json(stream.nodes) for tr in top],
        "chart": transition_chart_data(top, span, stream.nodes),
    })

    present = set().union(*(c.roster for c in stream.clusterings))
    for node in sorted(present):
        prof = player_profile(stream, series, node, config.top_n, all_transitions)
        data = prof.to_json(stream.nodes)
        data["chart"] = transition_chart_data(prof.top_transitions, span, stream.nodes, node=node)
        _dump(out / "players" / f"{node}.json", data)
    logger.info("wrote report bundle to %s", out)
    return result
