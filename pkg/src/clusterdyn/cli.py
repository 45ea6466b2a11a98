"""Command-line entry point: ``clusterdyn <command>``."""
from __future__ import annotations

import csv
import json
import logging
import os
import sys

import click

from . import __version__
from .config import RunConfig
from .core import Profile
from .formation import FormationError, count_spaces
from .ingest import IngestError, assemble_stream, dump_stream, load_stream, parse_events, parse_positions
from .oracle import oracle_report
from .report import write_bundle
from .synthetic import SyntheticSpec, generate_positions, generate_stream, positions_csv_rows

logger = logging.getLogger("clusterdyn")

LOG_ENV = "CLUSTERDYN_LOG_LEVEL"


def _setup_logging():
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _load_input(positions, stream, events, cfg: RunConfig):
    if bool(positions) == bool(stream):
        raise click.UsageError("give exactly one of --positions or --stream")
    tags = parse_events(events) if events else None
    if positions:
        table = parse_positions(positions, rate_hz=cfg.sample_rate)
        return assemble_stream(table, tags or [], cfg.profile, cfg.carry_forward)
    st = load_stream(stream, cfg.profile)
    if tags is not None:
        st.events = tags
    return st


def _run_options(f):
    options = [
        click.option("--rate", type=float, default=10.0, show_default=True, help="Sampling rate (Hz) for position bucketing."),
        click.option("--window", type=float, default=4.0, show_default=True, help="Moving-average window (s)."),
        click.option("--pivot-max", type=float, default=80.0, show_default=True, help="Maximum inter-pivot distance (s)."),
        click.option("--peaks", type=int, default=24, show_default=True, help="Target peak count (0 disables tuning)."),
        click.option("--event-window", type=float, default=30.0, show_default=True, help="Tolerance around tagged events (s)."),
        click.option("--profile", type=click.Choice([p.value for p in Profile]), default="soccer", show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--carry-forward", is_flag=True, help="Fill tracking dropouts with last known positions."),
        click.option("--top", type=int, default=10, show_default=True, help="Transitions kept per ranking."),
    ]
    for opt in reversed(options):
        f = opt(f)
    return f


def _config(rate, window, pivot_max, peaks, event_window, profile, seed, carry_forward, top) -> RunConfig:
    return RunConfig(
        sample_rate=rate, ma_window=window, max_pivot_gap=pivot_max,
        peak_target=peaks or None, event_window=event_window, profile=profile,
        seed=seed, carry_forward=carry_forward, top_n=top,
    )


@click.group()
@click.version_option(__version__)
def main():
    """Variation-of-Information dynamics of clustered temporal networks."""
    _setup_logging()


@main.command()
@click.option("--positions", type=click.Path(exists=True, dir_okay=False), help="Positions CSV (t,node,team,role,x,y).")
@click.option("--stream", type=click.Path(exists=True, dir_okay=False), help="Pre-clustered stream JSON.")
@click.option("--events", type=click.Path(exists=True, dir_okay=False), help="Events JSON (overrides events in the stream).")
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Output bundle directory.")
@_run_options
def analyze(positions, stream, events, out, **kw):
    """Full report bundle: series, summary, peaks, correlation, transitions, players."""
    try:
        cfg = _config(**kw)
        st = _load_input(positions, stream, events, cfg)
        result = write_bundle(st, cfg, out)
    except (IngestError, ValueError) as exc:
        raise click.ClickException(str(exc)) from None
    s = result.summary
    click.echo(
        f"{len(st)} samples, {s.points} transitions, mean {s.channels['total'].mean:.4f} bps, "
        f"{len(result.peaks)} peaks -> {out}"
    )


@main.command()
@click.option("--positions", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--events", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Stream JSON to write.")
@click.option("--rate", type=float, default=10.0, show_default=True)
@click.option("--profile", type=click.Choice([p.value for p in Profile]), default="soccer", show_default=True)
@click.option("--carry-forward", is_flag=True)
def cluster(positions, events, out, rate, profile, carry_forward):
    """Cluster a positions feed into a stream JSON."""
    try:
        table = parse_positions(positions, rate_hz=rate)
        st = assemble_stream(table, parse_events(events) if events else [], profile, carry_forward)
    except (IngestError, ValueError) as exc:
        raise click.ClickException(str(exc)) from None
    dump_stream(st, out)
    click.echo(f"{len(st)} samples, {len(st.boundaries)} roster boundaries, {len(table.gaps)} gaps -> {out}")


@main.command()
@click.option("--duration", type=float, default=5400.0, show_default=True, help="Match length (s).")
@click.option("--roster", type=int, default=24, show_default=True)
@click.option("--rate", type=float, default=10.0, show_default=True)
@click.option("--bursts", default="", help="Comma-separated burst times (s).")
@click.option("--burst-intensity", type=float, default=6.0, show_default=True)
@click.option("--burst-duration", type=float, default=12.0, show_default=True)
@click.option("--baseline", type=float, default=0.35, show_default=True, help="Baseline jitter scale.")
@click.option("--decay", type=float, default=0.3, show_default=True, help="Fraction of baseline lost by the end.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Stream JSON to write.")
@click.option("--positions-out", type=click.Path(dir_okay=False), help="Also write the raw positions CSV.")
def generate(duration, roster, rate, bursts, burst_intensity, burst_duration, baseline, decay, seed, out, positions_out):
    """Synthetic match stream with corner-like bursts."""
    try:
        times = tuple(float(b) for b in bursts.split(",") if b.strip())
        spec = SyntheticSpec(
            duration=duration, roster=roster, rate_hz=rate, burst_times=times,
            burst_intensity=burst_intensity, burst_duration=burst_duration,
            baseline_change_rate=baseline, decay_slope=decay,
        )
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    logger.info("seed=%d", seed)
    st = generate_stream(spec, seed)
    dump_stream(st, out)
    if positions_out:
        t, ids, pos, nodes = generate_positions(spec, seed)
        with open(positions_out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("t", "node", "team", "role", "x", "y"))
            w.writerows(positions_csv_rows(t, ids, pos, nodes))
    click.echo(f"{len(st)} samples, {len(times)} bursts, seed {seed} -> {out}")


@main.command()
@click.option("--n-max", type=int, default=8, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Report JSON (stdout if omitted).")
def oracle(n_max, out):
    """Heuristic vs exhaustive formation minimum over all pairs up to n-max."""
    try:
        report = oracle_report(n_max)
    except FormationError as exc:
        raise click.ClickException(str(exc)) from None
    text = json.dumps(report, indent=1)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    for row in report["rows"]:
        click.echo(
            f"n={row['n']:2d} pairs={row['pairs']:5d} max_gap={row['max_gap']:.6g} "
            f"mean_rel_gap={row['mean_relative_gap']:.3%}",
            err=bool(not out),
        )
    if not out:
        click.echo(text)


@main.command()
@click.option("--n", "n", type=int, default=24, show_default=True)
@click.option("--min-part", type=int, default=1, show_default=True)
def counts(n, min_part):
    """Formation and clustering space sizes for n nodes."""
    try:
        c = count_spaces(n, min_part)
    except FormationError as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(json.dumps({
        "n": c.n,
        "min_part": c.min_part,
        "partitions": c.partitions,
        "partitions_no_singletons": c.partitions_no_singletons,
        "bell": c.bell,
        "bell_no_singletons": c.bell_no_singletons,
    }, indent=1))


if __name__ == "__main__":
    main()
