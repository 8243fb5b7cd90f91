"""Command-line surface.

Exit codes: 0 success, 1 solver failure, 2 configuration error. Every output
is a deterministic function of (config, seed); rerunning a subcommand with
the same inputs reproduces each file byte for byte.
"""

from __future__ import annotations

import logging
import pathlib
import random
import sys
from dataclasses import replace

import click

from . import drc as drc_mod
from .config import RunConfig, load_config, load_instances
from .driver import (
    BenchmarkInstance,
    BenchmarkResult,
    BenchmarkRow,
    floorplan,
    run_benchmark,
    write_metrics_csv,
)
from .errors import ConfigError, SitepackError
from .interconnect import run_ops_script
from .model import compute_metrics
from .routing import route_all
from .serialize import layout_from_json, layout_to_json
from .svg import render_cover_svg, render_svg

log = logging.getLogger("sitepack")

EXIT_SOLVER_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def _fail_config(exc: ConfigError):
    for violation in exc.violations:
        click.echo(f"config error: {violation}", err=True)
    sys.exit(EXIT_CONFIG_ERROR)


def _load(config_path: str) -> RunConfig:
    try:
        return load_config(config_path)
    except ConfigError as exc:
        _fail_config(exc)


def _outdir(cfg: RunConfig, override: str | None) -> pathlib.Path:
    path = pathlib.Path(override or cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _apply_seed(cfg: RunConfig, seed: int | None) -> RunConfig:
    if seed is None:
        return cfg
    return replace(
        cfg,
        instance=replace(cfg.instance, seed=seed),
        anneal=replace(cfg.anneal, rng_seed=seed),
    )


@click.group()
@click.option("--verbose", is_flag=True, help="Log solver progress.")
def main(verbose: bool):
    """Track-grid floorplanning, routing, DRC coverage, and interconnect tools."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(message)s")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="Run config YAML.")
@click.option("--out", default=None, help="Output directory (overrides config).")
@click.option("--seed", type=int, default=None, help="Override the instance seed.")
@click.option("--svg/--no-svg", "emit_svg", default=True, help="Also render layout.svg.")
def pack(config_path: str, out: str | None, seed: int | None, emit_svg: bool):
    """Floorplan the configured instance; writes layout.json and metrics.csv."""
    cfg = _apply_seed(_load(config_path), seed)
    outdir = _outdir(cfg, out)
    instance = BenchmarkInstance(
        id=cfg.instance.id,
        site_count=cfg.instance.sites,
        template_diversity=cfg.instance.diversity,
        template_library=cfg.templates,
        seed=cfg.instance.seed,
    )
    templates = cfg.template_map()
    ap = replace(cfg.anneal, rng_seed=instance.seed)
    try:
        plan = floorplan(
            instance.build_sites(), cfg.grid, templates, cfg.budget, ap, controller=cfg.controller
        )
        row = BenchmarkRow(instance=instance, metrics=plan.metrics)
    except SitepackError as exc:
        with open(outdir / "metrics.csv", "w", encoding="utf-8", newline="") as fh:
            write_metrics_csv(
                BenchmarkResult(rows=(BenchmarkRow(instance, None, str(exc)),)),
                fh,
                wall_time=cfg.wall_time_in_csv,
            )
        click.echo(f"floorplan failed: {exc}", err=True)
        sys.exit(EXIT_SOLVER_FAILURE)
    with open(outdir / "metrics.csv", "w", encoding="utf-8", newline="") as fh:
        write_metrics_csv(BenchmarkResult(rows=(row,)), fh, wall_time=cfg.wall_time_in_csv)
    (outdir / "layout.json").write_text(layout_to_json(plan.layout), encoding="utf-8")
    if emit_svg:
        (outdir / "layout.svg").write_text(render_svg(plan.layout, cfg.svg_scale), encoding="utf-8")
    click.echo(
        f"{instance.id}: util {plan.metrics.util_pct:.2f}% "
        f"track {plan.metrics.track_pct:.2f}% bbox {plan.metrics.bbox_area:g}"
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--layout", "layout_path", required=True, type=click.Path(), help="Placed layout JSON.")
@click.option("--out", default=None, help="Output directory.")
def route(config_path: str, layout_path: str, out: str | None):
    """Route an existing placement; writes routed.json (and routed.svg)."""
    cfg = _load(config_path)
    outdir = _outdir(cfg, out)
    try:
        layout = layout_from_json(pathlib.Path(layout_path).read_text(encoding="utf-8"))
    except ConfigError as exc:
        _fail_config(exc)
    except OSError as exc:
        _fail_config(ConfigError([f"cannot read layout: {exc}"]))
    layout = replace(layout, routes=())
    rng = random.Random(cfg.instance.seed)
    paths = route_all(layout, cfg.budget.routing_attempts, rng)
    if paths is None:
        click.echo("routing failed on every attempt", err=True)
        sys.exit(EXIT_SOLVER_FAILURE)
    routed = replace(layout, routes=tuple(paths))
    (outdir / "routed.json").write_text(layout_to_json(routed), encoding="utf-8")
    (outdir / "routed.svg").write_text(render_svg(routed, cfg.svg_scale), encoding="utf-8")
    metrics = compute_metrics(routed)
    click.echo(f"routed {len(paths)} legs, track area {metrics.track_area}")


@main.command(name="drc-cover")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", default=None, help="Output directory.")
@click.option("--epsilon", type=float, default=None, help="Override exploration epsilon.")
@click.option("--seed", type=int, default=None, help="Override the coverage seed.")
def drc_cover(config_path: str, out: str | None, epsilon: float | None, seed: int | None):
    """Enumerate DRC abutment scenarios and build one layout covering them all."""
    cfg = _load(config_path)
    outdir = _outdir(cfg, out)
    eps = cfg.drc.epsilon if epsilon is None else epsilon
    rng = random.Random(cfg.drc.seed if seed is None else seed)
    scenarios = drc_mod.enumerate_scenarios(cfg.templates)
    try:
        cover = drc_mod.greedy_cover(scenarios, cfg.templates, epsilon=eps, rng=rng)
    except SitepackError as exc:
        click.echo(f"coverage failed: {exc}", err=True)
        sys.exit(EXIT_SOLVER_FAILURE)
    report = drc_mod.verify_coverage(cover, scenarios)
    with open(outdir / "coverage.csv", "w", encoding="utf-8", newline="") as fh:
        drc_mod.write_coverage_csv(report, fh)
    (outdir / "cover.svg").write_text(render_cover_svg(cover), encoding="utf-8")
    click.echo(
        f"{report.covered}/{report.requested} scenarios covered "
        f"({report.coverage_pct:.2f}%), avg occurrence {report.avg_occurrence:.2f}"
    )
    if report.coverage_pct < 100.0:
        sys.exit(EXIT_SOLVER_FAILURE)


@main.command()
@click.option("--script", "script_path", required=True, type=click.Path(), help="Ops script file.")
@click.option("--out", default="out", help="Output directory.")
@click.option("--sites", type=int, default=4, help="Chain length when the script sets none.")
def simulate(script_path: str, out: str | None, sites: int):
    """Run an mmio scenario script; writes one trace line per cycle event."""
    try:
        text = pathlib.Path(script_path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail_config(ConfigError([f"cannot read script: {exc}"]))
    outdir = pathlib.Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    rows: list[str] = []

    def hook(cycle: int, station: str, event: str, payload: str) -> None:
        rows.append(f"{cycle},{station},{event},{payload}")

    try:
        network = run_ops_script(text, n_default=sites, trace_hook=hook)
    except SitepackError as exc:
        click.echo(f"simulation error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    trace_path = outdir / (pathlib.Path(script_path).stem + ".trace")
    trace_path.write_text("\n".join(rows) + ("\n" if rows else ""), encoding="utf-8")
    click.echo(f"{network.cycle} cycles, {len(rows)} events -> {trace_path}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--instances", "instances_path", required=True, type=click.Path())
@click.option("--out", "out_path", default=None, help="Metrics CSV path.")
def bench(config_path: str, instances_path: str, out_path: str | None):
    """Floorplan every benchmark instance and emit the metrics table."""
    cfg = _load(config_path)
    try:
        instances = load_instances(instances_path, cfg.templates)
    except ConfigError as exc:
        _fail_config(exc)
    result = run_benchmark(
        instances, cfg.grid, cfg.budget, controller=cfg.controller, ap=cfg.anneal
    )
    target = pathlib.Path(out_path) if out_path else _outdir(cfg, None) / "metrics.csv"
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="") as fh:
        write_metrics_csv(result, fh, wall_time=cfg.wall_time_in_csv)
    summary = result.utilization_summary()
    if summary is None:
        click.echo("no successful rows")
    else:
        click.echo(f"mean util {summary[0]:.2f}% (+/- {summary[1]:.2f})")
    if any(r.metrics is None for r in result.rows):
        sys.exit(EXIT_SOLVER_FAILURE)


@main.command()
@click.option("--layout", "layout_path", required=True, type=click.Path())
@click.option("--out", "out_path", default=None, help="SVG path (default: layout path + .svg).")
@click.option("--scale", type=int, default=2, help="Pixels per track.")
def render(layout_path: str, out_path: str | None, scale: int):
    """Render a layout JSON file to SVG."""
    try:
        layout = layout_from_json(pathlib.Path(layout_path).read_text(encoding="utf-8"))
    except ConfigError as exc:
        _fail_config(exc)
    except OSError as exc:
        _fail_config(ConfigError([f"cannot read layout: {exc}"]))
    target = pathlib.Path(out_path) if out_path else pathlib.Path(layout_path).with_suffix(".svg")
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(render_svg(layout, scale), encoding="utf-8")
    click.echo(str(target))


if __name__ == "__main__":
    main()
