"""Top-level floorplan loop: anneal placements, verify routability, keep the best.

Attempt 1 packs sites largest-first; later attempts shuffle the order with a
seed derived from (instance seed, attempt index), so whole runs replay
bit-identically.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, replace
from statistics import mean, stdev
from typing import Sequence, TextIO

from .errors import FloorplanError, SitepackError
from .model import (
    Controller,
    GridConfig,
    Layout,
    Metrics,
    SiteInstance,
    Template,
    compute_bounding_box,
    compute_metrics,
    normalize_layout,
)
from .placement import AnnealParams, CostParams, anneal, skyline_candidates
from .routing import route_all

log = logging.getLogger(__name__)

METRICS_CSV_HEADER = (
    "id,sites,diversity,solver_time_s,chip_area,track_area,"
    "bbox_area,chip_track_area,util_pct,track_pct"
)


@dataclass(frozen=True)
class FloorplanBudget:
    placement_attempts: int = 5
    routing_attempts: int = 3
    time_limit: float | None = None

    def __post_init__(self):
        if self.placement_attempts < 1 or self.routing_attempts < 1:
            raise ValueError("attempt budgets must be >= 1")


@dataclass(frozen=True)
class BenchmarkInstance:
    id: str
    site_count: int
    template_diversity: int
    template_library: tuple[Template, ...]
    seed: int

    def __post_init__(self):
        if self.template_diversity > len(self.template_library):
            raise ValueError(
                f"instance {self.id}: diversity {self.template_diversity} exceeds "
                f"library size {len(self.template_library)}"
            )

    def build_sites(self) -> list[SiteInstance]:
        """Sites 0..N-1 with templates assigned round-robin by site id."""
        chosen = self.template_library[: self.template_diversity]
        return [
            SiteInstance(id=i, template_id=chosen[i % len(chosen)].id)
            for i in range(self.site_count)
        ]


@dataclass(frozen=True)
class FloorplanResult:
    layout: Layout
    metrics: Metrics
    attempt: int


def default_cost_params(
    sites: Sequence[SiteInstance],
    templates: dict[int, Template],
    controller: Controller | None,
    max_aspect: float,
) -> CostParams:
    areas = [templates[s.template_id].area for s in sites]
    if controller is not None:
        areas.append(controller.area)
    return CostParams.for_blocks(areas, max_aspect)


def floorplan(
    sites: Sequence[SiteInstance],
    grid: GridConfig,
    templates: dict[int, Template],
    budget: FloorplanBudget,
    ap: AnnealParams | None = None,
    cp: CostParams | None = None,
    controller: Controller | None = None,
) -> FloorplanResult:
    """Run up to `placement_attempts` anneal+route attempts, return the best routed layout.

    Raises FloorplanError when no attempt routes (or fits the outer bound).
    """
    if not sites:
        raise FloorplanError("no sites given")
    ap = ap or AnnealParams()
    cp = cp or default_cost_params(sites, templates, controller, grid.max_aspect)

    start = time.perf_counter()
    by_area_desc = sorted(sites, key=lambda s: (-templates[s.template_id].area, s.id))
    best: tuple[int, int, Layout] | None = None  # (area, attempt, layout)

    for attempt in range(1, budget.placement_attempts + 1):
        if budget.time_limit is not None and time.perf_counter() - start > budget.time_limit:
            log.info("time limit hit after %d attempts", attempt - 1)
            break
        if attempt == 1:
            order, keep_first = list(by_area_desc), True
        else:
            order = list(by_area_desc)
            random.Random(ap.rng_seed * 1000003 + attempt).shuffle(order)
            keep_first = False
        attempt_ap = replace(ap, rng_seed=ap.rng_seed + attempt)
        layout = anneal(order, grid, templates, attempt_ap, cp, controller, keep_first)

        route_rng = random.Random(ap.rng_seed * 9176 + attempt)
        paths = route_all(layout, budget.routing_attempts, route_rng)
        if paths is None:
            # the annealed layout can be compacted beyond single-layer
            # routability; fall back to this attempt's looser initial packing
            layout, _ = skyline_candidates(order, grid, templates, controller)
            paths = route_all(layout, budget.routing_attempts, route_rng)
        if paths is None:
            log.info("attempt %d: routing failed", attempt)
            continue
        routed = replace(layout, routes=tuple(paths))
        bbox = compute_bounding_box(routed)
        if grid.outer_bound is not None and (
            bbox.w > grid.outer_bound[0] or bbox.h > grid.outer_bound[1]
        ):
            log.info("attempt %d: bbox %dx%d exceeds outer bound", attempt, bbox.w, bbox.h)
            continue
        if best is None or bbox.area < best[0]:
            best = (bbox.area, attempt, routed)
            log.info("attempt %d: new best area %d", attempt, bbox.area)
        else:
            log.info("attempt %d: routed but non-improving area %d", attempt, bbox.area)

    if best is None:
        raise FloorplanError("floorplan failure")
    area, attempt, layout = best
    solver_time = time.perf_counter() - start
    layout = normalize_layout(layout)
    return FloorplanResult(layout=layout, metrics=compute_metrics(layout, solver_time), attempt=attempt)


@dataclass(frozen=True)
class BenchmarkRow:
    instance: BenchmarkInstance
    metrics: Metrics | None  # None marks a failed run
    error: str | None = None


@dataclass(frozen=True)
class BenchmarkResult:
    rows: tuple[BenchmarkRow, ...]

    def utilization_summary(self) -> tuple[float, float] | None:
        """(mean, stddev) of util_pct over successful rows; None when empty."""
        utils = [r.metrics.util_pct for r in self.rows if r.metrics is not None]
        if not utils:
            return None
        return (mean(utils), stdev(utils) if len(utils) > 1 else 0.0)


def run_benchmark(
    instances: Sequence[BenchmarkInstance],
    grid: GridConfig,
    budget: FloorplanBudget,
    controller: Controller | None = None,
    ap: AnnealParams | None = None,
    cp: CostParams | None = None,
) -> BenchmarkResult:
    """Floorplan every instance; failures become failed rows, the run continues."""
    rows: list[BenchmarkRow] = []
    for inst in instances:
        templates = {t.id: t for t in inst.template_library}
        sites = inst.build_sites()
        inst_ap = replace(ap or AnnealParams(), rng_seed=inst.seed)
        try:
            result = floorplan(sites, grid, templates, budget, inst_ap, cp, controller)
            rows.append(BenchmarkRow(instance=inst, metrics=result.metrics))
        except SitepackError as exc:
            log.warning("instance %s failed: %s", inst.id, exc)
            rows.append(BenchmarkRow(instance=inst, metrics=None, error=str(exc)))
    return BenchmarkResult(rows=tuple(rows))


def _format_area(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else f"{value:.1f}"


def write_metrics_csv(result: BenchmarkResult, out: TextIO, wall_time: bool = False) -> None:
    """Emit the benchmark table.

    solver_time_s is written as 0.00 unless wall_time is set: wall-clock
    readings would break the byte-identical rerun contract for outputs.
    """
    out.write(METRICS_CSV_HEADER + "\n")
    for row in result.rows:
        inst = row.instance
        if row.metrics is None:
            out.write(f"{inst.id},{inst.site_count},{inst.template_diversity},,,,,,,\n")
            continue
        m = row.metrics
        t = f"{m.solver_time_s:.2f}" if wall_time else "0.00"
        out.write(
            f"{inst.id},{inst.site_count},{inst.template_diversity},{t},"
            f"{m.chip_site_area},{m.track_area},{_format_area(m.bbox_area)},"
            f"{m.chip_plus_track_area},{m.util_pct:.2f},{m.track_pct:.2f}\n"
        )
