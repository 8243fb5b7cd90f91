"""Skyline packing and simulated-annealing refinement.

Placement legality rules (checked cell-wise by the test oracles):

* blocks sit at x >= margin_x, y >= margin_y;
* any two blocks are separated by at least `spacing` empty tracks on some axis;
* each block reserves an extra empty strip along its full port side, of depth
  spacing + max(spacing, 1), so a route can always reach the pin;
* the maintained skyline is exactly the upper envelope of the placed rects.

A candidate block is dropped onto the envelope of everything within `spacing`
of its span and then bumped upward until no reservation strip is violated,
which keeps the skyline honest while still enforcing the gaps.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

from .errors import LayoutError, PlacementError
from .geometry import Rect, Side, bounding_rect
from .model import Controller, GridConfig, Layout, SiteInstance, Template, compute_bounding_box


@dataclass(frozen=True)
class Skyline:
    """Upper envelope profile: ordered (x_start, x_end, height) segments.

    Segments partition [x0, x0 + width) with no gaps or overlaps; adjacent
    segments always have distinct heights after canonicalization.
    """

    segments: tuple[tuple[int, int, int], ...]

    @classmethod
    def flat(cls, x0: int, width: int, height: int = 0) -> "Skyline":
        return cls(segments=((x0, x0 + width, height),))

    def height_over(self, a: int, b: int) -> int:
        """Max segment height over the span [a, b); 0 where nothing stands."""
        best = 0
        for x1, x2, h in self.segments:
            if x2 > a and x1 < b and h > best:
                best = h
        return best

    def raised(self, a: int, b: int, height: int) -> "Skyline":
        """New skyline with [a, b) set to `height` (must not lower the profile)."""
        pieces: list[tuple[int, int, int]] = []
        for x1, x2, h in self.segments:
            if x2 <= a or x1 >= b:
                pieces.append((x1, x2, h))
                continue
            if x1 < a:
                pieces.append((x1, a, h))
            if x2 > b:
                pieces.append((b, x2, h))
        pieces.append((a, b, height))
        pieces.sort()
        merged: list[tuple[int, int, int]] = []
        for x1, x2, h in pieces:
            if merged and merged[-1][2] == h and merged[-1][1] == x1:
                merged[-1] = (merged[-1][0], x2, h)
            else:
                merged.append((x1, x2, h))
        return Skyline(segments=tuple(merged))


@dataclass(frozen=True)
class AnnealParams:
    iterations: int = 2000
    initial_temp: float | None = None  # None: 0.1 x initial cost
    cooling: float = 0.95
    rng_seed: int = 0

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not (0.0 < self.cooling < 1.0):
            raise ValueError("cooling must be in (0, 1)")
        if self.initial_temp is not None and self.initial_temp <= 0:
            raise ValueError("initial_temp must be positive")


@dataclass(frozen=True)
class CostParams:
    density_weight: float
    aspect_weight: float
    max_aspect: float = 2.0

    def __post_init__(self):
        if self.density_weight < 0 or self.aspect_weight < 0:
            raise ValueError("weights must be >= 0")
        if self.max_aspect < 1:
            raise ValueError("max_aspect must be >= 1")

    @classmethod
    def for_blocks(cls, areas: Sequence[int], max_aspect: float = 2.0) -> "CostParams":
        """Defaults scaled so all three cost terms matter at instance scale."""
        mean_area = sum(areas) / len(areas)
        return cls(density_weight=0.1 * mean_area, aspect_weight=mean_area, max_aspect=max_aspect)


# One packable block: (key, width, height, port). key is the site id, or
# CONTROLLER_KEY for the global controller.
CONTROLLER_KEY = -1
_PackBlock = tuple[int, int, int, object]


def port_strip(rect: Rect, side: Side, depth: int) -> Rect:
    """Reserved empty strip along the full port side of a placed block."""
    if side is Side.NORTH:
        return Rect(rect.x, rect.y2, rect.w, depth)
    if side is Side.SOUTH:
        return Rect(rect.x, rect.y - depth, rect.w, depth)
    if side is Side.EAST:
        return Rect(rect.x2, rect.y, depth, rect.h)
    return Rect(rect.x - depth, rect.y, depth, rect.h)


def reserve_depth(spacing: int) -> int:
    """Port-side reservation: `spacing` extra tracks beyond the uniform gap."""
    return spacing + max(spacing, 1)


class SkylinePlacer:
    """Sequential lowest-feasible-position packer with an inspectable skyline."""

    def __init__(self, grid: GridConfig, width_budget: int):
        self.grid = grid
        self.x0 = grid.margin_x
        self.width = width_budget
        self.skyline = Skyline.flat(self.x0, width_budget)
        self.placed: list[tuple[Rect, Side]] = []
        self._strips: list[Rect] = []

    def place_next(self, width: int, height: int, side: Side) -> Rect | None:
        """Place one block at the lowest feasible y (ties to smallest x)."""
        s = self.grid.spacing
        d = reserve_depth(s)
        x_lo, x_hi = self.x0, self.x0 + self.width - width
        if x_hi < x_lo:
            return None

        xs: set[int] = {x_lo}
        for x1, x2, _ in self.skyline.segments:
            xs.update((x1, x1 + s, x1 + d, x2 - width, x2 - width - s))
        candidates = sorted(x for x in xs if x_lo <= x <= x_hi)

        best: tuple[int, int] | None = None  # (y, x)
        for x in candidates:
            y = self.skyline.height_over(x - s, x + width + s)
            y = self.grid.margin_y if y == 0 else y + s
            if best is not None and (y, x) >= best:
                continue
            y = self._clear_conflicts(x, y, width, height, side, s, d)
            if best is None or (y, x) < best:
                best = (y, x)
        if best is None:
            return None

        y, x = best
        rect = Rect(x, y, width, height)
        self.placed.append((rect, side))
        self._strips.append(port_strip(rect, side, d))
        self.skyline = self.skyline.raised(x, x + width, y + height)
        return rect

    def _clear_conflicts(self, x: int, y: int, w: int, h: int, side: Side, s: int, d: int) -> int:
        """Bump y upward until no spacing or reservation-strip rule is violated."""
        for _ in range(4 * len(self.placed) + 8):
            bump = y
            r_x2, r_y2 = x + w, y + h
            own = port_strip(Rect(x, y, w, h), side, d)
            for (p, _), strip in zip(self.placed, self._strips):
                # uniform spacing between blocks
                if not (x >= p.x2 + s or p.x >= r_x2 + s or y >= p.y2 + s or p.y >= r_y2 + s):
                    bump = max(bump, p.y2 + s)
                # candidate inside the placed block's port strip
                if x < strip.x2 and strip.x < r_x2 and y < strip.y2 and strip.y < r_y2:
                    bump = max(bump, strip.y2, p.y2 + s)
                # placed block inside the candidate's own port strip
                if own.x < p.x2 and p.x < own.x2 and own.y < p.y2 and p.y < own.y2:
                    bump = max(bump, p.y2 + d)
            if bump == y:
                return y
            y = bump
            # strip position depends on y for south ports; recompute and recheck
        raise AssertionError("conflict resolution did not converge")


def _pack_blocks(blocks: Sequence[_PackBlock], grid: GridConfig, width_budget: int):
    placer = SkylinePlacer(grid, width_budget)
    positions: dict[int, Rect] = {}
    for key, w, h, side in blocks:
        rect = placer.place_next(w, h, side)
        if rect is None:
            return None
        positions[key] = rect
    return positions, placer


def _blocks_for(
    order: Sequence[SiteInstance],
    templates: dict[int, Template],
    controller: Controller | None,
) -> list[_PackBlock]:
    blocks: list[_PackBlock] = []
    if controller is not None:
        blocks.append((CONTROLLER_KEY, controller.width, controller.height, controller.port.side))
    for site in order:
        t = templates[site.template_id]
        blocks.append((site.id, t.width, t.height, t.port.side))
    return blocks


def _layout_from_positions(
    order: Sequence[SiteInstance],
    positions: dict[int, Rect],
    grid: GridConfig,
    templates: dict[int, Template],
    controller: Controller | None,
) -> Layout:
    sites = tuple(s.placed_at(positions[s.id].x, positions[s.id].y) for s in order)
    placed_controller = None
    if controller is not None:
        r = positions[CONTROLLER_KEY]
        placed_controller = controller.placed_at(r.x, r.y)
    return Layout(sites=sites, controller=placed_controller, routes=(), grid=grid, templates=templates)


def place_with_skyline(
    order: Sequence[SiteInstance],
    grid: GridConfig,
    templates: dict[int, Template],
    controller: Controller | None = None,
    width_budget: int | None = None,
) -> Layout | None:
    """Pack blocks in the given order; None when some block cannot fit the budget.

    The controller, when given, is always packed first; sites follow in order.
    """
    blocks = _blocks_for(order, templates, controller)
    if not blocks:
        raise PlacementError("order is empty")
    if width_budget is None:
        width_budget = sum(w for _, w, _, _ in blocks) + grid.spacing * len(blocks)
    packed = _pack_blocks(blocks, grid, width_budget)
    if packed is None:
        return None
    positions, _ = packed
    return _layout_from_positions(order, positions, grid, templates, controller)


def candidate_width_budgets(blocks: Sequence[_PackBlock], spacing: int) -> list[int]:
    """Width budgets for row-column splits, seeded by the average block width."""
    n = len(blocks)
    widths = [w for _, w, _, _ in blocks]
    avg_w = sum(widths) / n
    max_w = max(widths)
    budgets = set()
    for rows in range(1, n + 1):
        cols = math.ceil(n / rows)
        est = round(cols * avg_w + max(cols - 1, 0) * spacing)
        budgets.add(max(est, max_w))
    return sorted(budgets)


def skyline_candidates(
    order: Sequence[SiteInstance],
    grid: GridConfig,
    templates: dict[int, Template],
    controller: Controller | None = None,
) -> tuple[Layout, int]:
    """Best aspect-feasible packing over the row-column width budgets.

    Returns (layout, width_budget) so annealing can reuse the winning budget.
    Raises PlacementError when every configuration is infeasible or violates
    the aspect-ratio bound.
    """
    blocks = _blocks_for(order, templates, controller)
    if not blocks:
        raise PlacementError("order is empty")
    best: tuple[float, float, int] | None = None
    best_layout: Layout | None = None
    for budget in candidate_width_budgets(blocks, grid.spacing):
        packed = _pack_blocks(blocks, grid, budget)
        if packed is None:
            continue
        positions, _ = packed
        bbox = bounding_rect(list(positions.values()))
        if bbox.w == 0 or bbox.h == 0:
            continue
        aspect = max(bbox.w, bbox.h) / min(bbox.w, bbox.h)
        if aspect > grid.max_aspect:
            continue
        key = (bbox.area, aspect, budget)
        if best is None or key < best:
            best = key
            best_layout = _layout_from_positions(order, positions, grid, templates, controller)
    if best_layout is None or best is None:
        raise PlacementError("no initial layout")
    return best_layout, best[2]


def cost_from_terms(bbox_w: float, bbox_h: float, block_area: float, p: CostParams) -> float:
    """Packing cost: area + density penalty + aspect-ratio excess penalty."""
    if bbox_w <= 0 or bbox_h <= 0:
        raise LayoutError("bounding box has a zero dimension")
    area = bbox_w * bbox_h
    density = block_area / area
    aspect_excess = max(0.0, max(bbox_w, bbox_h) / min(bbox_w, bbox_h) - p.max_aspect)
    return area + p.density_weight * (1.0 - density) + p.aspect_weight * aspect_excess


def compute_cost(layout: Layout, p: CostParams) -> float:
    bbox = compute_bounding_box(layout)
    return cost_from_terms(bbox.w, bbox.h, layout.block_area(), p)


def perturb(order: Sequence, rng: random.Random, keep_first: bool = False) -> list:
    """Copy of `order` with two uniformly chosen positions swapped.

    With keep_first the leading (largest-first) element never moves. Orders
    too short to swap come back unchanged.
    """
    out = list(order)
    lo = 1 if keep_first else 0
    if len(out) - lo < 2:
        return out
    i, j = rng.sample(range(lo, len(out)), 2)
    out[i], out[j] = out[j], out[i]
    return out


def accept_candidate(delta: float, temp: float, rng: random.Random) -> bool:
    """Classical annealing acceptance: improvements always, others by e^(-d/T)."""
    if delta < 0:
        return True
    if temp <= 0:
        return False
    return rng.random() < math.exp(-delta / temp)


def anneal(
    sites: Sequence[SiteInstance],
    grid: GridConfig,
    templates: dict[int, Template],
    ap: AnnealParams,
    cp: CostParams,
    controller: Controller | None = None,
    keep_first: bool = False,
    cost_trace: list | None = None,
) -> Layout:
    """Refine the initial skyline packing by perturbing the site order.

    Deterministic per seed. Temperature cools only on evaluated candidates;
    infeasible packings are skipped without cooling. Returns the best layout
    seen, which is never worse than the initial one.
    """
    if not sites:
        raise PlacementError("no sites to place")
    rng = random.Random(ap.rng_seed)
    order = list(sites)
    layout, width = skyline_candidates(order, grid, templates, controller)
    cost = compute_cost(layout, cp)
    best_layout, best_cost = layout, cost
    temp = ap.initial_temp if ap.initial_temp is not None else 0.1 * cost

    for _ in range(ap.iterations):
        new_order = perturb(order, rng, keep_first)
        candidate = place_with_skyline(new_order, grid, templates, controller, width)
        if candidate is None:
            continue
        new_cost = compute_cost(candidate, cp)
        if accept_candidate(new_cost - cost, temp, rng):
            order, layout, cost = new_order, candidate, new_cost
            if cost < best_cost:
                best_layout, best_cost = candidate, cost
        temp *= ap.cooling
        if cost_trace is not None:
            cost_trace.append(best_cost)
    return best_layout
