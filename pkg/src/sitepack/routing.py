"""A* track routing from the controller pin through every site pin.

Routing works on the same track grid as placement. Block interiors are hard
obstacles; routed paths claim their cells plus a spacing buffer around them.
Pins, and the cells within `spacing` of a pin, are exempt from buffer
blocking: consecutive legs of the daisy chain depart from the pin the
previous leg arrived at, which would otherwise be walled in by its buffer.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .geometry import Cell, Rect, chebyshev, manhattan
from .model import Layout, RoutePath, compute_bounding_box, controller_pin, site_pin


class OrderingStrategy(str, Enum):
    MST_DFS = "mst_dfs"
    GREEDY_NEAREST = "greedy_nearest"
    RANDOM_SHUFFLE = "random_shuffle"


# Attempt k uses ladder[min(k, 2)]; every attempt past the second reshuffles.
FALLBACK_LADDER = (
    OrderingStrategy.MST_DFS,
    OrderingStrategy.GREEDY_NEAREST,
    OrderingStrategy.RANDOM_SHUFFLE,
)


@dataclass
class RoutingState:
    """Obstacle bookkeeping for one routing attempt."""

    block_rects: tuple[Rect, ...] = ()
    blocked: set[Cell] = field(default_factory=set)
    occupied: set[Cell] = field(default_factory=set)
    origin: Cell | None = None
    _inside_memo: dict[Cell, bool] = field(default_factory=dict)

    def inside_block(self, cell: Cell) -> bool:
        hit = self._inside_memo.get(cell)
        if hit is None:
            hit = any(r.contains_cell(cell) for r in self.block_rects)
            self._inside_memo[cell] = hit
        return hit

    def passable(self, cell: Cell) -> bool:
        return (
            cell not in self.occupied
            and cell not in self.blocked
            and not self.inside_block(cell)
        )


_NEIGHBOR_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def astar(start: Cell, goal: Cell, state: RoutingState, bounds: Rect) -> RoutePath | None:
    """Shortest 4-connected path from start to goal, or None when unreachable.

    The heuristic is plain Manhattan distance, so returned paths are optimal.
    Start and goal are always enterable (pins sit inside other legs' cells).
    """
    if start == goal:
        return RoutePath(cells=(start,), endpoints=(start, goal))
    open_heap: list[tuple[int, int, int, Cell]] = []
    counter = 0
    heapq.heappush(open_heap, (manhattan(start, goal), 0, counter, start))
    g_score: dict[Cell, int] = {start: 0}
    came_from: dict[Cell, Cell] = {}

    while open_heap:
        _, g, _, current = heapq.heappop(open_heap)
        if current == goal:
            cells = [current]
            while current in came_from:
                current = came_from[current]
                cells.append(current)
            cells.reverse()
            return RoutePath(cells=tuple(cells), endpoints=(start, goal))
        if g > g_score.get(current, g):
            continue
        cx, cy = current
        for dx, dy in _NEIGHBOR_STEPS:
            nxt = (cx + dx, cy + dy)
            if not bounds.contains_cell(nxt):
                continue
            if nxt != goal and not state.passable(nxt):
                continue
            tentative = g + 1
            if tentative < g_score.get(nxt, 1 << 60):
                g_score[nxt] = tentative
                came_from[nxt] = current
                counter += 1
                heapq.heappush(open_heap, (tentative + manhattan(nxt, goal), tentative, counter, nxt))
    return None


def order_pins(
    pins: Sequence[Cell],
    origin: Cell,
    strategy: OrderingStrategy,
    rng: random.Random | None = None,
) -> list[Cell]:
    """Visit order over the pins, origin always first. Ties go to lower pin index."""
    if not pins:
        return [origin]
    if strategy is OrderingStrategy.RANDOM_SHUFFLE:
        if rng is None:
            raise ValueError("random_shuffle ordering needs an rng")
        shuffled = list(pins)
        rng.shuffle(shuffled)
        return [origin] + shuffled
    if strategy is OrderingStrategy.GREEDY_NEAREST:
        remaining = list(range(len(pins)))
        out = [origin]
        current = origin
        while remaining:
            best = min(remaining, key=lambda i: (manhattan(current, pins[i]), i))
            remaining.remove(best)
            current = pins[best]
            out.append(current)
        return out
    return _mst_dfs_order(pins, origin)


def _mst_dfs_order(pins: Sequence[Cell], origin: Cell) -> list[Cell]:
    """Prim's MST over pins + origin (Manhattan metric), emitted in DFS preorder.

    Node 0 is the origin; pin i becomes node i + 1, and ties break low-id.
    DFS visits children nearest-first.
    """
    nodes = [origin] + list(pins)
    n = len(nodes)
    in_tree = [False] * n
    dist = [1 << 60] * n
    closest = [0] * n
    dist[0] = 0
    children: dict[int, list[int]] = {i: [] for i in range(n)}
    for _ in range(n):
        u = min((i for i in range(n) if not in_tree[i]), key=lambda i: (dist[i], i))
        in_tree[u] = True
        if u != 0:
            children[closest[u]].append(u)
        for v in range(n):
            if not in_tree[v]:
                d = manhattan(nodes[u], nodes[v])
                if d < dist[v]:
                    dist[v] = d
                    closest[v] = u
    order: list[Cell] = []
    stack = [0]
    while stack:
        u = stack.pop()
        order.append(nodes[u])
        kids = sorted(children[u], key=lambda v: (manhattan(nodes[u], nodes[v]), v), reverse=True)
        stack.extend(kids)
    return order


def buffer_zone(
    path: RoutePath,
    spacing: int,
    block_rects: Iterable[Rect] = (),
    pin_cells: Iterable[Cell] = (),
) -> set[Cell]:
    """Cells within Chebyshev distance <= spacing of the path.

    Path cells, block-interior cells, and pin cells are excluded; pins must
    stay enterable for later legs.
    """
    if spacing <= 0:
        return set()
    rects = tuple(block_rects)
    pins = set(pin_cells)
    path_cells = set(path.cells)
    zone: set[Cell] = set()
    for x, y in path.cells:
        for dx in range(-spacing, spacing + 1):
            for dy in range(-spacing, spacing + 1):
                cell = (x + dx, y + dy)
                if cell in path_cells or cell in pins or cell in zone:
                    continue
                if any(r.contains_cell(cell) for r in rects):
                    continue
                zone.add(cell)
    return zone


def pin_approach_zone(pins: Iterable[Cell], spacing: int) -> set[Cell]:
    """Cells within Chebyshev distance <= spacing of any pin."""
    zone: set[Cell] = set()
    for px, py in pins:
        for dx in range(-spacing, spacing + 1):
            for dy in range(-spacing, spacing + 1):
                zone.add((px + dx, py + dy))
    return zone


def routing_bounds(layout: Layout) -> Rect:
    """Search window: the placed bbox grown by three detour lanes, clamped to
    the grid. One lane of (spacing + 1) proved too tight in practice: a single
    outside pass seals the ring for every later leg."""
    bbox = compute_bounding_box(layout)
    grow = 3 * (layout.grid.spacing + 1)
    x = max(0, bbox.x - grow)
    y = max(0, bbox.y - grow)
    return Rect(x, y, bbox.x2 + grow - x, bbox.y2 + grow - y)


def route_all(
    layout: Layout, attempts: int, rng: random.Random
) -> list[RoutePath] | None:
    """Route the controller pin through every site pin as one daisy chain.

    Attempt 1 orders pins by MST-DFS, attempt 2 by greedy nearest-neighbor,
    and later attempts shuffle randomly. Each successful leg claims its cells
    and a spacing buffer; a failed leg abandons the whole attempt. Returns the
    first fully routed set of legs, or None when every attempt fails.
    """
    origin = controller_pin(layout)
    sites = sorted(layout.sites, key=lambda s: s.id)
    pins = [site_pin(layout, s) for s in sites]
    block_rects = tuple(layout.placed_rects())
    bounds = routing_bounds(layout)
    approach = pin_approach_zone([origin] + pins, layout.grid.spacing)
    all_pins = set([origin] + pins)

    for attempt in range(attempts):
        strategy = FALLBACK_LADDER[min(attempt, len(FALLBACK_LADDER) - 1)]
        order = order_pins(pins, origin, strategy, rng)
        state = RoutingState(block_rects=block_rects, origin=origin)
        paths: list[RoutePath] = []
        ok = True
        for a, b in zip(order, order[1:]):
            path = astar(a, b, state, bounds)
            if path is None:
                ok = False
                break
            paths.append(path)
            state.occupied.update(path.cells)
            buf = buffer_zone(path, layout.grid.spacing, block_rects, all_pins)
            state.blocked.update(buf - approach)
        if ok:
            return paths
    return None
