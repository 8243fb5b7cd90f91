"""Core domain model: templates, grid configuration, layouts, and area metrics.

Everything here is an immutable value type; the operations are pure
functions, so layouts can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import LayoutError
from .geometry import Cell, Rect, Side, bounding_rect

TRACK_WIDTH = 1  # normalized track unit; physical pitch is applied only at export


@dataclass(frozen=True)
class PortSpec:
    """A fixed-length port segment along one side of a block.

    `offset` counts tracks from the side origin (the lower-left corner of the
    block for north/south sides, measured along x; along y for east/west).
    """

    side: Side
    offset: int
    length: int

    def __post_init__(self):
        if self.offset < 0 or self.length < 1:
            raise ValueError(f"bad port segment: offset={self.offset} length={self.length}")


@dataclass(frozen=True)
class Template:
    """A reusable chip-site footprint in integer track units with one port."""

    id: int
    width: int
    height: int
    port: PortSpec

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"template {self.id}: dimensions must be >= 1 track")
        side_len = self.width if self.port.side in (Side.NORTH, Side.SOUTH) else self.height
        if self.port.offset + self.port.length > side_len:
            raise ValueError(
                f"template {self.id}: port segment exceeds its side "
                f"({self.port.offset}+{self.port.length} > {side_len})"
            )

    @property
    def area(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class SiteInstance:
    """One chip site. `id` doubles as its interconnect chip address."""

    id: int
    template_id: int
    position: Cell | None = None

    def placed_at(self, x: int, y: int) -> "SiteInstance":
        return replace(self, position=(x, y))


@dataclass(frozen=True)
class Controller:
    """The global controller block: a placed rectangle with one port."""

    width: int
    height: int
    port: PortSpec
    position: Cell | None = None

    @property
    def area(self) -> int:
        return self.width * self.height

    def placed_at(self, x: int, y: int) -> "Controller":
        return replace(self, position=(x, y))


@dataclass(frozen=True)
class GridConfig:
    """Global grid parameters: spacing, margins, aspect bound, controller size.

    spacing = 2 is the routable default: the port-side reservation then holds
    two track lanes, so chained routes can revisit a pin channel.
    """

    spacing: int = 2
    margin_x: int = 3
    margin_y: int = 3
    max_aspect: float = 2.0
    controller_size: tuple[int, int] = (8, 8)
    outer_bound: tuple[int, int] | None = None

    def __post_init__(self):
        if self.spacing < 0:
            raise ValueError("spacing must be >= 0")
        if self.margin_x < 0 or self.margin_y < 0:
            raise ValueError("margins must be >= 0")
        if self.max_aspect < 1:
            raise ValueError("max_aspect must be >= 1")


@dataclass(frozen=True)
class RoutePath:
    """A 1-track-wide routed path: ordered 4-connected cells, endpoints included."""

    cells: tuple[Cell, ...]
    endpoints: tuple[Cell, Cell]

    def __post_init__(self):
        for a, b in zip(self.cells, self.cells[1:]):
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
                raise ValueError(f"route cells {a} -> {b} are not 4-neighbors")

    def __len__(self) -> int:
        return len(self.cells)


@dataclass(frozen=True)
class Layout:
    """Placed sites + controller + routed paths on a shared grid."""

    sites: tuple[SiteInstance, ...]
    controller: Controller | None
    routes: tuple[RoutePath, ...]
    grid: GridConfig
    templates: dict[int, Template] = field(default_factory=dict)

    def template_of(self, site: SiteInstance) -> Template:
        return self.templates[site.template_id]

    def site_rect(self, site: SiteInstance) -> Rect:
        if site.position is None:
            raise LayoutError(f"site {site.id} is not placed")
        t = self.template_of(site)
        return Rect(site.position[0], site.position[1], t.width, t.height)

    def controller_rect(self) -> Rect | None:
        c = self.controller
        if c is None or c.position is None:
            return None
        return Rect(c.position[0], c.position[1], c.width, c.height)

    def placed_rects(self) -> list[Rect]:
        """Rects of all placed blocks (sites then controller)."""
        rects = [self.site_rect(s) for s in self.sites if s.position is not None]
        cr = self.controller_rect()
        if cr is not None:
            rects.append(cr)
        return rects

    def route_cells(self) -> set[Cell]:
        cells: set[Cell] = set()
        for path in self.routes:
            cells.update(path.cells)
        return cells

    def block_area(self) -> int:
        """Total area of placed sites plus the controller."""
        total = sum(self.template_of(s).area for s in self.sites if s.position is not None)
        if self.controller is not None and self.controller.position is not None:
            total += self.controller.area
        return total


@dataclass(frozen=True)
class Metrics:
    """Benchmark-style area statistics. Percentages are rounded to 2 decimals."""

    solver_time_s: float
    chip_site_area: int
    track_area: int
    bbox_area: float
    chip_plus_track_area: int
    util_pct: float
    track_pct: float


def compute_bounding_box(layout: Layout) -> Rect:
    """Smallest axis-aligned rect enclosing all placed blocks and route cells."""
    rects = layout.placed_rects()
    for cell in layout.route_cells():
        rects.append(Rect(cell[0], cell[1], 1, 1))
    if not rects:
        raise LayoutError("no placed elements")
    return bounding_rect(rects)


def metrics_from_areas(
    chip_area: int, track_area: int, bbox_area: float, solver_time: float = 0.0
) -> Metrics:
    """Derive the benchmark metric columns from raw areas."""
    if bbox_area == 0:
        raise LayoutError("bounding box area is zero")
    chip_track = chip_area + track_area
    return Metrics(
        solver_time_s=solver_time,
        chip_site_area=chip_area,
        track_area=track_area,
        bbox_area=bbox_area,
        chip_plus_track_area=chip_track,
        util_pct=round(100.0 * chip_track / bbox_area, 2),
        track_pct=round(100.0 * track_area / bbox_area, 2),
    )


def compute_metrics(layout: Layout, solver_time: float = 0.0) -> Metrics:
    """Measure a fully placed (and normally routed) layout.

    Track area counts route cells only; spacing buffers are whitespace.
    """
    bbox = compute_bounding_box(layout)
    return metrics_from_areas(
        chip_area=layout.block_area(),
        track_area=len(layout.route_cells()),
        bbox_area=bbox.area,
        solver_time=solver_time,
    )


def pin_cell(rect: Rect, port: PortSpec) -> Cell:
    """The grid cell just outside the midpoint of the port segment.

    For even segment lengths, the midpoint floors toward the segment's upper
    half (offset + length // 2), which keeps the result a single cell.
    Raises LayoutError when the cell would fall off the non-negative grid.
    """
    mid = port.offset + port.length // 2
    if port.side is Side.NORTH:
        cell = (rect.x + mid, rect.y2)
    elif port.side is Side.SOUTH:
        cell = (rect.x + mid, rect.y - 1)
    elif port.side is Side.EAST:
        cell = (rect.x2, rect.y + mid)
    else:
        cell = (rect.x - 1, rect.y + mid)
    if cell[0] < 0 or cell[1] < 0:
        raise LayoutError(f"port on side {port.side.value} has no on-grid cell outside {rect}")
    return cell


def site_pin(layout: Layout, site: SiteInstance) -> Cell:
    return pin_cell(layout.site_rect(site), layout.template_of(site).port)


def controller_pin(layout: Layout) -> Cell:
    c = layout.controller
    rect = layout.controller_rect()
    if c is None or rect is None:
        raise LayoutError("controller is not placed")
    return pin_cell(rect, c.port)


def normalize_layout(layout: Layout) -> Layout:
    """Translate the layout so its bounding box lower-left corner sits at (0, 0)."""
    bbox = compute_bounding_box(layout)
    dx, dy = -bbox.x, -bbox.y
    if dx == 0 and dy == 0:
        return layout
    sites = tuple(
        s.placed_at(s.position[0] + dx, s.position[1] + dy) if s.position else s
        for s in layout.sites
    )
    controller = layout.controller
    if controller is not None and controller.position is not None:
        controller = controller.placed_at(controller.position[0] + dx, controller.position[1] + dy)
    routes = tuple(
        RoutePath(
            cells=tuple((x + dx, y + dy) for x, y in p.cells),
            endpoints=(
                (p.endpoints[0][0] + dx, p.endpoints[0][1] + dy),
                (p.endpoints[1][0] + dx, p.endpoints[1][1] + dy),
            ),
        )
        for p in layout.routes
    )
    return replace(layout, sites=sites, controller=controller, routes=routes)
