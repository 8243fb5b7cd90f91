"""sitepack: pack templated chip sites onto a routing-track grid, route them to
a global controller, enumerate DRC abutment coverage, and model the fixed-area
open-chain interconnect that lives in the leftover tracks."""

from .driver import (
    BenchmarkInstance,
    BenchmarkResult,
    FloorplanBudget,
    FloorplanResult,
    floorplan,
    run_benchmark,
)
from .errors import (
    ConfigError,
    CoverageError,
    FloorplanError,
    LayoutError,
    MmioTimeout,
    PlacementError,
    SitepackError,
)
from .geometry import Rect, Side, overlaps
from .model import (
    Controller,
    GridConfig,
    Layout,
    Metrics,
    PortSpec,
    RoutePath,
    SiteInstance,
    Template,
    compute_bounding_box,
    compute_metrics,
    metrics_from_areas,
    normalize_layout,
    pin_cell,
)
from .placement import (
    AnnealParams,
    CostParams,
    Skyline,
    anneal,
    compute_cost,
    perturb,
    place_with_skyline,
    skyline_candidates,
)
from .routing import OrderingStrategy, RoutingState, astar, buffer_zone, order_pins, route_all

__version__ = "0.1.0"
