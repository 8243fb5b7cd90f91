"""Exception types shared across the toolkit."""


class SitepackError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SitepackError):
    """Invalid run configuration. Carries every violation found, not just the first."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class LayoutError(SitepackError):
    """Layout-level contract violation (empty layout, degenerate bbox, off-grid pin)."""


class PlacementError(SitepackError):
    """No feasible placement could be produced."""


class FloorplanError(SitepackError):
    """No placement attempt produced a routable layout."""


class CoverageError(SitepackError):
    """Scenario coverage cannot make progress."""


class MmioTimeout(SitepackError):
    """A memory-mapped read produced no response within the timeout bound."""

    def __init__(self, addr, cycles):
        self.addr = addr
        self.cycles = cycles
        super().__init__(f"no response for address 0x{addr:010x} after {cycles} cycles")
