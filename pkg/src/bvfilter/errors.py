"""Exception types shared across the package."""


class ScenarioValidationError(ValueError):
    """A scenario failed one or more validation checks."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"scenario validation failed: {lines}")


class GridMismatchError(ValueError):
    """Two artifacts were produced on incompatible time or space grids."""


class CflError(ValueError):
    """Explicit grid step would be unstable for the requested dt/dx."""


class SimulationError(RuntimeError):
    """A sample path left the representable range (NaN or overflow)."""


class FilterCollapseError(RuntimeError):
    """All filter mass vanished (weights at -inf or density underflow)."""
