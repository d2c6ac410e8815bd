"""Exception types raised across the package."""


class InvalidGeometry(ValueError):
    """Non-physical cavity parameters (non-positive lengths, n < 1, ...)."""


class UnstableCavity(ValueError):
    """Geometric length outside the plano-concave stability range 0 < L_g < R."""


class PeriodNotFound(RuntimeError):
    """No full steep/flat cycle of a branch inside the scan window."""


class ZeroSlope(ValueError):
    """Frequency does not move with cavity length at the requested point."""


class FitError(RuntimeError):
    """A nonlinear fit did not converge or could not be set up."""


class PeaksUnresolved(FitError):
    """Fewer than three peaks could be seeded in a sideband scan."""


class FitRejected(FitError):
    """The fit converged but failed the quality screen."""

    def __init__(self, msg, fit=None):
        super().__init__(msg)
        self.fit = fit


class ConfigError(ValueError):
    """Invalid run configuration or malformed input file."""
