"""Exception types raised across the package."""


class DegenerateMetric(ValueError):
    """Raised at r = a, where Delta = 0 and the metric loses rank."""


class PoleSingularity(ValueError):
    """Raised when a chart is used at the pole it does not cover."""


class OdeStepFailure(RuntimeError):
    """Raised when step halving cannot meet the requested transport tolerance."""


class AliasError(ValueError):
    """Raised when a Fourier cutoff exceeds the Nyquist limit of the grid."""


class QuadratureDivergence(RuntimeError):
    """Raised when a regularized integral does not stabilize under extrapolation."""


class NonIntegrable(RuntimeError):
    """Raised when the radial tail of an integrand is not negligible."""


class InconsistentSection(ValueError):
    """Raised when chart components of a section disagree on the overlap."""
