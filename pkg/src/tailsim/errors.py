"""Exception hierarchy for tail simulation."""


class TailSimError(Exception):
    """Base class for all errors raised by tailsim."""


class InfeasiblePrefixError(TailSimError):
    """A sequential bound produced an empty slice (L >= U)."""


class CoordinateInactiveError(TailSimError):
    """The target does not depend on the coordinate being inverted."""


class EvaluationError(TailSimError):
    """The target returned a non-finite value at a probe point."""


class TangencyError(TailSimError):
    """Newton iteration for the tangency point did not converge."""


class RegionConstructionError(TailSimError):
    """A reduced-rejection simulation region could not be built."""


class QuadratureError(TailSimError):
    """A stage integrand of the equal-score tables was not finite."""


class NoTailHitsError(TailSimError):
    """No simulated point landed in the tail."""


class QuantileRangeError(TailSimError):
    """Requested probability lies outside the simulated tail."""


class OracleUnderpoweredError(TailSimError):
    """Brute-force oracle collected too few tail hits to be trusted."""


class OutsidePieceError(TailSimError):
    """Argument lies outside the supported piece of a piecewise CDF."""
