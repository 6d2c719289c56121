"""Exception types shared across the package."""


class QecSenseError(Exception):
    """Base class for all package errors."""


class ShapeError(QecSenseError):
    """Operands have incompatible or invalid dimensions."""


class DimensionTooLarge(QecSenseError):
    """A dense object would exceed the configured dimension cap."""


class NumericalFailure(QecSenseError):
    """A numerical routine failed to converge or returned garbage."""


class GaugeFailure(QecSenseError):
    """Gauge-fixing invariants could not be met (bad extremal states)."""


class HnlsViolated(QecSenseError):
    """Operation requires the Hamiltonian outside the Lindblad span."""


class OptimizerStalled(QecSenseError):
    """Primal-dual gap above tolerance after the iteration budget."""


class ConstraintInfeasible(QecSenseError):
    """Linear constraint set of an optimization problem has no solution."""


class WSetTooLarge(QecSenseError):
    """Codeword string set exceeds the enumeration cap."""


class OrthogonalityViolated(QecSenseError):
    """Error spaces of the two codewords are not orthogonal."""


class CholeskyFailure(QecSenseError):
    """Gram matrix is indefinite beyond tolerance."""


class PositivityLost(QecSenseError):
    """Evolved density matrix has a significantly negative eigenvalue."""


class IllConditioned(QecSenseError):
    """Too much weight on the truncated spectral sector."""
