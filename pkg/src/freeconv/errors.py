"""Exception types shared across the library."""


class FreeConvError(Exception):
    """Base class for all freeconv errors."""


class AtomDensityUndefined(FreeConvError):
    """Density requested for a purely atomic measure."""


class MomentDiverges(FreeConvError):
    """Requested moment is not finite for this measure."""


class NonFiniteSample(FreeConvError):
    """A density function returned NaN or infinity at a sample node."""


class SupportInvalid(FreeConvError):
    """Support interval is empty or reversed."""


class OnSupport(FreeConvError):
    """Evaluation point lies on (or too close to) the support."""


class SupportNotEnclosed(FreeConvError):
    """Ellipse interval does not strictly contain the measure's support."""


class CoefficientGrowth(FreeConvError):
    """Series coefficients failed to decay below the truncation tolerance."""


class DegenerateLeading(FreeConvError):
    """All polynomial coefficients fall below the truncation tolerance."""


class ZeroTarget(FreeConvError):
    """Inverse Cauchy transform requested at y = 0."""


class NoPreimage(FreeConvError):
    """No preimage of the target value inside the admissible region."""


class BranchConflict(FreeConvError):
    """Upper and lower branch inversions disagree on a shared preimage."""


class OutsideValidity(FreeConvError):
    """Target lies outside the region where the ellipse expansion is valid."""


class TurningPoint(FreeConvError):
    """Derivative of the Cauchy transform vanishes at the preimage."""


class EmptyCloud(FreeConvError):
    """All candidate points were filtered out of the point cloud."""


class NoSignChange(FreeConvError):
    """Bisection bracket endpoints have the same derivative sign."""


class IllConditioned(FreeConvError):
    """Least-squares system condition estimate exceeds the safe bound."""


class ResidualTooLarge(FreeConvError):
    """Recovered measure failed the relative residual acceptance bound."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class NotSingleValued(FreeConvError):
    """An input inverse transform is multi-valued on the whole cloud."""


class SupportNotPositive(FreeConvError):
    """Free multiplication requires supports contained in [0, infinity)."""


class DivisionByXUnstable(FreeConvError):
    """Dividing the recovered measure by x produced an invalid density."""


class NotSymmetric(FreeConvError):
    """Eigenvalue routine received a matrix that is not symmetric."""
