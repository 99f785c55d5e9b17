"""Exception and warning types raised by dqcalib."""


class CalibrationError(Exception):
    """Base class for all dqcalib errors."""


# --- algebra -----------------------------------------------------------------

class NonUnitRotation(CalibrationError, ValueError):
    pass


class NotRigid(CalibrationError, ValueError):
    pass


class NonPositiveScale(CalibrationError, ValueError):
    pass


# --- problem assembly ----------------------------------------------------------

class BadScaleIndex(CalibrationError, IndexError):
    pass


class EmptyScaleGroup(CalibrationError, ValueError):
    def __init__(self, index):
        super().__init__(f"no motion pairs for scale index {index}")
        self.index = index


class DimensionMismatch(CalibrationError, ValueError):
    pass


class AntiparallelScale(CalibrationError, ValueError):
    """The scaled rotation block points against the rotation (alpha < 0)."""


class ScaleCountMismatch(CalibrationError, ValueError):
    pass


# --- solvers -------------------------------------------------------------------

class NoConvergence(CalibrationError, RuntimeError):
    """SQP exhausted every start; ``best`` holds the least infeasible iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class IllConditioned(CalibrationError, RuntimeError):
    pass


class Unbounded(CalibrationError, RuntimeError):
    pass


class NullSpaceDimension(CalibrationError, RuntimeError):
    """Z(lambda*) has no usable null space, so no primal can be recovered."""

    def __init__(self, dim, spectrum=None, message=None):
        msg = message or f"null space of Z(lambda*) has dimension {dim}"
        super().__init__(msg)
        self.dim = dim
        self.spectrum = spectrum


class ConstraintViolation(CalibrationError, RuntimeError):
    pass


# --- data io -------------------------------------------------------------------

class TrajectoryError(CalibrationError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ParseError(TrajectoryError):
    pass


class NonMonotonicTime(TrajectoryError):
    pass


class BadQuaternionNorm(TrajectoryError):
    pass


class NoOverlap(CalibrationError, ValueError):
    pass


class TooFewPairs(CalibrationError, ValueError):
    pass


# --- warnings ------------------------------------------------------------------

class UnobservableWarning(UserWarning):
    """Rotation axes do not excite enough directions to observe the calibration."""


class RankDeficientGradients(UserWarning):
    """Constraint gradients at the point are linearly dependent."""
