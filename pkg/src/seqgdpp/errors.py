"""Exception types raised across the package."""


class SeqGDPPError(Exception):
    """Base class for all package errors."""


class InvalidKernelError(SeqGDPPError, ValueError):
    """Kernel is not square, not finite, or not positive semi-definite."""


class ConditioningError(SeqGDPPError, ArithmeticError):
    """``L + I_V`` could not be inverted while conditioning on a selection."""


class CardinalityError(SeqGDPPError, ValueError):
    """Requested subset size exceeds the ground set."""


class UnsatisfiableSizeError(SeqGDPPError, ValueError):
    """Requested subset size has zero probability under the kernel."""


class DegenerateModelError(SeqGDPPError, ValueError):
    """Size prior puts all of its mass on unreachable sizes."""


class DegenerateFeaturesError(SeqGDPPError, ValueError):
    """Median pairwise feature distance is zero, so no bandwidth can be set."""


class SegmentTooLargeError(SeqGDPPError, ValueError):
    """Segment exceeds the exhaustive-inference cap; re-segment the video."""


class TrainingDivergedError(SeqGDPPError, FloatingPointError):
    """Objective became non-finite during training."""


class DatasetError(SeqGDPPError, ValueError):
    """Dataset file violates the schema."""


class IntegrityError(DatasetError):
    """Dataset is well formed but internally inconsistent."""


class InsufficientDataError(SeqGDPPError, ValueError):
    """Too few videos for the requested split scheme."""


class OracleUnreachableWarning(RuntimeWarning):
    """Oracle subset has zero probability under the current kernel."""
