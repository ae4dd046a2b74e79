"""Exception hierarchy shared by every module."""


class SemXaiError(Exception):
    """Base class for all package errors."""


class ShapeMismatch(SemXaiError, ValueError):
    pass


class InvalidParam(SemXaiError, ValueError):
    pass


class InvalidInput(SemXaiError, ValueError):
    pass


class EmptyDataset(SemXaiError, ValueError):
    pass


class InsufficientSamples(SemXaiError, ValueError):
    pass


class DegenerateData(SemXaiError, ValueError):
    """Row-centred data has zero variance."""


class DegenerateDifference(SemXaiError, ValueError):
    """Masked and unmasked traits do not differ."""


class DegenerateDistribution(SemXaiError, ValueError):
    pass


class DivergedOptimization(SemXaiError, RuntimeError):
    pass


class NotFitted(SemXaiError, RuntimeError):
    pass


class IncompleteRadar(SemXaiError, ValueError):
    pass


class MissingPrerequisite(SemXaiError, RuntimeError):
    """A pipeline step ran before the step that produces its inputs."""

    def __init__(self, step, missing, hint=None):
        self.step = step
        self.missing = missing
        msg = f"'{step}' needs artifacts produced by '{missing}'"
        if hint:
            msg += f"; {hint}"
        super().__init__(msg)


class IoError(SemXaiError, OSError):
    """Missing or corrupt artifact file. The message always carries the path."""

    def __init__(self, path, reason):
        self.path = str(path)
        super().__init__(f"{path}: {reason}")
