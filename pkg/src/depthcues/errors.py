"""Exception hierarchy shared by every depthcues module."""


class DepthCuesError(Exception):
    """Base class; the CLI maps it to the data-error exit code."""


class DecodeError(DepthCuesError):
    pass


class DimensionMismatch(DepthCuesError, ValueError):
    pass


class WrongChannelCount(DepthCuesError, ValueError):
    pass


class EmptyDataset(DepthCuesError, ValueError):
    pass


class EmptyInput(DepthCuesError, ValueError):
    pass


class PatchTooLarge(DepthCuesError, ValueError):
    pass


class InvalidParams(DepthCuesError, ValueError):
    pass


class NonPositiveDepth(DepthCuesError, ValueError):
    pass


class EmptyMask(DepthCuesError, ValueError):
    pass


class NotFitted(DepthCuesError, RuntimeError):
    pass


class TooManyRows(DepthCuesError, ValueError):
    pass


class IdMismatch(DepthCuesError, ValueError):
    pass


class MissingSidecar(DepthCuesError, FileNotFoundError):
    pass


class VersionMismatch(DepthCuesError, ValueError):
    pass
