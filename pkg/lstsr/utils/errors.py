class LstsrError(Exception):
    """Base class for errors raised by lstsr."""


class GridFormatError(LstsrError, ValueError):
    """Missing or corrupt `.lstgrid` header or payload."""


class ShapeError(LstsrError, ValueError):
    """Operands or sizes that an operation cannot combine."""


class CheckpointError(LstsrError, ValueError):
    """Checkpoint magic, version, manifest or config does not match."""


class GraphError(LstsrError, RuntimeError):
    """Invalid use of the autodiff graph."""


class DivergenceError(LstsrError, RuntimeError):
    """Training produced a non-finite loss."""
