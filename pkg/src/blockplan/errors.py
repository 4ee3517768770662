"""Exception types shared across the planning pipeline."""


class BlockplanError(Exception):
    """Base class for all library errors."""


class MalformedFile(BlockplanError):
    """Mesh file bytes could not be parsed."""


class UnsupportedFormat(BlockplanError):
    """Mesh file format could not be identified."""


class EmptyMesh(BlockplanError):
    """Operation requires a mesh with at least one vertex."""


class EmptyAssembly(BlockplanError):
    """Occupancy grid has no occupied cells."""


class CannotFit(BlockplanError):
    """Rescaling cannot bring the component count down to the inventory."""


class EmptyAfterModification(BlockplanError):
    """Failure handling removed every cell of the assembly."""


class Unsequenceable(BlockplanError):
    """No bottom-up, face-connected placement order exists."""


class SequenceGridMismatch(BlockplanError):
    """Sequence does not cover exactly the occupied cells of its grid."""


class ConfigViolation(BlockplanError):
    """Assembly configuration violates a safety constraint."""


class ClientUnavailable(BlockplanError):
    """External client (language model or mesh generator) failed or timed out."""


class SchemaError(BlockplanError):
    """JSON artifact does not match the expected schema."""
