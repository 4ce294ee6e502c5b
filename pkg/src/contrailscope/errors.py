"""Exception types shared across the package."""


class ContrailError(Exception):
    """Base class for all package-specific errors."""


class MissingSnapshot(ContrailError):
    def __init__(self, time, path=None):
        self.time = time
        self.path = path
        super().__init__(f"no snapshot file for timestep {time!r}" + (f" (expected {path})" if path else ""))


class SchemaError(ContrailError):
    def __init__(self, column, detail=""):
        self.column = column
        super().__init__(f"bad snapshot column {column!r}" + (f": {detail}" if detail else ""))


class MonotonicityError(ContrailError):
    pass


class DimensionError(ContrailError):
    pass


class DuplicateRunId(ContrailError):
    pass


class EmptyEnsemble(ContrailError):
    pass


class OutOfRange(ContrailError):
    pass


class DegenerateLine(ContrailError):
    pass


class DegenerateInput(ContrailError):
    pass


class SchemaMismatch(ContrailError):
    pass


class EmptySet(ContrailError):
    pass


class TooFewMembers(ContrailError):
    pass


class ConfigError(ContrailError):
    pass


class DisconnectedBoundaryWarning(UserWarning):
    """Surviving alpha-shape triangles split into several components; only the largest cycle is returned."""
