"""Exception hierarchy shared across the toolkit."""


class PoseBiasError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(PoseBiasError, ValueError):
    """An argument violates a documented precondition."""


class BehindCameraError(PoseBiasError):
    """A 3D point has non-positive depth and cannot be projected."""

    def __init__(self, point, index=None):
        self.point = tuple(point)
        self.index = index
        where = f" (corner {index})" if index is not None else ""
        super().__init__(f"point {self.point} is behind the camera{where}")


class ParseError(PoseBiasError, ValueError):
    """A file is structurally inconsistent; never silently defaulted."""

    def __init__(self, message, *, offset=None, line=None):
        self.offset = offset
        self.line = line
        loc = ""
        if offset is not None:
            loc = f" at byte offset {offset}"
        elif line is not None:
            loc = f" at line {line}"
        super().__init__(message + loc)


class DegenerateQuadWarning(UserWarning):
    """A zero-area polygon was rasterized to an empty mask."""
