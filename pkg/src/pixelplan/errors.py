"""Exception hierarchy shared across the package."""


class PixelPlanError(Exception):
    """Base class for all errors raised by pixelplan."""


class ValidationError(PixelPlanError):
    """A domain value violates one of its invariants."""


class JointLimitError(ValidationError):
    """A joint angle is outside its configured limits."""

    def __init__(self, joint: int, value: float, lo: float, hi: float):
        self.joint = joint
        self.value = value
        super().__init__(
            f"joint {joint} angle {value:.6g} outside limits [{lo:.6g}, {hi:.6g}]"
        )


class ProjectionError(PixelPlanError):
    """A world point cannot be projected (non-positive depth)."""

    def __init__(self, point_index: int, depth: float):
        self.point_index = point_index
        self.depth = depth
        super().__init__(
            f"point {point_index} has non-positive camera depth {depth:.6g}"
        )


class VisibilityError(PixelPlanError):
    """A sweep configuration projects outside the image bounds."""

    def __init__(self, q, reason: str):
        self.q = q
        super().__init__(f"configuration {list(q)} not fully visible: {reason}")


class ParseError(PixelPlanError):
    """Malformed serialized input; carries byte offset and field path."""

    def __init__(self, message: str, byte_offset: int | None = None,
                 field_path: str | None = None):
        self.byte_offset = byte_offset
        self.field_path = field_path
        detail = message
        if field_path is not None:
            detail += f" (field {field_path})"
        if byte_offset is not None:
            detail += f" (byte offset {byte_offset})"
        super().__init__(detail)


class TrainingDivergedError(PixelPlanError):
    """Training loss became non-finite."""
