"""Exception hierarchy. Every error carries a machine-readable category used
by the CLI to pick exit codes and report failure classes."""


class GStrandsError(Exception):
    """Base class; ``category`` is one of parse, validation, near-collision,
    blow-up, io, usage."""

    category = "usage"


class DimensionMismatchError(GStrandsError):
    category = "validation"


class UnsupportedAlgebraError(GStrandsError):
    category = "validation"


class InvalidParameterError(GStrandsError):
    category = "validation"


class SingularKernelError(GStrandsError):
    category = "validation"


class NearCollisionError(GStrandsError):
    """Gram system past the conditioning threshold: peakons about to collide."""

    category = "near-collision"


class BlowUpError(GStrandsError):
    category = "blow-up"

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class ReconstructionRefusedError(GStrandsError):
    """Zero-curvature residual too large for group reconstruction to be well posed."""

    category = "validation"


class ConfigParseError(GStrandsError):
    category = "parse"

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class ConfigValidationError(GStrandsError):
    category = "validation"

    def __init__(self, message, code="invalid", field=None):
        super().__init__(message)
        self.code = code
        self.field = field


class OutputError(GStrandsError):
    category = "io"
