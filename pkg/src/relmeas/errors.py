"""Exception hierarchy.

Every error raised on purpose by relmeas derives from :class:`RelmeasError`,
so callers can catch the whole family at once.  Validation failures (bad
input objects) additionally derive from :class:`InputError`; the CLI maps
those to exit status 2.
"""


class RelmeasError(Exception):
    """Base class for all relmeas errors."""


class InputError(RelmeasError, ValueError):
    """An input object failed validation."""


class DimensionError(InputError):
    pass


class HermiticityError(InputError):
    pass


class PositivityError(InputError):
    pass


class TraceError(InputError):
    pass


class EffectRangeError(InputError):
    """Effect eigenvalue above ``1 + psd_tol``."""


class NormalizationError(InputError):
    """Effects of an observable do not sum to the identity."""


class LabelError(InputError):
    pass


class ScaleError(InputError):
    pass


class SharpnessError(InputError):
    pass


class UnitarityError(InputError):
    pass


class NormError(InputError):
    pass


class SubspaceError(InputError):
    pass


class OrderError(InputError):
    pass


class ProbabilityRangeError(RelmeasError):
    """A computed probability fell outside ``[-1e-7, 1 + 1e-7]``."""


class NullEventError(RelmeasError):
    """Conditioning on an event of (numerically) zero probability."""


class DegenerateDistributionError(RelmeasError):
    pass


class UnknownPerspectiveError(RelmeasError, KeyError):
    pass


class ConvergenceError(RelmeasError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(InputError):
    def __init__(self, message, field=None):
        if field and not message.startswith(field):
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field


class DirectiveError(RelmeasError):
    """A program directive failed; ``cause`` is the original error."""

    def __init__(self, index, op, cause):
        super().__init__(f"directive {index} ({op}): {type(cause).__name__}: {cause}")
        self.index = index
        self.op = op
        self.cause = cause
