"""Exception hierarchy.

Every error raised on purpose by the package derives from ``MetashockError``
so callers (the harness in particular) can separate expected numerical
failures from programming mistakes.
"""


class MetashockError(Exception):
    """Base class for all package errors."""


class ParameterError(MetashockError, ValueError):
    """A parameter is outside its admissible range."""


class UnsupportedParameterError(ParameterError):
    """A formula is only available for a restricted parameter set."""


class InvalidFluxError(MetashockError, ValueError):
    """The flux triple is inconsistent or produces non-finite values."""


class DegenerateJumpError(MetashockError, ValueError):
    """Rankine-Hugoniot quotient requested for equal states."""


class DomainError(MetashockError, ValueError):
    """A location lies outside the open interval (-ell, ell)."""


class BracketError(MetashockError, ValueError):
    """The function has no sign change on the supplied bracket."""


class ConvergenceError(MetashockError, RuntimeError):
    """An iteration stopped before meeting its tolerance."""


class PartialSpectrumError(ConvergenceError):
    """The eigenvalue iteration did not converge for the whole matrix."""

    def __init__(self, message, converged=()):
        super().__init__(message)
        self.converged = tuple(converged)


class StiffnessError(MetashockError, RuntimeError):
    """The adaptive integrator could not take a step."""


class ConstructionError(MetashockError, RuntimeError):
    """Shooting for a matched family failed on one side."""

    def __init__(self, message, side):
        super().__init__(f"{side} side: {message}")
        self.side = side


class ProfileInstabilityError(MetashockError, RuntimeError):
    """The shock profile left the open interval (-u*, u*)."""


class TailConstantError(MetashockError, RuntimeError):
    """Quadrature for a tail constant did not converge."""


class StructureViolationError(MetashockError, RuntimeError):
    """A computed spectrum does not have the expected decomposition."""


class CFLViolationError(MetashockError, ValueError):
    """The requested time step exceeds the transport stability bound."""


class BlowUpError(MetashockError, FloatingPointError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, message, time):
        super().__init__(f"{message} (t = {time:.6g})")
        self.time = time


class LongHorizonError(MetashockError, ValueError):
    """A full PDE run beyond the default horizon was requested without opt-in."""


class TrackingError(MetashockError, ValueError):
    """The shock position estimator could not locate a unique layer."""


class TransversalityError(MetashockError, ArithmeticError):
    """The projection normalisation alpha_0 is too close to zero."""


class FitError(MetashockError, ValueError):
    """A decay-rate fit was requested on an unsuitable window."""


class ConfigError(MetashockError, ValueError):
    """Base class for configuration problems."""


class ConfigParseError(ConfigError):
    """The configuration file is not well formed JSON."""

    def __init__(self, message, line=None, column=None):
        where = "" if line is None else f" (line {line}, column {column})"
        super().__init__(message + where)
        self.line = line
        self.column = column


class ConfigValidationError(ConfigError):
    """A configuration field has an invalid value."""

    def __init__(self, field, message):
        super().__init__(f"{field} {message}")
        self.field = field
