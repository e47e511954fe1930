"""Exception types shared across the package."""


class AdmfitError(Exception):
    """Base class for all package-specific errors."""


class UnknownSymbol(AdmfitError):
    """A quantity symbol is not registered in the quantity system."""


class SingularSystem(AdmfitError):
    """The dimensional linear system has no solution for the requested target."""


class InvalidEffect(AdmfitError):
    """A random-effect value lies outside the domain a solver can handle."""


class DomainError(AdmfitError):
    """An argument lies outside an operation's documented domain."""


class ConvergenceFailure(AdmfitError):
    """A bracketing/refinement loop exhausted its iteration budget."""


class StepFailure(AdmfitError):
    """Adaptive step-size control could not meet the requested tolerance."""


class InitializationFailure(AdmfitError):
    """No starting state with a finite likelihood estimate was found."""


class ParseError(AdmfitError):
    """A file could not be parsed; message carries the offending line number."""


class ValidationError(AdmfitError):
    """Parsed content violates a domain invariant (e.g. nonpositive time)."""


class ConfigError(AdmfitError):
    """A configuration file contains unknown keys or invalid values."""


class BudgetExhausted(AdmfitError):
    """A resampling loop gave up (e.g. non-failing draws dominate)."""
