class PhantomLabError(Exception):
    """Base class for all errors raised by phantomlab."""


class ModelDefinitionError(PhantomLabError, ValueError):
    """A model or density is malformed or evaluates to an invalid value."""


class ConfigurationError(PhantomLabError, ValueError):
    """An experiment or simulation request is inconsistent."""


class ValidationError(PhantomLabError, ValueError):
    """Input failed a structural check (irreducibility, stochasticity, ...)."""


class CalibrationError(PhantomLabError, ValueError):
    """A level or quantile cannot be calibrated from the given input."""


class EstimationError(PhantomLabError, ValueError):
    """Too little admissible data for an estimator."""


class ContractViolation(PhantomLabError, ValueError):
    """A documented precondition on an argument does not hold."""


class DiagnosticFailure(PhantomLabError, RuntimeError):
    """A diagnostic simulation did not reach its stopping condition."""
