"""Exceptions used in simlab."""

from enum import Enum, auto


class NormalCompletion(Exception):
    """Normal completion, no errors."""


class AbnormalCompletion(Exception):
    """Abnormal completion, error or exception detected."""


class FailedInitialization(Exception):
    """simlab initialization failed."""


class TerminateSignal(Exception):
    """SIGTERM."""


class InternalError(Exception):
    """Unexpected/inconsistant state."""


class SimlabError(Exception):
    """Base class of the numerical errors raised by the estimation code."""


class DivergenceDomainError(SimlabError, ValueError):
    """Divergence function evaluated outside its domain."""


class InvalidParameterError(SimlabError, ValueError):
    """Model parameter vector outside its bounds box or of the wrong length."""


class ModelError(SimlabError):
    """Operation not available for this model family."""


class SupportError(SimlabError, ValueError):
    """Point outside the support of a half-line density."""


class BandwidthError(SimlabError, ValueError):
    """A bandwidth cannot be computed for this sample."""


class UnsupportedKernelError(SimlabError, ValueError):
    """Kernel kind not supported by the requested operation."""


class IntegrationError(SimlabError):
    """Quadrature failed or the fallback rule disagreed with the adaptive rule."""


class NonFiniteIntegrandError(IntegrationError):
    """Integrand returned a non-finite value."""

    def __init__(self, abscissa, value):
        super().__init__(f"integrand is {value} at x={abscissa}")
        self.abscissa = abscissa
        self.value = value


class OptimizationError(SimlabError):
    """The optimizer could not be started or aborted."""


class SingularMatrixError(SimlabError):
    """Matrix too close to singular to be inverted."""


class ContaminationError(SimlabError, ValueError):
    """Contamination scheme not applicable to the sample."""


class EstimatorError(SimlabError):
    """Estimator could not produce a result."""


class FitStatus(Enum):
    """Outcome of an optimization or a fit."""
    CONVERGED = auto()
    MAX_ITERS = auto()
    ABORTED = auto()
    INNER_FAILURE = auto()
    RESTARTED = auto()
    FAILED = auto()
