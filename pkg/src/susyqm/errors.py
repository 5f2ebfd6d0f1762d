"""Exception hierarchy.

Every error carries the name of the module that raised it so the command line
front end can report module-qualified codes.
"""


class SusyError(Exception):
    """Base class for all package errors."""

    module = "susyqm"

    @property
    def code(self):
        return f"{self.module}.{type(self).__name__}"


class ValidationError(SusyError, ValueError):
    """Input failed a precondition check."""


class NumericalError(SusyError, ArithmeticError):
    """A numerical procedure could not deliver a result within tolerance."""


# grid-engine
class DomainError(ValidationError):
    module = "grid-engine"


class GridMismatch(ValidationError):
    module = "grid-engine"


class ConvergenceError(NumericalError):
    module = "grid-engine"


# susy-core
class DegenerateDensity(NumericalError):
    module = "susy-core"


class ZeroEnergy(ValidationError):
    module = "susy-core"


class InsufficientBoundStates(ValidationError):
    module = "susy-core"


# gmm-optimizer
class EmptyEnsemble(ValidationError):
    module = "gmm-optimizer"


class LineSearchFailure(NumericalError):
    module = "gmm-optimizer"


class CollapsedComponent(NumericalError):
    module = "gmm-optimizer"


class NodeCountError(NumericalError):
    module = "gmm-optimizer"

    def __init__(self, count, message=None):
        self.count = count
        super().__init__(message or f"expected exactly one sign change, found {count}")


class MaxStepsExceeded(NumericalError):
    """Raised when the optimizer runs out of steps; ``result`` holds the best state."""

    module = "gmm-optimizer"

    def __init__(self, result, message="maximum number of CG steps reached"):
        self.result = result
        super().__init__(message)


# scattering
class ClosedChannel(ValidationError):
    module = "scattering"


class NonAsymptoticPotential(ValidationError):
    module = "scattering"


class NonAsymptoticSuperpotential(ValidationError):
    module = "scattering"


# propagation
class StepTooLarge(NumericalError):
    module = "propagation"


class ZeroPartnerState(ValidationError):
    module = "propagation"


# multidim-susy
class VanishingComponent(ValidationError):
    module = "multidim-susy"


class ZeroTrial(ValidationError):
    module = "multidim-susy"


# cli
class UnsupportedUnit(ValidationError):
    module = "cli"


class ConfigError(ValidationError):
    module = "cli"
