"""Exception hierarchy shared by every module."""


class OpenQSLError(Exception):
    """Base class for all library errors."""


class InputError(OpenQSLError, ValueError):
    """Malformed numeric input (non-finite entries, wrong shape, bad range)."""


class DimensionError(InputError):
    pass


class HermiticityError(InputError):
    pass


class InvalidStateError(InputError):
    """Matrix is not a density matrix (trace, positivity)."""


class ModelError(OpenQSLError):
    """A Lindblad model could not be constructed."""


class BohrFrequencyError(ModelError):
    pass


class DetailedBalanceError(ModelError):
    def __init__(self, label, omega, residual):
        self.label = label
        self.omega = omega
        self.residual = residual
        super().__init__(
            f"detailed balance violated for jump {label!r} at omega={omega:.12g}: "
            f"residual {residual:.3e}"
        )


class JumpStructureError(ModelError):
    """Resolved jumps do not satisfy L(omega)^dagger = L(-omega)."""


class DegeneracyError(OpenQSLError):
    """Off-diagonal dissipator weight between equal populations survives basis rotation."""


class BasisError(OpenQSLError):
    """Quantities built in different eigenbases were combined."""


class SupportError(OpenQSLError):
    """A tangent vector leaves the support of the state."""


class ConsistencyError(OpenQSLError):
    """Two independent evaluation routes disagree beyond tolerance."""


class IntegrationError(OpenQSLError):
    pass


class PositivityLossError(IntegrationError):
    pass
