"""Exception types raised across the package."""


class RydSSHError(Exception):
    """Base class for all package errors."""


class ConfigError(RydSSHError, ValueError):
    """Invalid or inconsistent configuration document.

    ``path`` names the offending key (dotted), when known.
    """

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DomainError(RydSSHError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class GeometryError(RydSSHError, ValueError):
    """Requested array geometry cannot be realised."""


class ResonanceError(RydSSHError, ArithmeticError):
    """A perturbative denominator vanishes (Delta + V ~ 0)."""


class NumericalError(RydSSHError, ArithmeticError):
    """A numerical kernel failed to produce a trustworthy result."""


class IntegrationError(NumericalError):
    """Adaptive ODE integration aborted.

    Attributes
    ----------
    t_last : float
        Last successfully reached time.
    h_last : float
        Step size at failure.
    nsteps : int
        Accepted steps before failure.
    """

    def __init__(self, message, t_last=float("nan"), h_last=float("nan"), nsteps=0):
        self.t_last = t_last
        self.h_last = h_last
        self.nsteps = nsteps
        super().__init__(f"{message} (t_last={t_last:.6g}, h={h_last:.3g}, accepted steps={nsteps})")


class DegeneracyError(NumericalError):
    """Eigenvectors cannot be biorthonormalised (defective or degenerate spectrum)."""


class InvalidGeneratorError(NumericalError):
    """Matrix is not a valid Lindblad generator (no stationary mode)."""


class EliminationError(RydSSHError, ValueError):
    """Scale separation required for adiabatic elimination is violated."""


class ChiralSymmetryError(RydSSHError, ValueError):
    """Chain Hamiltonian does not anticommute with the sublattice operator."""


class DegeneracyWarning(RuntimeWarning):
    """Ill-conditioned biorthonormalisation; results may be inaccurate."""
