"""Dense complex eigendecomposition with biorthonormal left/right pairs."""
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ..errors import DegeneracyError, DegeneracyWarning, DomainError, NumericalError

__all__ = ["ComplexSpectrum", "eig_general", "eig_pair", "reconstruction_error",
           "biorthonormality_error", "MAX_DIM"]

MAX_DIM = 512
RESIDUAL_TOL = 1e-9
COND_WARN = 1e8
CLUSTER_TOL = 1e-10


@dataclass
class ComplexSpectrum:
    """Eigenvalues with paired right/left eigenvectors.

    Columns of ``right`` are |nR>; columns of ``left`` are |nL> so that
    ``left.conj().T @ right`` is the identity.

    Attributes
    ----------
    eigenvalues : ndarray, shape (L,)
        Sorted lexicographically by (Re E, Im E).
    right, left : ndarray, shape (L, L)
    clusters : list of tuple of int
        Groups of indices whose eigenvalues coincide within
        ``1e-10 * ||M||_F``.
    condition : float
        Condition number of the raw left/right overlap matrix.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    clusters: list = field(default_factory=list)
    condition: float = 1.0

    @property
    def energies(self):
        """Real parts, epsilon_n."""
        return self.eigenvalues.real

    @property
    def linewidths(self):
        """zeta_n = -2 Im E_n."""
        return -2.0 * self.eigenvalues.imag

    def __len__(self):
        return self.eigenvalues.size


def _check_square(M):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] > MAX_DIM:
        raise DomainError(f"dimension {M.shape[0]} exceeds cap {MAX_DIM}")
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix has non-finite entries")
    return M.astype(np.complex128, copy=False)


def _fix_phase(V):
    # unit norm, largest-magnitude component real and positive
    V = V / np.linalg.norm(V, axis=0)
    # rounding makes the pivot choice stable when two entries tie in magnitude
    idx = np.argmax(np.round(np.abs(V), 12), axis=0)
    piv = V[idx, np.arange(V.shape[1])]
    return V * (np.abs(piv) / piv)


def _order(w):
    return np.lexsort((np.round(w.imag, 13), np.round(w.real, 13)))


def _clusters(w, scale):
    tol = CLUSTER_TOL * max(scale, 1e-300)
    groups, seen = [], set()
    for i in range(w.size):
        if i in seen:
            continue
        near = np.flatnonzero(np.abs(w - w[i]) <= tol)
        if near.size > 1:
            groups.append(tuple(int(j) for j in near))
            seen.update(near.tolist())
    return groups


def _residual_check(M, w, V, scale, side):
    res = np.linalg.norm(M @ V - V * w, axis=0)
    worst = res.max(initial=0.0)
    if worst > RESIDUAL_TOL * max(scale, 1e-300):
        raise NumericalError(f"{side} eigenpair residual {worst:.3e} exceeds "
                             f"{RESIDUAL_TOL:g}*||M|| = {RESIDUAL_TOL * scale:.3e}")


def eig_general(M):
    """Eigenvalues and unit-norm right eigenvectors, sorted by (Re, Im)."""
    M = _check_square(M)
    try:
        w, V = sla.eig(M, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed to converge: {exc}") from exc
    order = _order(w)
    w, V = w[order], _fix_phase(V[:, order])
    _residual_check(M, w, V, np.linalg.norm(M), "right")
    return w, V


def eig_pair(M):
    """Full spectrum with biorthonormalised left and right eigenvectors.

    Left vectors come from the adjoint problem. They are rescaled (mixed
    within degenerate clusters) so that ``VL^H VR = I``.

    Raises
    ------
    DegeneracyError
        If the overlap matrix is singular.

    Warns
    -----
    DegeneracyWarning
        If the overlap matrix has condition number above 1e8.
    """
    M = _check_square(M)
    scale = np.linalg.norm(M)
    try:
        w, VL, VR = sla.eig(M, left=True, right=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed to converge: {exc}") from exc
    order = _order(w)
    w = w[order]
    VR = _fix_phase(VR[:, order])
    VL = VL[:, order]
    VL = VL / np.linalg.norm(VL, axis=0)
    overlap = VL.conj().T @ VR
    cond = np.linalg.cond(overlap)
    if not np.isfinite(cond) or cond > 1e15:
        raise DegeneracyError(f"left/right overlap is singular (cond={cond:.3g})")
    if cond > COND_WARN:
        warnings.warn(f"ill-conditioned biorthonormalisation (cond={cond:.3g})",
                      DegeneracyWarning, stacklevel=2)
    VL = VL @ np.linalg.inv(overlap).conj().T
    _residual_check(M, w, VR, scale, "right")
    _residual_check(M.conj().T, w.conj(), VL / np.linalg.norm(VL, axis=0), scale, "left")
    return ComplexSpectrum(w, VR, VL, _clusters(w, scale), float(cond))


def reconstruction_error(M, spec):
    """||M - VR diag(E) VL^H||_F / ||M||_F."""
    M = np.asarray(M)
    rec = (spec.right * spec.eigenvalues) @ spec.left.conj().T
    return np.linalg.norm(M - rec) / max(np.linalg.norm(M), 1e-300)


def biorthonormality_error(spec):
    """max |<mL|nR> - delta_mn|."""
    G = spec.left.conj().T @ spec.right
    return np.abs(G - np.eye(G.shape[0])).max()
