"""Lindblad superoperators in the row-stacking (C-order) convention.

With vec(rho)[i*d + j] = rho[i, j] one has vec(A rho B) = (A kron B^T) vec(rho),
which is the convention under which

    L = -i(H x I - I x H^T) + sum_k L_k x L_k^* - 1/2 (L_k^dag L_k x I + I x L_k^T L_k^*)

generates d rho/dt = -i[H, rho] + sum_k D[L_k] rho.
"""
import numpy as np

from ..errors import DomainError

__all__ = ["vec", "unvec", "vectorize_superoperator", "lindblad_rhs", "vec_identity"]


def vec(rho):
    """Row-stack a density matrix."""
    return np.ascontiguousarray(rho).reshape(-1)


def unvec(v, d=None):
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DomainError(f"vector of size {v.size} is not a vectorised square matrix")
    return v.reshape(d, d)


def vec_identity(d):
    return vec(np.eye(d, dtype=np.complex128))


def _jumps(jumps, d):
    out = []
    for item in jumps:
        if isinstance(item, tuple):
            op, rate = item
            if rate < 0:
                raise DomainError("jump rates must be non-negative")
            op = np.sqrt(rate) * np.asarray(op, dtype=np.complex128)
        else:
            op = np.asarray(item, dtype=np.complex128)
        if op.shape != (d, d):
            raise DomainError(f"jump operator shape {op.shape} does not match H ({d}, {d})")
        out.append(op)
    return out


def vectorize_superoperator(H, jumps=()):
    """Build the d^2 x d^2 Lindblad generator.

    Parameters
    ----------
    H : (d, d) array_like
        Hamiltonian.
    jumps : iterable
        Jump operators, either bare matrices ``L`` or ``(A, rate)`` pairs
        meaning ``L = sqrt(rate) A``.
    """
    H = np.asarray(H, dtype=np.complex128)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DomainError("H must be square")
    d = H.shape[0]
    eye = np.eye(d)
    sup = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for L in _jumps(jumps, d):
        LdL = L.conj().T @ L
        sup += np.kron(L, L.conj()) - 0.5 * (np.kron(LdL, eye) + np.kron(eye, LdL.T))
    return sup


def lindblad_rhs(H, jumps, rho):
    """Direct evaluation of -i[H, rho] + sum D[L] rho."""
    H = np.asarray(H, dtype=np.complex128)
    out = -1j * (H @ rho - rho @ H)
    for L in _jumps(jumps, H.shape[0]):
        LdL = L.conj().T @ L
        out += L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL)
    return out
