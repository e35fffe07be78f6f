"""Skin-effect localisation measures and the real-space winding number."""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainHamiltonian, check_chiral, chiral_operator
from .errors import DegeneracyWarning, DomainError, RydSSHError
from .numerics import eig_pair

__all__ = [
    "LocalizationReport", "WindingResult", "ipr", "polarization", "dipr", "dmipr",
    "localization_report", "winding_number", "winding_details", "winding_ensemble",
]


def _vector(psi):
    psi = np.asarray(psi)
    if psi.ndim != 1 or not np.any(psi):
        raise DomainError("expected a non-zero vector")
    return psi


def ipr(psi):
    """sum |psi_j|^4 / (sum |psi_j|^2)^2."""
    p = np.abs(_vector(psi)) ** 2
    return float((p ** 2).sum() / p.sum() ** 2)


def polarization(psi, delta=0.5):
    """sgn sum_j (j - L/2 - delta) |psi_j| with sites j = 1..L.

    An exactly vanishing argument returns -1 for delta >= 0 and +1 for
    delta < 0.
    """
    amp = np.abs(_vector(psi))
    L = amp.size
    j = np.arange(1, L + 1)
    arg = float(((j - L / 2 - delta) * amp).sum())
    if abs(arg) <= 1e-12 * L * amp.sum():
        return -1 if delta >= 0 else 1
    return 1 if arg > 0 else -1


def dipr(psi, delta=0.5):
    return polarization(psi, delta) * ipr(psi)


def dmipr(states, delta=0.5):
    """Mean dIPR over the columns of ``states``."""
    states = np.asarray(states)
    return float(np.mean([dipr(states[:, n], delta) for n in range(states.shape[1])]))


@dataclass
class LocalizationReport:
    ipr: np.ndarray
    polarization: np.ndarray
    dipr: np.ndarray
    dmipr: float

    @property
    def abs_dmipr(self):
        return abs(self.dmipr)

    def as_dict(self):
        return {
            "dmipr": self.dmipr,
            "abs_dmipr": self.abs_dmipr,
            "per_state": [{"ipr": float(i), "polarization": int(p), "dipr": float(d)}
                          for i, p, d in zip(self.ipr, self.polarization, self.dipr)],
        }


def localization_report(spectrum_or_states, delta=0.5):
    """IPR, polarisation and dIPR of every right eigenvector."""
    R = getattr(spectrum_or_states, "right", spectrum_or_states)
    R = np.asarray(R)
    iprs = np.array([ipr(R[:, n]) for n in range(R.shape[1])])
    pols = np.array([polarization(R[:, n], delta) for n in range(R.shape[1])])
    d = pols * iprs
    return LocalizationReport(iprs, pols, d, float(d.mean()))


# ----------------------------------------------------------------------------
# winding number

def _occupied(w, scale, tol):
    """Half filling by Re(E); ties at the Fermi level split by Im(E), else dropped."""
    L = w.size
    order = np.lexsort((w.imag, w.real))
    half = L // 2
    lo, hi = w[order[half - 1]], w[order[half]]
    if hi.real - lo.real > tol * scale:
        return order[:half], 0
    # states whose Re(E) is tied with the Fermi level
    mid = 0.5 * (lo.real + hi.real)
    tied = np.flatnonzero(np.abs(w.real - mid) <= tol * scale)
    below = [i for i in order[:half] if i not in tied]
    neg = [i for i in tied if w[i].imag < -tol * scale]
    pos = [i for i in tied if w[i].imag > tol * scale]
    if len(neg) == len(pos) and len(neg) + len(pos) == len(tied):
        return np.array(below + neg, dtype=int), 0
    warnings.warn(f"{len(tied)} states tied at Re(E) = 0 are left out of the projector",
                  DegeneracyWarning, stacklevel=3)
    return np.array(below, dtype=int), len(tied)


def winding_details(H, cutoff_cells=2, tie_tol=1e-10):
    """Real-space winding number with diagnostics.

    nu_s = Tr'(S1 Q [Q, X]) / N', with Q = 1 - 2P built from biorthogonal
    projectors onto the lower half of the spectrum, X the unit-cell
    coordinate, and the trace restricted to the sites more than
    ``cutoff_cells`` cells away from either end. N' is the number of sites
    in that window.

    Returns
    -------
    dict
        ``nu``, ``window_sites``, ``excluded`` (tied states dropped from P).
    """
    M = H.matrix if isinstance(H, ChainHamiltonian) else np.asarray(H, dtype=np.complex128)
    L = M.shape[0]
    if L % 2:
        raise DomainError("chain length must be even")
    check_chiral(M)
    cut = 2 * cutoff_cells
    if L - 2 * cut <= 0:
        raise DomainError(f"bulk window is empty for L={L} and cutoff {cutoff_cells} cells")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneracyWarning)
        spec = eig_pair(M)
    occ, excluded = _occupied(spec.eigenvalues, np.linalg.norm(M), tie_tol)
    P = spec.right[:, occ] @ spec.left[:, occ].conj().T
    Q = np.eye(L) - 2 * P
    x = (np.arange(L) // 2).astype(float)
    comm = Q * x[None, :] - x[:, None] * Q
    s1 = chiral_operator(L)
    # diagonal of S1 Q [Q, X]
    diag = s1 * np.einsum("ij,ji->i", Q, comm)
    window = diag[cut:L - cut]
    nu = window.sum() / window.size
    return {"nu": float(nu.real), "imag": float(nu.imag), "window_sites": int(window.size),
            "excluded": excluded}


def winding_number(H, cutoff_cells=2):
    return winding_details(H, cutoff_cells)["nu"]


@dataclass
class WindingResult:
    """Ensemble of real-space winding numbers."""

    nu_s: np.ndarray
    cutoff_cells: int
    window_sites: int
    n_failed: int = 0
    failures: list = field(default_factory=list)

    @property
    def nu(self):
        return float(np.mean(self.nu_s)) if self.nu_s.size else math.nan

    @property
    def one_minus_nu(self):
        return 1.0 - self.nu

    @property
    def stderr(self):
        n = self.nu_s.size
        return float(np.std(self.nu_s, ddof=1) / math.sqrt(n)) if n > 1 else 0.0

    def as_dict(self):
        return {"nu": self.nu, "one_minus_nu": self.one_minus_nu, "stderr": self.stderr,
                "n_s": int(self.nu_s.size), "n_failed": self.n_failed,
                "cutoff_cells": self.cutoff_cells, "window_sites": self.window_sites}


def winding_ensemble(hamiltonians, cutoff_cells=2):
    """Winding numbers of many chains; failing realisations are counted and skipped."""
    values, failures = [], []
    window = 0
    for i, H in enumerate(hamiltonians):
        try:
            d = winding_details(H, cutoff_cells)
        except RydSSHError as exc:
            failures.append((i, str(exc)))
            continue
        values.append(d["nu"])
        window = d["window_sites"]
    if not values and not failures:
        raise DomainError("empty ensemble")
    return WindingResult(np.array(values), cutoff_cells, window, len(failures), failures)
