"""Engineered loss: three-level Liouvillian, segment master equation and
adiabatic elimination of the lossy auxiliary atoms.
"""
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (DegeneracyError, DomainError, EliminationError, InvalidGeneratorError,
                     NumericalError)
from .microscopic import SEGMENT_KINDS, SEGMENT_LABELS, build_effective_six_atom
from .numerics import IntegratorContract, integrate_linear, unvec, vec, vectorize_superoperator
from .trajectory import PopulationTrajectory

__all__ = [
    "ThreeLevelModel", "LiouvillianSpectrum", "NhCouplings", "CellCouplings",
    "three_level_operators", "build_liouvillian", "gap_analytic", "gap_numeric",
    "liouvillian_spectrum", "amplitude_odes", "segment_jumps", "evolve_master_equation",
    "adiabatic_eliminate", "real_form_couplings", "eliminate_auxiliary", "eliminate_array",
    "eliminated_segment_generator", "evolve_amplitudes", "validate_elimination",
]

G, P, R = 0, 1, 2  # basis order of the three-level model


# ----------------------------------------------------------------------------
# three-level model

@dataclass(frozen=True)
class ThreeLevelModel:
    """Rydberg level r drained through a short-lived level p into g.

    Attributes
    ----------
    omega_p : float
        Rabi frequency of the r <-> p drive (rad/us).
    Gamma : float
        Decay rate p -> g (1/us).
    gamma_c : float
        Bare Rydberg decay, stored for bookkeeping and not used.
    """

    omega_p: float
    Gamma: float
    gamma_c: float = 0.0

    def __post_init__(self):
        if self.omega_p < 0 or self.Gamma < 0 or self.gamma_c < 0:
            raise DomainError("omega_p, Gamma and gamma_c must be non-negative")


def three_level_operators(model):
    """Hamiltonian (Omega_p/2)(|p><r| + h.c.) and jump operator sqrt(Gamma)|g><p|."""
    H = np.zeros((3, 3), dtype=np.complex128)
    H[P, R] = H[R, P] = model.omega_p / 2
    L = np.zeros((3, 3), dtype=np.complex128)
    L[G, P] = math.sqrt(model.Gamma)
    return H, [L]


def build_liouvillian(model):
    """9 x 9 generator acting on row-stacked density matrices."""
    H, jumps = three_level_operators(model)
    return vectorize_superoperator(H, jumps)


def gap_analytic(model):
    """g = Re[(Gamma - kappa)/2] with kappa = sqrt(Gamma^2 - 4 Omega_p^2)."""
    Gm, Om = model.Gamma, model.omega_p
    if Om >= Gm / 2:
        return Gm / 2
    return 0.5 * (Gm - math.sqrt(Gm * Gm - 4 * Om * Om))


def _support_mask(d, support):
    mask = np.zeros((d, d), dtype=bool)
    mask[np.ix_(support, support)] = True
    return vec(mask)


def _cluster_mean(w, tol):
    # defective eigenvalues split by ~eps^(1/k) at an order-k exceptional
    # point (k = 3 at Omega_p = Gamma/2); the cluster mean is accurate to
    # machine precision. The radius is capped at 1% of |lambda| so that slow
    # modes are never merged with the stationary state.
    w = w.copy()
    done = np.zeros(w.size, dtype=bool)
    for i in range(w.size):
        if done[i]:
            continue
        near = np.flatnonzero(np.abs(w - w[i]) <= min(tol, 1e-2 * abs(w[i])))
        w[near] = w[near].mean()
        done[near] = True
    return w


def gap_numeric(L, initial_support=(P, R), scale=None):
    """Smallest non-zero relaxation rate of modes excited from the given block.

    Parameters
    ----------
    L : (d^2, d^2) array_like
        Lindblad generator (row-stacking convention).
    initial_support : sequence of int
        Basis levels spanning the initial states considered; modes whose
        left eigenvector has no weight on this block are ignored. The default
        {p, r} excludes the ground-state coherences, which relax at half
        the population rate.
    scale : float, optional
        Rate scale for the zero test (|lambda| <= 1e-10 * scale); defaults
        to the largest |lambda|.

    Returns
    -------
    float
        Gap g >= 0; 0 when an excited zero mode besides the stationary
        state exists.
    """
    L = np.asarray(L, dtype=np.complex128)
    d = int(round(math.sqrt(L.shape[0])))
    if L.shape != (d * d, d * d):
        raise DomainError("generator must be square with a square-number dimension")
    if not np.any(L):
        return 0.0
    w, VL = sla.eig(L, left=True, right=False)
    scale = scale if scale is not None else np.abs(w).max()
    w = _cluster_mean(w, 1e-4 * scale)
    zero = np.abs(w) <= 1e-10 * scale
    if not zero.any():
        raise InvalidGeneratorError("no stationary mode: matrix is not a Lindblad generator")
    mask = _support_mask(d, list(initial_support))
    VL = VL / np.linalg.norm(VL, axis=0)
    excited = np.abs(VL[mask]).max(axis=0) > 1e-8
    if np.count_nonzero(zero & excited) > 1:
        return 0.0
    rates = np.abs(w.real[excited & ~zero])
    return float(rates.min()) if rates.size else 0.0


@dataclass
class LiouvillianSpectrum:
    """Eigen-decomposition of a three-level generator.

    ``right[i]`` and ``left[i]`` are d x d eigenmatrices normalised so that
    Tr(left[i]^dag right[j]) = delta_ij; ``weights`` are the overlaps
    a_i = Tr(left[i]^dag rho0) for the supplied initial state.
    """

    eigenvalues: np.ndarray
    gap: float
    steady_state: np.ndarray
    right: list
    left: list
    weights: np.ndarray = None

    def evolve(self, t):
        """rho(t) = sum_i a_i e^{lambda_i t} R_i."""
        if self.weights is None:
            raise DomainError("spectrum was built without an initial state")
        return sum(a * np.exp(lam * t) * R for a, lam, R in zip(self.weights, self.eigenvalues, self.right))


def liouvillian_spectrum(model, rho0=None):
    """Diagonalise the three-level generator and project ``rho0`` on its modes.

    Raises
    ------
    DegeneracyError
        At the exceptional point Omega_p = Gamma/2, where the generator is
        defective and has no eigenbasis; :func:`gap_numeric` still applies.
    """
    from .numerics import eig_pair

    L = build_liouvillian(model)
    try:
        spec = eig_pair(L)
    except NumericalError as exc:
        raise DegeneracyError(f"Liouvillian is not diagonalisable at Omega_p/Gamma = "
                              f"{model.omega_p / model.Gamma:.6g}: {exc}") from exc
    d = 3
    right = [unvec(spec.right[:, i], d) for i in range(d * d)]
    left = [unvec(spec.left[:, i], d) for i in range(d * d)]
    i0 = int(np.argmin(np.abs(spec.eigenvalues)))
    rho_ss = right[i0] / np.trace(right[i0])
    rho_ss = 0.5 * (rho_ss + rho_ss.conj().T)
    weights = None
    if rho0 is not None:
        weights = spec.left.conj().T @ vec(np.asarray(rho0, dtype=np.complex128))
    return LiouvillianSpectrum(spec.eigenvalues, gap_numeric(L, scale=max(model.Gamma, model.omega_p, 1e-300)),
                               rho_ss, right, left, weights)


# ----------------------------------------------------------------------------
# segment dynamics

def _decay_vector(Gamma, gamma, gamma_c=0.0, kinds=SEGMENT_KINDS):
    return np.array([Gamma / 2 + gamma_c if k == "c" else gamma for k in kinds])


def amplitude_odes(H, Gamma, gamma, gamma_c=0.0, kinds=SEGMENT_KINDS):
    """Linear generator M with du/dt = M u for the lossy single-excitation segment.

    M = -i H - diag(Gamma/2 on auxiliary sites, gamma on data sites).
    """
    H = np.asarray(H, dtype=np.complex128)
    if H.shape != (len(kinds), len(kinds)):
        raise DomainError(f"H must be {len(kinds)} x {len(kinds)}")
    return -1j * H - np.diag(_decay_vector(Gamma, gamma, gamma_c, kinds))


def segment_jumps(Gamma, gamma, gamma_c=0.0, kinds=SEGMENT_KINDS):
    """Site-resolved jump operators on vacuum (index 0) plus one excitation per site.

    Auxiliary sites decay at Gamma (+ 2 gamma_c), data sites at 2 gamma, so the
    no-jump evolution reproduces :func:`amplitude_odes`.
    """
    n = len(kinds)
    out = []
    for j, rate in enumerate(2 * _decay_vector(Gamma, gamma, gamma_c, kinds)):
        if rate == 0:
            continue
        L = np.zeros((n + 1, n + 1), dtype=np.complex128)
        L[0, j + 1] = math.sqrt(rate)
        out.append(L)
    return out


def evolve_master_equation(H, Gamma, gamma, rho0, t_grid, gamma_c=0.0, contract=None,
                           labels=SEGMENT_LABELS):
    """Lindblad evolution on vacuum + single-excitation space.

    Parameters
    ----------
    H : (n, n) array_like
        Single-excitation Hamiltonian of the segment.
    rho0 : (n+1, n+1) array_like
        Initial density matrix; index 0 is the vacuum.

    Returns
    -------
    PopulationTrajectory
        Site populations with the vacuum as ``ground``.
    """
    H = np.asarray(H, dtype=np.complex128)
    n = H.shape[0]
    rho0 = np.asarray(rho0, dtype=np.complex128)
    if rho0.shape != (n + 1, n + 1):
        raise DomainError(f"rho0 must be {n + 1} x {n + 1}")
    if not np.isclose(np.trace(rho0).real, 1.0, atol=1e-12):
        raise DomainError("rho0 must have unit trace")
    H7 = np.zeros((n + 1, n + 1), dtype=np.complex128)
    H7[1:, 1:] = H
    Lsup = vectorize_superoperator(H7, segment_jumps(Gamma, gamma, gamma_c, _kinds_for(n)))
    states = integrate_linear(Lsup, vec(rho0), t_grid, contract or IntegratorContract(rtol=1e-10, atol=1e-12))
    diag = np.real(states[:, [(n + 1) * i + i for i in range(n + 1)]])
    return PopulationTrajectory(np.asarray(t_grid, float), diag[:, 1:], tuple(labels), diag[:, 0])


def _kinds_for(n):
    if n != len(SEGMENT_KINDS):
        raise DomainError("master equation is defined for the six-atom segment")
    return SEGMENT_KINDS


# ----------------------------------------------------------------------------
# adiabatic elimination

@dataclass(frozen=True)
class NhCouplings:
    """Non-reciprocal SSH couplings.

    J_L, J_R are the intra-cell and G_L, G_R the inter-cell amplitudes in
    the chain orientation H[a_n, b_n] = J_L, H[b_n, a_n] = J_R,
    H[b_n, a_{n+1}] = G_L, H[a_{n+1}, b_n] = G_R.
    """

    J_L: complex
    J_R: complex
    G_L: complex
    G_R: complex
    diag_decay_a: float = 0.0
    diag_decay_b: float = 0.0

    @property
    def J1(self):
        return (self.J_L - self.J_R) / 2

    @property
    def J2(self):
        return (self.G_R - self.G_L) / 2

    @property
    def nontrivial(self):
        """True when |G_L G_R| > |J_L J_R|."""
        return abs(self.G_L * self.G_R) > abs(self.J_L * self.J_R)

    def swapped(self):
        return NhCouplings(self.J_R, self.J_L, self.G_R, self.G_L, self.diag_decay_a, self.diag_decay_b)

    def as_dict(self):
        return {"J_L": self.J_L, "J_R": self.J_R, "G_L": self.G_L, "G_R": self.G_R,
                "diag_decay_a": self.diag_decay_a, "diag_decay_b": self.diag_decay_b}


@dataclass
class CellCouplings:
    """Per-cell couplings of an inhomogeneous chain (same orientation as NhCouplings).

    ``G_L[n]``/``G_R[n]`` connect cell n to n+1 (mod N when periodic).
    """

    J_L: np.ndarray
    J_R: np.ndarray
    G_L: np.ndarray
    G_R: np.ndarray
    periodic: bool = False

    @classmethod
    def uniform(cls, nh, n_cells, periodic=False):
        n_inter = n_cells if periodic else n_cells - 1
        full = lambda v, m: np.full(m, v, dtype=np.complex128)  # noqa: E731
        return cls(full(nh.J_L, n_cells), full(nh.J_R, n_cells), full(nh.G_L, n_inter),
                   full(nh.G_R, n_inter), periodic)

    @property
    def n_cells(self):
        return self.J_L.size


def _check_scales(Gamma, gamma, aux_couplings, ratio):
    if not Gamma > 0:
        raise EliminationError("elimination needs Gamma > 0")
    biggest = max([gamma, *map(abs, aux_couplings)])
    if biggest > 0 and (Gamma / 2) / biggest < ratio:
        raise EliminationError(f"Gamma/2 = {Gamma / 2:.4g} is only {(Gamma / 2) / biggest:.3g}x the "
                               f"largest auxiliary coupling or decay ({biggest:.4g}); need >= {ratio:g}")


def adiabatic_eliminate(cs, Gamma=None, gamma=None, ratio=10.0, J_ca_next=None):
    """Closed-form non-reciprocal couplings from bare complex amplitudes.

    Parameters
    ----------
    cs : CouplingSet
        Bare amplitudes (matrix elements H[j, k]).
    Gamma, gamma : float, optional
        Default to the values stored in ``cs``.
    ratio : float
        Minimum Gamma/2 over the largest coupling into an auxiliary atom.
    J_ca_next : complex, optional
        H[c_{n+1}, a_{n+1}] when it differs from ``cs.J_ca``.

    Returns
    -------
    NhCouplings
    """
    Gamma = cs.Gamma if Gamma is None else Gamma
    gamma = cs.gamma if gamma is None else gamma
    _check_scales(Gamma, gamma, (cs.J_bc, cs.J_ca, cs.h1, cs.h2), ratio)
    Jab, Jbc, Jca, Ji, h1, h2 = cs.J_ab, cs.J_bc, cs.J_ca, cs.J_inter, cs.h1, cs.h2
    Jca2 = Jca if J_ca_next is None else J_ca_next
    k = 2j / Gamma
    c = np.conj
    nh = NhCouplings(
        J_L=complex(c(Jab) - k * Jbc * Jca),
        J_R=complex(Jab - k * c(Jca) * c(Jbc)),
        G_L=complex(c(Ji) - k * (c(h1) * c(Jbc) + c(Jca2) * c(h2))),
        G_R=complex(Ji - k * (Jbc * h1 + h2 * Jca2)),
        diag_decay_a=float(gamma + 2 * (abs(Jca) ** 2 + abs(h1) ** 2) / Gamma),
        diag_decay_b=float(gamma + 2 * (abs(Jbc) ** 2 + abs(h2) ** 2) / Gamma),
    )
    cs.nh = nh
    return nh


def real_form_couplings(cs, Gamma):
    """Couplings written with magnitudes only, valid for flux +pi/2."""
    J1 = 2 * abs(cs.J_bc) * abs(cs.J_ca) / Gamma
    J2 = 2 * (abs(cs.J_bc) * abs(cs.h1) + abs(cs.J_ca) * abs(cs.h2)) / Gamma
    return NhCouplings(abs(cs.J_ab) + J1, abs(cs.J_ab) - J1, abs(cs.J_inter) - J2, abs(cs.J_inter) + J2)


def eliminate_auxiliary(H, aux, Gamma, gamma=0.0):
    """Effective non-Hermitian Hamiltonian on the slow sites.

    H_eff = H_ss - H_sc (H_cc - i Gamma/2)^{-1} H_cs - i gamma, which
    reduces to H_ss - (2i/Gamma) H_sc H_cs when the auxiliary block is empty.

    Returns
    -------
    H_eff : ndarray
    slow : ndarray of int
        Indices of the retained sites.
    """
    H = np.asarray(H, dtype=np.complex128)
    aux = np.asarray(aux, dtype=bool)
    s, c = np.flatnonzero(~aux), np.flatnonzero(aux)
    Hcc = H[np.ix_(c, c)]
    if np.any(Hcc):
        res = np.linalg.solve(Hcc - 0.5j * Gamma * np.eye(c.size), H[np.ix_(c, s)])
    else:
        res = H[np.ix_(c, s)] / (-0.5j * Gamma)
    Heff = H[np.ix_(s, s)] - H[np.ix_(s, c)] @ res - 1j * gamma * np.eye(s.size)
    return Heff, s


def eliminate_array(H, n_cells, Gamma, periodic=False, ratio=None):
    """Nearest-neighbour chain couplings of a whole eliminated array.

    ``H`` is the 3N x 3N atom-array hopping matrix (atom 3n+s). Next-nearest
    and diagonal terms of the eliminated Hamiltonian are discarded.
    """
    H = np.asarray(H, dtype=np.complex128)
    aux = np.zeros(3 * n_cells, dtype=bool)
    aux[2::3] = True
    if ratio is not None:
        _check_scales(Gamma, 0.0, H[np.ix_(aux, ~aux)].ravel(), ratio)
    Heff, _ = eliminate_auxiliary(H, aux, Gamma)
    a = 2 * np.arange(n_cells)
    b = a + 1
    an = (a + 2) % (2 * n_cells)
    n_inter = n_cells if periodic else n_cells - 1
    return CellCouplings(
        J_L=Heff[b, a].copy(), J_R=Heff[a, b].copy(),
        G_L=Heff[an[:n_inter], b[:n_inter]].copy(), G_R=Heff[b[:n_inter], an[:n_inter]].copy(),
        periodic=periodic)


_SLOW = (1, 2, 4)  # a_n, b_n, a_{n+1} within the segment


def eliminated_segment_generator(H, Gamma, gamma, nearest_only=True):
    """3 x 3 generator on (a_n, b_n, a_{n+1}) after eliminating the auxiliaries.

    With ``nearest_only`` the a_n - a_{n+1} coupling produced by the
    elimination is dropped, leaving the chain form.
    """
    aux = np.array([k == "c" for k in SEGMENT_KINDS])
    Heff, slow = eliminate_auxiliary(H, aux, Gamma, gamma)
    assert tuple(slow) == _SLOW
    if nearest_only:
        Heff[0, 2] = Heff[2, 0] = 0.0
    return -1j * Heff


def evolve_amplitudes(M, u0, t_grid, labels, contract=None):
    states = integrate_linear(M, u0, t_grid, contract or IntegratorContract(rtol=1e-10, atol=1e-12))
    return PopulationTrajectory(np.asarray(t_grid, float), np.abs(states) ** 2, tuple(labels))


def validate_elimination(cfg, t_grid=None, Gamma=None, nearest_only=True):
    """Master-equation vs eliminated-chain dynamics from one initial excitation.

    Returns
    -------
    dict
        ``max_deviation`` over the three data sites and both trajectories.
    """
    from .trajectory import compare_trajectories

    Gamma = cfg.Gamma if Gamma is None else Gamma
    t_grid = np.linspace(0, cfg.elimination_t_end_us, cfg.elimination_n_points) if t_grid is None else t_grid
    H = build_effective_six_atom(cfg, stark="exact" if cfg.include_stark else None)
    i0 = SEGMENT_LABELS.index(cfg.initial_site)
    if SEGMENT_KINDS[i0] == "c":
        raise DomainError("elimination comparison needs the excitation on a data site")
    rho0 = np.zeros((7, 7), dtype=np.complex128)
    rho0[i0 + 1, i0 + 1] = 1.0
    me = evolve_master_equation(H, Gamma, cfg.gamma, rho0, t_grid, cfg.gamma_c)
    M3 = eliminated_segment_generator(H, Gamma, cfg.gamma, nearest_only)
    u0 = np.zeros(3, dtype=np.complex128)
    u0[_SLOW.index(i0)] = 1.0
    el = evolve_amplitudes(M3, u0, t_grid, [SEGMENT_LABELS[i] for i in _SLOW])
    cmp = compare_trajectories(me, el)
    return {"max_deviation": cmp["max_abs_deviation"], "master": me, "eliminated": el, "comparison": cmp}
