"""Interactions, Rydberg-mediated hopping, gauge flux and light shifts.

Atoms are indexed ``3*n + s`` with ``s = 0, 1, 2`` for species a, b, c of
unit cell ``n``. Hamiltonian matrices use ``H[j, k] = J^{jk}``, the amplitude
of sigma_j^+ sigma_k^-.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .config import SPECIES, SPECIES_COLORS
from .errors import DomainError, GeometryError, ResonanceError

__all__ = [
    "LaserDrive", "AtomArray", "CouplingSet", "Bond",
    "vdw_interaction", "hopping_amplitude", "pair_coupling", "plaquette_flux", "stark_shift",
    "linear_array", "ring_geometry", "build_array", "atom_drives", "array_hamiltonian",
    "coupling_set", "cutoff_report", "RESONANCE_RTOL",
]

RESONANCE_RTOL = 1e-6


@dataclass(frozen=True)
class LaserDrive:
    """One color acting on one atom.

    Attributes
    ----------
    atom : tuple (int, str)
        Cell index and species.
    color : str
        'I', 'II' or 'III'.
    rabi : float
        Rabi frequency magnitude, rad/us.
    phase : float
        Laser phase, rad.
    detuning : float
        Detuning, rad/us.
    """

    atom: tuple
    color: str
    rabi: float
    phase: float
    detuning: float


def vdw_interaction(C6, R):
    """Van der Waals shift V = -C6 / R**6.

    Works elementwise on arrays; any non-positive distance raises.
    """
    R = np.asarray(R, dtype=float)
    if np.any(~(R > 0)):
        raise DomainError("interatomic distance must be positive")
    V = -C6 / R ** 6
    return float(V) if V.ndim == 0 else V


def _check_denominator(den, scale, what):
    if scale == 0 or abs(den) < RESONANCE_RTOL * abs(scale):
        raise ResonanceError(f"{what} vanishes ({den:.3g}); perturbation theory is invalid")


def hopping_amplitude(drive_j, drive_k, V):
    """Second-order exchange amplitude mediated by one shared laser color.

    |J| = |Omega_j Omega_k V / (4 Delta (Delta + V))| with Peierls phase
    phi_j - phi_k. Returns 0 when the two drives have different colors.
    """
    if drive_j.color != drive_k.color:
        return 0j
    if not math.isclose(drive_j.detuning, drive_k.detuning, rel_tol=1e-12):
        raise DomainError("drives of one color must share the detuning")
    delta = drive_j.detuning
    _check_denominator(delta, 1.0, "detuning")
    _check_denominator(delta + V, delta, "Delta + V")
    mag = abs(drive_j.rabi * drive_k.rabi * V / (4.0 * delta * (delta + V)))
    return mag * complex(math.cos(drive_j.phase - drive_k.phase), math.sin(drive_j.phase - drive_k.phase))


def pair_coupling(drives_j, drives_k, V):
    """Total amplitude J^{jk}, summed over every shared color."""
    total = 0j
    for dj in drives_j:
        for dk in drives_k:
            if dj.color == dk.color:
                total += hopping_amplitude(dj, dk, V)
    return total


def _wrap(x):
    # reduce to (-pi, pi]
    y = math.remainder(x, 2 * math.pi)
    return math.pi if math.isclose(y, -math.pi, abs_tol=1e-15) else y


def plaquette_flux(phi_a_I, phi_b_I, phi_b_II, phi_c_II, phi_c_III, phi_a_III):
    """Gauge flux through the a-b-c triangle, reduced to (-pi, pi]."""
    return _wrap((phi_a_I - phi_b_I) + (phi_b_II - phi_c_II) + (phi_c_III - phi_a_III))


def stark_shift(j, drives, V, form="exact"):
    """Light shift of atom ``j`` when it carries the excitation.

    Parameters
    ----------
    j : int
        Atom index.
    drives : sequence of sequence of LaserDrive
        Drives for every atom that contributes.
    V : ndarray
        Pairwise interaction matrix for the same atoms.
    form : {'exact', 'printed'}
        'exact' uses |Omega|^2 / (4 (Delta + V)) for the blockade-shifted
        neighbour terms; 'printed' uses |Omega|^2 / (4 Delta + V).

    Returns
    -------
    float
        mu_j = sum |Omega_j|^2/(4 Delta_j) - sum_{k != j} |Omega_k|^2/(4 (Delta_k + V_jk)).
    """
    if form not in ("exact", "printed"):
        raise DomainError(f"unknown Stark-shift form {form!r}")
    mu = 0.0
    for d in drives[j]:
        if d.rabi:
            _check_denominator(d.detuning, 1.0, "detuning")
            mu += d.rabi ** 2 / (4.0 * d.detuning)
    for k, dk in enumerate(drives):
        if k == j:
            continue
        for d in dk:
            if not d.rabi:
                continue
            if form == "exact":
                den = 4.0 * (d.detuning + V[j, k])
            else:
                den = 4.0 * d.detuning + V[j, k]
            _check_denominator(den, 4.0 * d.detuning, "Stark-shift denominator")
            mu -= d.rabi ** 2 / den
    return mu


# ----------------------------------------------------------------------------
# geometry

@dataclass
class AtomArray:
    """Positions of a three-atom-per-cell array.

    Attributes
    ----------
    positions : ndarray, shape (3N, 2)
        Coordinates in um.
    n_cells : int
    periodic : bool
    radius : float or None
        Ring radius for the periodic layout.
    """

    positions: np.ndarray
    n_cells: int
    periodic: bool = False
    radius: float = None

    @property
    def distances(self):
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])

    @staticmethod
    def species(i):
        return SPECIES[i % 3]

    @staticmethod
    def cell(i):
        return i // 3

    def label(self, i):
        return f"{self.species(i)}{self.cell(i)}"

    @property
    def far_chord(self):
        """Distance c_n - a_{n+1} (the h1 bond)."""
        n = 0
        return float(self.distances[3 * n + 2, (3 * n + 3) % (3 * self.n_cells)])


def linear_array(n_cells, R1, R2):
    """Straight chain of triangles; a_n-b_n = R1, b_n-a_{n+1} = R2."""
    if n_cells < 1:
        raise GeometryError("need at least one unit cell")
    if R1 <= 0 or R2 <= 0:
        raise GeometryError("distances must be positive")
    d = R1 + R2
    pos = np.zeros((3 * n_cells, 2))
    n = np.arange(n_cells)
    pos[0::3, 0] = n * d
    pos[1::3, 0] = n * d + R1
    pos[2::3, 0] = n * d + R1 / 2
    pos[2::3, 1] = R1 * math.sqrt(3) / 2
    return AtomArray(pos, n_cells)


def ring_geometry(n_cells, R1, R2):
    """Close the chain into a ring whose chords reproduce R1 and R2.

    The radius solves asin(R1/2r) + asin(R2/2r) = pi/N; auxiliary atoms sit
    outside the ring so each a-b-c triangle stays equilateral.
    """
    if n_cells < 3:
        raise GeometryError(f"a ring needs at least 3 unit cells, got {n_cells}")
    if R1 <= 0 or R2 <= 0:
        raise GeometryError("distances must be positive")
    target = math.pi / n_cells

    def f(r):
        return math.asin(R1 / (2 * r)) + math.asin(R2 / (2 * r)) - target

    r_min = max(R1, R2) / 2
    if f(r_min) < 0:
        raise GeometryError("chords R1, R2 cannot close a ring of this size")
    r_hi = r_min
    while f(r_hi) > 0:
        r_hi *= 2
    r = brentq(f, r_min, r_hi, xtol=1e-14, rtol=1e-15)
    alpha = 2 * math.asin(R1 / (2 * r))
    theta = 2 * math.pi * np.arange(n_cells) / n_cells
    pos = np.zeros((3 * n_cells, 2))
    pos[0::3] = r * np.column_stack([np.cos(theta), np.sin(theta)])
    pos[1::3] = r * np.column_stack([np.cos(theta + alpha), np.sin(theta + alpha)])
    rc = r * math.cos(alpha / 2) + R1 * math.sqrt(3) / 2
    pos[2::3] = rc * np.column_stack([np.cos(theta + alpha / 2), np.sin(theta + alpha / 2)])
    arr = AtomArray(pos, n_cells, periodic=True, radius=r)
    D = arr.distances
    np.fill_diagonal(D, np.inf)
    if D.min() < 0.5 * min(R1, R2):
        raise GeometryError("ring is too small: non-neighbouring atoms collide")
    return arr


def build_array(cfg, boundary=None):
    boundary = boundary or cfg.boundary
    if boundary == "PBC":
        return ring_geometry(cfg.n_cells, cfg.R1, cfg.R2)
    return linear_array(cfg.n_cells, cfg.R1, cfg.R2)


def atom_drives(cfg, cell, species, phase_offsets=None):
    """LaserDrive list for one atom.

    ``phase_offsets`` maps color -> extra phase (used for phase disorder).
    """
    out = []
    for color in SPECIES_COLORS[species]:
        d = cfg.drives[color]
        ph = cfg.phase(species, color)
        if phase_offsets:
            ph += phase_offsets.get(color, 0.0)
        out.append(LaserDrive((cell, species), color, d.rabi, ph, d.detuning))
    return out


# ----------------------------------------------------------------------------
# atom-array Hamiltonian

@dataclass(frozen=True)
class Bond:
    """A retained pair (j < k) with its nominal distance in um."""

    j: int
    k: int
    distance: float


def retained_bonds(array, cutoff):
    """All pairs closer than ``cutoff`` that share at least one color."""
    D = array.distances
    out = []
    n = D.shape[0]
    for j in range(n):
        for k in range(j + 1, n):
            if D[j, k] <= cutoff and set(SPECIES_COLORS[array.species(j)]) & set(SPECIES_COLORS[array.species(k)]):
                out.append(Bond(j, k, float(D[j, k])))
    return out


def array_hamiltonian(cfg, boundary=None, cell_phase=None, bond_offsets=None, array=None):
    """Single-excitation Rydberg-mediated hopping matrix of the whole array.

    Parameters
    ----------
    cfg : PhysicalConfig
    boundary : {'OBC', 'PBC'}, optional
    cell_phase : array_like, shape (N,), optional
        Extra phase added to the color-III drive of auxiliary atom c_n.
    bond_offsets : array_like, optional
        Distance change (um) for each retained bond, ordered as
        :func:`retained_bonds`.

    Returns
    -------
    H : ndarray, shape (3N, 3N)
        Hermitian; zero diagonal (light shifts are not included).
    bonds : list of Bond
    """
    boundary = boundary or cfg.boundary
    array = array or build_array(cfg, boundary)
    cutoff = cfg.R3 if boundary == "OBC" else cfg.R3_ring
    bonds = retained_bonds(array, cutoff * (1 + cfg.cutoff_slack))
    n_atoms = 3 * array.n_cells
    if cell_phase is not None:
        cell_phase = np.asarray(cell_phase, dtype=float)
        if cell_phase.shape != (array.n_cells,):
            raise DomainError(f"need one phase offset per cell ({array.n_cells}), got {cell_phase.shape}")
    if bond_offsets is not None:
        bond_offsets = np.asarray(bond_offsets, dtype=float)
        if bond_offsets.shape != (len(bonds),):
            raise DomainError(f"need one offset per bond ({len(bonds)}), got {bond_offsets.shape}")
    drives = []
    for i in range(n_atoms):
        s, n = array.species(i), array.cell(i)
        off = {"III": float(cell_phase[n])} if (cell_phase is not None and s == "c") else None
        drives.append(atom_drives(cfg, n, s, off))
    H = np.zeros((n_atoms, n_atoms), dtype=np.complex128)
    for b, bond in enumerate(bonds):
        R = bond.distance + (bond_offsets[b] if bond_offsets is not None else 0.0)
        if R <= 0:
            raise DomainError(f"bond {b} ({array.label(bond.j)}-{array.label(bond.k)}) has non-positive length")
        J = pair_coupling(drives[bond.j], drives[bond.k], vdw_interaction(cfg.C6, R))
        H[bond.j, bond.k] = J
        H[bond.k, bond.j] = J.conjugate()
    return H, bonds


# ----------------------------------------------------------------------------
# nominal coupling set

@dataclass
class CouplingSet:
    """Bare hopping amplitudes of one unit cell and its outgoing bonds.

    The bare amplitudes are matrix elements ``H[j, k]``:
    J_ab = H[a_n, b_n], J_bc = H[b_n, c_n], J_ca = H[c_n, a_n],
    J_inter = H[b_n, a_{n+1}], h1 = H[c_n, a_{n+1}], h2 = H[b_n, c_{n+1}].
    ``nh`` holds the eliminated non-reciprocal couplings once computed.
    """

    J_ab: complex
    J_bc: complex
    J_ca: complex
    J_inter: complex
    h1: complex
    h2: complex
    Gamma: float = math.inf
    gamma: float = 0.0
    nh: object = field(default=None, repr=False)

    def _nh(self):
        if self.nh is None:
            raise AttributeError("non-reciprocal couplings require adiabatic elimination first")
        return self.nh

    J1 = property(lambda self: self._nh().J1)
    J2 = property(lambda self: self._nh().J2)
    J_L = property(lambda self: self._nh().J_L)
    J_R = property(lambda self: self._nh().J_R)
    G_L = property(lambda self: self._nh().G_L)
    G_R = property(lambda self: self._nh().G_R)
    on_site_decay_a = property(lambda self: self._nh().diag_decay_a)
    on_site_decay_b = property(lambda self: self._nh().diag_decay_b)
    nontrivial = property(lambda self: self._nh().nontrivial)

    def as_dict(self):
        return {k: getattr(self, k) for k in ("J_ab", "J_bc", "J_ca", "J_inter", "h1", "h2")}


def coupling_set(cfg, cell=0):
    """Bare amplitudes around ``cell`` of an open chain with this config."""
    n_cells = max(cell + 2, 2)
    H, _ = array_hamiltonian(cfg.replace(n_cells=n_cells, boundary="OBC"), boundary="OBC")
    a, b, c = 3 * cell, 3 * cell + 1, 3 * cell + 2
    return CouplingSet(
        J_ab=H[a, b], J_bc=H[b, c], J_ca=H[c, a],
        J_inter=H[b, a + 3], h1=H[c, a + 3], h2=H[b, c + 3],
        Gamma=cfg.Gamma, gamma=cfg.gamma,
    )


def cutoff_report(cfg, boundary="OBC", r_max=None):
    """Compare neglected couplings beyond the cutoff with the weakest retained one.

    Returns
    -------
    dict
        ``weakest_retained`` and ``strongest_neglected`` magnitudes, their
        ratio, and the neglected pair (labels, distance).
    """
    array = build_array(cfg.replace(boundary=boundary), boundary)
    cut = (cfg.R3 if boundary == "OBC" else cfg.R3_ring) * (1 + cfg.cutoff_slack)
    D = array.distances
    r_max = r_max or 3 * cut
    drives = [atom_drives(cfg, array.cell(i), array.species(i)) for i in range(D.shape[0])]
    kept, dropped = [], []
    for j in range(D.shape[0]):
        for k in range(j + 1, D.shape[0]):
            if D[j, k] > r_max:
                continue
            J = abs(pair_coupling(drives[j], drives[k], vdw_interaction(cfg.C6, D[j, k])))
            if J == 0:
                continue
            (kept if D[j, k] <= cut else dropped).append((J, array.label(j), array.label(k), float(D[j, k])))
    weakest = min(kept)
    strongest = max(dropped) if dropped else (0.0, None, None, math.inf)
    return {
        "weakest_retained": weakest[0],
        "weakest_retained_pair": weakest[1:],
        "strongest_neglected": strongest[0],
        "strongest_neglected_pair": strongest[1:],
        "ratio": weakest[0] / strongest[0] if strongest[0] else math.inf,
    }

