"""Six-atom segment: full driven Hamiltonian versus the effective hopping model.

The segment holds the atoms c_{n-1}, a_n, b_n, c_n, a_{n+1}, c_{n+1}. In the
64-dimensional product basis, bit ``j`` of a basis index is set when segment
atom ``j`` is in the Rydberg state.
"""
import numpy as np

from .errors import DomainError
from .model import array_hamiltonian, atom_drives, linear_array, stark_shift, vdw_interaction
from .numerics import FourierGenerator, IntegratorContract, integrate_linear
from .trajectory import PopulationTrajectory

__all__ = [
    "SEGMENT_LABELS", "SEGMENT_KINDS", "segment_indices", "segment_drives", "segment_interactions",
    "full_hamiltonian_terms", "build_full_hamiltonian", "build_effective_six_atom",
    "full_contract", "evolve", "marginal_populations", "run_full", "run_effective",
]

SEGMENT_LABELS = ("c_n-1", "a_n", "b_n", "c_n", "a_n+1", "c_n+1")
SEGMENT_KINDS = "cabcac"
N_ATOMS = 6
DIM = 2 ** N_ATOMS
# positions of the segment atoms inside a three-cell open chain
_ARRAY_INDEX = (2, 3, 4, 5, 6, 8)


def segment_indices():
    return _ARRAY_INDEX


def segment_drives(cfg):
    """Drives on the six segment atoms, in segment order."""
    return [atom_drives(cfg, i // 3, "abc"[i % 3]) for i in _ARRAY_INDEX]


def segment_interactions(cfg):
    """6 x 6 van der Waals matrix over all segment pairs (no cutoff)."""
    arr = linear_array(3, cfg.R1, cfg.R2)
    D = arr.distances[np.ix_(_ARRAY_INDEX, _ARRAY_INDEX)]
    V = np.zeros((N_ATOMS, N_ATOMS))
    off = ~np.eye(N_ATOMS, dtype=bool)
    V[off] = vdw_interaction(cfg.C6, D[off])
    return V


def _bits():
    return (np.arange(DIM)[:, None] >> np.arange(N_ATOMS)[None, :]) & 1


def full_hamiltonian_terms(cfg):
    """Harmonic decomposition H(t) = sum_m exp(i w_m t) H_m of the driven segment.

    The static term holds the pairwise interaction energies on multiply
    excited states; each color contributes (Omega/2) e^{i phi} sigma^+ at
    frequency +Delta and its conjugate at -Delta.
    """
    bits = _bits()
    V = segment_interactions(cfg)
    static = 0.5 * np.einsum("sj,jk,sk->s", bits, V, bits)
    terms = {0.0: np.diag(static).astype(np.complex128)}
    idx = np.arange(DIM)
    for j, drives in enumerate(segment_drives(cfg)):
        lower = idx[bits[:, j] == 0]
        for d in drives:
            if d.rabi == 0:
                continue
            amp = 0.5 * d.rabi * np.exp(1j * d.phase)
            up = terms.setdefault(d.detuning, np.zeros((DIM, DIM), np.complex128))
            up[lower | (1 << j), lower] += amp
            down = terms.setdefault(-d.detuning, np.zeros((DIM, DIM), np.complex128))
            down[lower, lower | (1 << j)] += np.conj(amp)
    omegas = sorted(terms)
    return np.array(omegas), [terms[w] for w in omegas]


def build_full_hamiltonian(t, cfg):
    """Dense 64 x 64 Hamiltonian of the driven six-atom segment at time ``t`` (us)."""
    omegas, terms = full_hamiltonian_terms(cfg)
    H = np.zeros((DIM, DIM), dtype=np.complex128)
    for w, T in zip(omegas, terms):
        H += (1.0 if w == 0 else np.exp(1j * w * t)) * T
    return H


def build_effective_six_atom(cfg, stark="exact"):
    """Effective single-excitation Hamiltonian of the segment.

    Off-diagonal entries are the Rydberg-mediated hoppings of bonds within
    the cutoff; the diagonal carries the light shifts.

    Parameters
    ----------
    stark : {'exact', 'printed', None}
        Light-shift formula (see :func:`rydssh.model.stark_shift`) or None to
        drop the diagonal.
    """
    H3, _ = array_hamiltonian(cfg.replace(n_cells=3, boundary="OBC"), boundary="OBC")
    H = H3[np.ix_(_ARRAY_INDEX, _ARRAY_INDEX)].copy()
    if stark is not None:
        drives = segment_drives(cfg)
        V = segment_interactions(cfg)
        H[np.diag_indices(N_ATOMS)] = [stark_shift(j, drives, V, form=stark) for j in range(N_ATOMS)]
    return H


def full_contract(cfg, rtol=1e-8, atol=1e-10):
    """Integrator contract resolving the fastest drive phase."""
    return IntegratorContract(rtol=rtol, atol=atol, max_step=1.0 / (50.0 * cfg.max_detuning()))


def marginal_populations(states):
    """<n_j> for each atom from 64-dim state rows."""
    prob = np.abs(np.atleast_2d(states)) ** 2
    return prob @ _bits()


def evolve(H, psi0, t_grid, contract=None, labels=None, observable=None):
    """Integrate i dpsi/dt = H psi and return populations on the grid.

    Parameters
    ----------
    H : ndarray or FourierGenerator
        Constant Hamiltonian, or harmonic decomposition of H(t) (the
        generator -i H is formed internally).
    psi0 : array_like
        Normalised initial state.
    t_grid : array_like
        Strictly increasing times (us).
    contract : IntegratorContract, optional
    labels : sequence of str, optional
        Site labels for the populations.
    observable : callable, optional
        Maps state rows to population rows; defaults to |psi|^2.
    """
    psi0 = np.asarray(psi0, dtype=np.complex128)
    if not np.isclose(np.linalg.norm(psi0), 1.0, atol=1e-10):
        raise DomainError("initial state must be normalised")
    if isinstance(H, FourierGenerator):
        gen = FourierGenerator(H.omegas, [-1j * T for T in H.terms])
    else:
        gen = -1j * np.asarray(H, dtype=np.complex128)
    states = integrate_linear(gen, psi0, t_grid, contract or IntegratorContract())
    pops = observable(states) if observable else np.abs(states) ** 2
    labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(pops.shape[1]))
    return PopulationTrajectory(np.asarray(t_grid, float), pops, labels)


def _time_grid(cfg):
    return np.linspace(0.0, cfg.t_end_us, cfg.n_points)


def _initial_index(cfg):
    return SEGMENT_LABELS.index(cfg.initial_site)


def run_full(cfg, t_grid=None, contract=None):
    """Full driven six-atom dynamics; returns atom-marginal Rydberg populations."""
    t_grid = _time_grid(cfg) if t_grid is None else t_grid
    omegas, terms = full_hamiltonian_terms(cfg)
    psi0 = np.zeros(DIM, np.complex128)
    psi0[1 << _initial_index(cfg)] = 1.0
    return evolve(FourierGenerator(omegas, terms), psi0, t_grid, contract or full_contract(cfg),
                  SEGMENT_LABELS, observable=marginal_populations)


def run_effective(cfg, t_grid=None, stark="exact", contract=None):
    """Effective six-site dynamics from the same initial excitation."""
    t_grid = _time_grid(cfg) if t_grid is None else t_grid
    psi0 = np.zeros(N_ATOMS, np.complex128)
    psi0[_initial_index(cfg)] = 1.0
    return evolve(build_effective_six_atom(cfg, stark), psi0, t_grid, contract, SEGMENT_LABELS)
