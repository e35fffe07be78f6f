"""Non-reciprocal SSH chains: construction, spectra, Hermitising transform, skin profiles."""
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dissipation import CellCouplings, NhCouplings, adiabatic_eliminate, eliminate_array
from .errors import ChiralSymmetryError, DomainError
from .model import array_hamiltonian, coupling_set
from .numerics import eig_pair

__all__ = [
    "ChainHamiltonian", "SimilarityTransform", "SkinProfile",
    "build_chain", "chain_from_config", "eigensolve", "similarity_transform", "skin_profile",
    "edge_states", "chiral_operator", "check_chiral", "default_couplings", "refine_edge_pair",
]


@dataclass
class ChainHamiltonian:
    """L x L non-reciprocal SSH matrix with sites ordered a_0, b_0, a_1, b_1, ..."""

    matrix: np.ndarray
    couplings: object
    boundary: str

    @property
    def size(self):
        return self.matrix.shape[0]

    @property
    def n_cells(self):
        return self.size // 2

    def norm(self):
        return float(np.linalg.norm(self.matrix))


def build_chain(couplings, n_cells=None, boundary="OBC"):
    """Assemble the chain matrix.

    Parameters
    ----------
    couplings : NhCouplings or CellCouplings
        Uniform or per-cell couplings.
    n_cells : int
        Number of unit cells (ignored for CellCouplings).
    boundary : {'OBC', 'PBC'}

    Notes
    -----
    H[2n, 2n+1] = J_L, H[2n+1, 2n] = J_R, H[2n+1, 2n+2] = G_L,
    H[2n+2, 2n+1] = G_R; the periodic seam uses H[L-1, 0] = G_L and
    H[0, L-1] = G_R.
    """
    if boundary not in ("OBC", "PBC"):
        raise DomainError(f"boundary must be 'OBC' or 'PBC', got {boundary!r}")
    periodic = boundary == "PBC"
    if isinstance(couplings, NhCouplings):
        if n_cells is None or n_cells < 1:
            raise DomainError("n_cells must be >= 1")
        if periodic and n_cells < 2:
            raise DomainError("periodic chains need at least two cells")
        cells = CellCouplings.uniform(couplings, n_cells, periodic)
    elif isinstance(couplings, CellCouplings):
        cells = couplings
        if cells.periodic != periodic:
            raise DomainError("per-cell couplings were built for the other boundary condition")
        n_cells = cells.n_cells
    else:
        raise DomainError("couplings must be NhCouplings or CellCouplings")
    L = 2 * n_cells
    H = np.zeros((L, L), dtype=np.complex128)
    a = 2 * np.arange(n_cells)
    H[a, a + 1] = cells.J_L
    H[a + 1, a] = cells.J_R
    n_inter = cells.G_L.size
    b = a[:n_inter] + 1
    nxt = (b + 1) % L
    H[b, nxt] = cells.G_L
    H[nxt, b] = cells.G_R
    return ChainHamiltonian(H, couplings, boundary)


def default_couplings(cfg, flux_sign=1):
    """Uniform couplings from the clean array at the requested flux sign."""
    cfg = cfg.with_flux(flux_sign)
    cs = coupling_set(cfg)
    return adiabatic_eliminate(cs, cfg.Gamma, cfg.gamma, ratio=cfg.min_elimination_ratio)


def chain_from_config(cfg, boundary=None, cell_phase=None, bond_offsets=None):
    """Full pipeline: array hoppings -> elimination -> chain matrix."""
    boundary = boundary or cfg.boundary
    H, _ = array_hamiltonian(cfg, boundary, cell_phase=cell_phase, bond_offsets=bond_offsets)
    cells = eliminate_array(H, cfg.n_cells, cfg.Gamma, periodic=boundary == "PBC",
                            ratio=cfg.min_elimination_ratio)
    return build_chain(cells, boundary=boundary)


def chiral_operator(L):
    """S1 = diag(+1, -1, +1, -1, ...)."""
    return np.where(np.arange(L) % 2 == 0, 1.0, -1.0)


def check_chiral(H, tol=1e-9):
    """Raise if S1 H S1 != -H beyond ``tol * max(1, ||H||)``."""
    H = np.asarray(H)
    s = chiral_operator(H.shape[0])
    err = np.abs(s[:, None] * H * s[None, :] + H).max(initial=0.0)
    if err > tol * max(1.0, np.abs(H).max(initial=0.0)):
        raise ChiralSymmetryError(f"chiral symmetry broken by {err:.3g}")
    return err


def eigensolve(chain, refine_edges=True):
    """Biorthonormal spectrum of a chain (or a bare matrix).

    For open chains whose two midgap states are split by less than
    ``1e-6 ||H||`` the dense solver only resolves their eigenvectors to
    roughly eps ||H|| / splitting. With ``refine_edges`` that pair is rebuilt
    from the exact sublattice zero modes (see :func:`refine_edge_pair`).
    """
    M = chain.matrix if isinstance(chain, ChainHamiltonian) else np.asarray(chain)
    spec = eig_pair(M)
    is_open = not (isinstance(chain, ChainHamiltonian) and chain.boundary == "PBC")
    if refine_edges and is_open and M.shape[0] >= 4:
        spec = refine_edge_pair(M, spec)
    return spec


def _zero_mode(first, ratio_num, ratio_den):
    # x_{n+1} = -num_n / den_n * x_n, accumulated in log space to avoid overflow
    n = ratio_num.size + 1
    logs = np.zeros(n)
    phase = np.ones(n, dtype=np.complex128)
    r = -ratio_num / ratio_den
    logs[1:] = np.cumsum(np.log(np.abs(r)))
    phase[1:] = np.cumprod(r / np.abs(r))
    logs -= logs.max()
    return first * phase * np.exp(logs)


def _sublattice_modes(M):
    """Right zero modes of an open chiral chain on the A and B sublattices."""
    N = M.shape[0] // 2
    a = 2 * np.arange(N)
    b = a + 1
    JR, GL = M[b, a], M[b[:-1], a[1:]]
    JL, GR = M[a, b], M[a[1:], b[:-1]]
    if np.any(GL == 0) or np.any(GR == 0) or np.any(JR == 0) or np.any(JL == 0):
        return None
    u = np.zeros(2 * N, dtype=np.complex128)
    v = np.zeros(2 * N, dtype=np.complex128)
    # rows b_n, n < N-1:  JR_n x_n + GL_n x_{n+1} = 0
    u[a] = _zero_mode(1.0, JR[:-1], GL)
    # rows a_n, n > 0:  JL_n y_n + GR_{n-1} y_{n-1} = 0, run from the right end
    v[b[::-1]] = _zero_mode(1.0, JL[1:][::-1], GR[::-1])
    return u, v


def refine_edge_pair(M, spec, max_split=1e-6):
    """Replace a nearly degenerate midgap pair by exact zero-mode combinations.

    The sublattice zero modes u (on a sites) and v (on b sites) are built
    by the transfer recursion, which is exact up to a residual on the far
    boundary. The pair's eigenvalues and eigenvectors then follow from the
    2 x 2 matrix of H in that basis, with relative rather than absolute
    accuracy.
    """
    scale = np.linalg.norm(M)
    edge = edge_states(spec)
    if not edge or np.abs(spec.eigenvalues[list(edge)]).max() > max_split * scale:
        return spec
    try:
        check_chiral(M)
    except ChiralSymmetryError:
        return spec
    right = _sublattice_modes(M)
    left = _sublattice_modes(M.conj().T)
    if right is None or left is None:
        return spec
    W = np.column_stack(right)
    Z = np.column_stack(left)
    norms = np.einsum("ij,ij->j", Z.conj(), W)
    if np.any(np.abs(norms) < 1e-300):
        return spec
    Z = Z / norms.conj()
    h = Z.conj().T @ M @ W
    h[0, 0] = h[1, 1] = 0.0
    E = np.sqrt(h[0, 1] * h[1, 0] + 0j)
    if E == 0:
        return spec
    C = np.array([[h[0, 1], h[0, 1]], [E, -E]])
    vals = np.array([E, -E])
    R = W @ C
    Lft = Z @ np.linalg.inv(C).conj().T
    # same gauge as the dense solver: unit norm, largest entry real positive
    nr = np.linalg.norm(R, axis=0)
    piv = R[np.argmax(np.round(np.abs(R), 12), axis=0), [0, 1]]
    gauge = nr * piv / np.abs(piv)
    R = R / gauge
    Lft = Lft * gauge.conj()
    res = np.linalg.norm(M @ R - R * vals, axis=0).max()
    if res > 1e-9 * scale:
        return spec
    out_vals = spec.eigenvalues.copy()
    out_R = spec.right.copy()
    out_L = spec.left.copy()
    i, j = edge
    # keep the lexicographic (Re, Im) order of the slots
    order = np.lexsort((vals.imag, vals.real))
    out_vals[[i, j]] = vals[order]
    out_R[:, [i, j]] = R[:, order]
    out_L[:, [i, j]] = Lft[:, order]
    # the rest of the left basis stays dual to the new pair up to O(split)
    return type(spec)(out_vals, out_R, out_L, spec.clusters, spec.condition)


@dataclass
class SimilarityTransform:
    """Diagonal S with S H S^-1 Hermitian for an open chain.

    Attributes
    ----------
    diagonal : ndarray
        s_1 ... s_L with s_1 = 1.
    l1, l2 : complex
        sqrt(J_L/J_R) and sqrt(G_L/G_R) (first cell for per-cell couplings).
    localization_length : float
        Skin length in unit cells, 1/|ln|l1 l2||, of the amplitude envelope.
    """

    diagonal: np.ndarray
    l1: complex
    l2: complex
    localization_length: float

    def apply(self, H):
        H = H.matrix if isinstance(H, ChainHamiltonian) else np.asarray(H)
        s = self.diagonal
        return s[:, None] * H / s[None, :]


def similarity_transform(couplings, n_cells=None):
    """Build S = diag(1, l1, l1 l2, l1^2 l2, ...).

    Complex ratios give complex square roots and a warning: the transform
    then symmetrises but does not Hermitise.
    """
    if isinstance(couplings, NhCouplings):
        if n_cells is None or n_cells < 1:
            raise DomainError("n_cells must be >= 1")
        cells = CellCouplings.uniform(couplings, n_cells)
    else:
        cells = couplings
        n_cells = cells.n_cells
    if np.any(cells.J_R == 0) or np.any(cells.G_R == 0):
        raise DomainError("J_R and G_R must be non-zero")
    rj = cells.J_L / cells.J_R
    rg = cells.G_L / cells.G_R if cells.G_L.size else np.array([], complex)
    real = np.all(np.abs(np.imag(rj)) <= 1e-12 * np.abs(rj)) and np.all(np.abs(np.imag(rg)) <= 1e-12 * np.abs(rg))
    positive = real and np.all(np.real(rj) > 0) and np.all(np.real(rg) > 0)
    if positive:
        l1s, l2s = np.sqrt(np.real(rj)), np.sqrt(np.real(rg))
    else:
        warnings.warn("couplings carry phases; the similarity transform is not real", RuntimeWarning,
                      stacklevel=2)
        l1s, l2s = np.sqrt(rj.astype(complex)), np.sqrt(rg.astype(complex))
    s = np.ones(2 * n_cells, dtype=np.result_type(l1s, l2s, float))
    for n in range(n_cells):
        if n > 0:
            s[2 * n] = s[2 * n - 1] * l2s[n - 1]
        s[2 * n + 1] = s[2 * n] * l1s[n]
    l1 = l1s[0]
    l2 = l2s[0] if l2s.size else 1.0
    prod = abs(l1 * l2)
    xi = math.inf if prod == 1 else 1.0 / abs(math.log(prod))
    return SimilarityTransform(s, l1, l2, xi)


@dataclass
class SkinProfile:
    """|psi_{n,j}|^2 of unit-norm right eigenvectors; rows are states."""

    probabilities: np.ndarray
    edge: tuple
    bulk: np.ndarray

    def cell_profile(self, states=None):
        """Probability per unit cell, averaged over the chosen states (default bulk)."""
        idx = self.bulk if states is None else np.asarray(states)
        p = self.probabilities[idx]
        return p.reshape(p.shape[0], -1, 2).sum(axis=2).mean(axis=0)


def edge_states(spectrum, ratio=0.5):
    """Indices of the two midgap states, or () if there is no clear gap.

    The two eigenvalues of smallest |E| count as edge states when both lie
    below ``ratio`` times the smallest remaining |E| (the bulk half-gap).
    """
    E = np.abs(spectrum.eigenvalues)
    if E.size < 3:
        return ()
    order = np.argsort(E, kind="stable")
    if E[order[1]] < ratio * E[order[2]]:
        return tuple(sorted(int(i) for i in order[:2]))
    return ()


def skin_profile(spectrum, ratio=0.5):
    R = spectrum.right / np.linalg.norm(spectrum.right, axis=0)
    prob = (np.abs(R) ** 2).T
    edge = edge_states(spectrum, ratio)
    bulk = np.array([i for i in range(prob.shape[0]) if i not in edge])
    return SkinProfile(prob, edge, bulk)

