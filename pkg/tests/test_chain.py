import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rydssh.chain import (build_chain, chain_from_config, check_chiral, chiral_operator,
                          edge_states, eigensolve, refine_edge_pair, similarity_transform,
                          skin_profile)
from rydssh.dissipation import CellCouplings, NhCouplings
from rydssh.errors import ChiralSymmetryError, DomainError
from rydssh.numerics import biorthonormality_error, eig_pair, reconstruction_error

positive = st.floats(0.05, 2.0)


def test_single_cell_matrix():
    H = build_chain(NhCouplings(1.0, 2.0, 3.0, 4.0), 1).matrix
    assert np.array_equal(H, [[0, 1], [2, 0]])


def test_two_cell_layout_and_seam():
    nh = NhCouplings(1.0, 2.0, 3.0, 4.0)
    obc = build_chain(nh, 2, "OBC").matrix
    pbc = build_chain(nh, 2, "PBC").matrix
    assert obc[1, 2] == 3.0 and obc[2, 1] == 4.0
    assert obc[3, 0] == 0 and obc[0, 3] == 0
    assert pbc[3, 0] == 3.0 and pbc[0, 3] == 4.0


def test_bad_boundary_and_sizes():
    nh = NhCouplings(1.0, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        build_chain(nh, 3, "ring")
    with pytest.raises(DomainError):
        build_chain(nh, 0)
    with pytest.raises(DomainError):
        build_chain(nh, 1, "PBC")
    with pytest.raises(DomainError):
        build_chain(CellCouplings.uniform(nh, 3, periodic=True), boundary="OBC")


@given(positive, positive, st.integers(1, 12))
def test_reciprocal_couplings_give_hermitian_matrix(j, g, n):
    H = build_chain(NhCouplings(j, j, g, g), n).matrix
    assert np.array_equal(H, H.conj().T)


@given(positive, positive, positive, positive, st.integers(2, 15), st.sampled_from(["OBC", "PBC"]))
def test_chiral_symmetry_and_pairing(jl, jr, gl, gr, n, boundary):
    H = build_chain(NhCouplings(jl, jr, gl, gr), n, boundary).matrix
    s = chiral_operator(H.shape[0])
    assert np.abs(s[:, None] * H * s[None, :] + H).max() == 0.0
    w = np.linalg.eigvals(H)
    scale = max(1.0, np.abs(w).max())
    for E in w:
        assert np.abs(w + E).min() < 1e-6 * scale


def test_check_chiral_rejects_onsite_terms():
    H = build_chain(NhCouplings(1.0, 1.0, 1.0, 1.0), 3).matrix.copy()
    H[0, 0] = 0.1
    with pytest.raises(ChiralSymmetryError):
        check_chiral(H)


@given(positive, positive, positive, positive, st.integers(2, 12))
def test_similarity_transform_hermitises_open_chain(jl, jr, gl, gr, n):
    nh = NhCouplings(jl, jr, gl, gr)
    chain = build_chain(nh, n)
    S = similarity_transform(nh, n)
    Hh = S.apply(chain)
    assert np.abs(Hh - Hh.conj().T).max() < 1e-9 * np.abs(Hh).max()
    w_nh = np.sort(np.linalg.eigvals(chain.matrix).real)
    w_h = np.linalg.eigvalsh(Hh)
    assert np.abs(w_nh - w_h).max() < 1e-6 * max(1.0, np.abs(w_h).max())


def test_similarity_identity_for_reciprocal_chain():
    S = similarity_transform(NhCouplings(0.3, 0.3, 0.7, 0.7), 5)
    assert np.allclose(S.diagonal, 1.0)
    assert S.localization_length == np.inf


def test_similarity_with_phases_warns():
    with pytest.warns(RuntimeWarning):
        similarity_transform(NhCouplings(1j, 1.0, 1.0, 1.0), 3)


def test_clean_similarity_spectrum(clean_chain, nh):
    S = similarity_transform(CellCouplings.uniform(nh, clean_chain.n_cells))
    Hh = S.apply(clean_chain)
    a = np.sort(np.linalg.eigvalsh((Hh + Hh.conj().T) / 2))
    b = np.sort(eigensolve(clean_chain).eigenvalues.real)
    assert np.abs(a - b).max() < 1e-8


def test_pipeline_matches_uniform_chain(cfg, clean_chain):
    chain = chain_from_config(cfg, "OBC")
    assert np.abs(chain.matrix - clean_chain.matrix).max() < 1e-9 * np.abs(clean_chain.matrix).max()


def test_skin_effect_is_one_sided():
    nh = NhCouplings(0.3, 0.1, 0.3, 0.1)
    spec = eigensolve(build_chain(nh, 20))
    prof = skin_profile(spec).cell_profile(np.arange(len(spec)))
    # J_L > J_R piles the bulk weight onto the first cell
    assert prof[0] > 100 * prof[-1]
    mirrored = eigensolve(build_chain(nh.swapped(), 20))
    prof_m = skin_profile(mirrored).cell_profile(np.arange(len(mirrored)))
    assert prof_m[-1] > 100 * prof_m[0]


def test_skin_envelope_follows_similarity_ratio():
    nh = NhCouplings(0.12, 0.1, 0.24, 0.2)
    n = 20
    spec = eigensolve(build_chain(nh, n))
    S = similarity_transform(nh, n)
    prof = skin_profile(spec).cell_profile()
    envelope = np.abs(S.l1 * S.l2) ** (-2 * np.arange(n))
    envelope *= prof.sum() / envelope.sum()
    ratio = prof[2:-2] / envelope[2:-2]
    assert ratio.min() > 1 / 3 and ratio.max() < 3


def test_edge_states_in_topological_phase(clean_chain):
    spec = eigensolve(clean_chain)
    edge = edge_states(spec)
    assert len(edge) == 2
    E = np.abs(spec.eigenvalues)
    bulk = np.delete(E, edge)
    assert E[list(edge)].max() < 1e-6 < bulk.min()


def test_no_edge_states_in_trivial_phase():
    spec = eigensolve(build_chain(NhCouplings(0.5, 0.52, 0.15, 0.14), 20))
    assert edge_states(spec) == ()


def test_edge_refinement_residual(clean_chain):
    M = clean_chain.matrix
    raw = eig_pair(M)
    ref = refine_edge_pair(M, raw)
    scale = np.linalg.norm(M)
    res = np.linalg.norm(M @ ref.right - ref.right * ref.eigenvalues, axis=0)
    assert res.max() < 1e-12 * scale
    assert reconstruction_error(M, ref) < 1e-9
    assert biorthonormality_error(ref) < 1e-9
    assert np.allclose(np.linalg.norm(ref.right, axis=0), 1.0)
    i, j = edge_states(ref)
    assert ref.eigenvalues[i] == pytest.approx(-ref.eigenvalues[j], abs=1e-18)


def test_refinement_is_a_no_op_without_edge_pair():
    M = build_chain(NhCouplings(0.5, 0.52, 0.15, 0.14), 10).matrix
    raw = eig_pair(M)
    assert refine_edge_pair(M, raw) is raw


def test_periodic_spectrum_is_complex_for_nonreciprocal_chain():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        spec = eigensolve(build_chain(NhCouplings(0.3, 0.1, 0.5, 0.2), 10, "PBC"))
    assert np.abs(spec.eigenvalues.imag).max() > 1e-2
