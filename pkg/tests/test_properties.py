"""Cross-module invariants checked as property tests."""
import json

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from rydssh import cli
from rydssh.chain import build_chain, chain_from_config, eigensolve, similarity_transform
from rydssh.dissipation import NhCouplings, ThreeLevelModel, amplitude_odes, build_liouvillian
from rydssh.io import read_csv
from rydssh.metrics import dipr, dmipr, ipr
from rydssh.microscopic import build_effective_six_atom
from rydssh.numerics import reconstruction_error, unvec, vec

from conftest import random_density

positive = st.floats(0.05, 2.0)


@given(st.floats(0.0, 3.0), st.floats(0.0, 2.0), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25)
def test_three_level_evolution_is_positive_and_trace_preserving(ratio, t, seed):
    model = ThreeLevelModel(ratio * 8.0, 8.0)
    rho0 = random_density(np.random.default_rng(seed), 3)
    rho = unvec(sla.expm(build_liouvillian(model) * t) @ vec(rho0))
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)
    assert np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() >= -1e-9


@given(st.floats(0.0, 20.0))
@settings(max_examples=15)
def test_lossy_amplitude_norm_never_grows(cfg, t_end):
    M = amplitude_odes(build_effective_six_atom(cfg, None), cfg.Gamma, cfg.gamma)
    t = np.linspace(0.0, t_end, 41)
    norms = [np.linalg.norm(sla.expm(M * s)[:, 1]) ** 2 for s in t]
    assert norms[0] == pytest.approx(1.0)
    assert np.all(np.diff(norms) <= 1e-12)


def test_eliminated_decay_is_nearly_isotropic(nh):
    assert nh.diag_decay_a == pytest.approx(nh.diag_decay_b, rel=0.1)


@given(positive, positive, positive, positive, st.integers(2, 12), st.sampled_from(["OBC", "PBC"]))
def test_chain_has_only_nearest_neighbour_entries(jl, jr, gl, gr, n, boundary):
    H = build_chain(NhCouplings(jl, jr, gl, gr), n, boundary).matrix
    L = H.shape[0]
    i, j = np.nonzero(H)
    d = (j - i) % L
    assert set(d) <= {1, L - 1}
    assert np.all(H[np.arange(0, L, 2), np.arange(1, L, 2)] == jl)
    assert np.all(H[np.arange(1, L, 2), np.arange(0, L, 2)] == jr)


@given(positive, positive, positive, positive, st.integers(1, 10))
def test_similarity_diagonal_is_geometric(jl, jr, gl, gr, n):
    S = similarity_transform(NhCouplings(jl, jr, gl, gr), n)
    s = S.diagonal
    assert s[0] == 1.0
    assert np.allclose(s[1::2] / s[0::2], S.l1)
    if n > 1:
        assert np.allclose(s[2::2] / s[1:-1:2], S.l2)


@given(st.lists(st.floats(0.0, 5.0), min_size=2, max_size=40).filter(lambda v: sum(v) > 1e-3),
       st.floats(-1.0, 1.0))
def test_dipr_bounded_by_ipr(v, delta):
    v = np.array(v)
    assert abs(dipr(v, delta)) == pytest.approx(ipr(v))
    assert 1 / v.size - 1e-12 <= ipr(v) <= 1 + 1e-12


@given(st.integers(0, 10_000), st.integers(2, 20), st.integers(1, 6))
def test_dmipr_bounded_by_largest_ipr(seed, L, k):
    states = np.random.default_rng(seed).normal(size=(L, k))
    assert abs(dmipr(states)) <= max(ipr(states[:, n]) for n in range(k)) + 1e-12


def test_full_scale_reconstruction(cfg, clean_chain):
    for chain in (clean_chain, chain_from_config(cfg, "PBC")):
        assert reconstruction_error(chain.matrix, eigensolve(chain)) <= 1e-7


def test_builders_are_bitwise_deterministic(cfg):
    a = chain_from_config(cfg, "OBC").matrix
    b = chain_from_config(cfg, "OBC").matrix
    assert a.tobytes() == b.tobytes()
    ea, eb = eigensolve(a), eigensolve(b)
    assert ea.eigenvalues.tobytes() == eb.eigenvalues.tobytes()
    assert ea.right.tobytes() == eb.right.tobytes()


def test_every_output_embeds_manifest_hash(tmp_path):
    out = tmp_path / "run"
    assert cli.main(["spectrum", "--out", str(out), "--boundary", "pbc"]) == 0
    man = json.loads((out / "manifest.json").read_text())
    for name in man["outputs"]:
        path = out / name
        if name.endswith(".csv"):
            assert read_csv(path)[0]["manifest"] == man["manifest"]
        else:
            assert json.loads(path.read_text())["manifest"] == man["manifest"]
    assert set(man["outputs"]) == {"spectrum.csv", "states.csv", "metrics.json"}
