import warnings

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from rydssh.dissipation import ThreeLevelModel, build_liouvillian
from rydssh.errors import DegeneracyWarning, DomainError, IntegrationError
from rydssh.numerics import (FourierGenerator, IntegratorContract, backend,
                             biorthonormality_error, eig_pair, integrate_linear,
                             lindblad_rhs, reconstruction_error, unvec, vec,
                             vectorize_superoperator)
from rydssh.numerics import _dopri_py
from rydssh.numerics.integrate import _initial_step

from conftest import random_density


# ----------------------------------------------------------------------------
# integrator

def test_scalar_exponential_oracle():
    t = np.linspace(0.0, 3.0, 31)
    lam = -0.7 + 2.3j
    out = integrate_linear(np.array([[lam]]), [1.0], t, IntegratorContract(rtol=1e-10, atol=1e-12))
    assert np.abs(out[:, 0] - np.exp(lam * t)).max() < 1e-8


def test_three_level_liouvillian_matches_expm():
    model = ThreeLevelModel(omega_p=2 * np.pi * 1.0, Gamma=2 * np.pi * 2.0)
    L = build_liouvillian(model)
    rho0 = np.zeros((3, 3), complex)
    rho0[2, 2] = 1.0
    t_end = 5.0 / model.Gamma
    out = integrate_linear(L, vec(rho0), [0.0, t_end], IntegratorContract(rtol=1e-10, atol=1e-12))
    exact = sla.expm(L * t_end) @ vec(rho0)
    assert np.abs(out[-1] - exact).max() < 1e-7


def test_tolerance_halving_converges():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    M = -1j * (A + A.conj().T) / 2 - 0.1 * np.eye(6)
    y0 = np.eye(6)[0]
    exact = sla.expm(M * 4.0) @ y0
    errs = []
    for rtol in (1e-5, 1e-7, 1e-9):
        out = integrate_linear(M, y0, [0.0, 4.0], IntegratorContract(rtol=rtol, atol=rtol * 1e-2))
        errs.append(np.abs(out[-1] - exact).max())
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-7


def test_fourier_generator_matches_callable():
    A = np.array([[0.0, 1.0], [1.0, 0.0]], complex)
    B = np.array([[1.0, 0.0], [0.0, -1.0]], complex)
    gen = FourierGenerator([0.0, 3.0, -3.0], [-1j * B, -0.5j * A, -0.5j * A])
    t = np.linspace(0.0, 2.0, 11)
    contract = IntegratorContract(rtol=1e-10, atol=1e-12)
    y_fourier = integrate_linear(gen, [1.0, 0.0], t, contract)
    y_scipy = integrate_linear(lambda s: gen(s), [1.0, 0.0], t, contract)
    assert np.abs(y_fourier - y_scipy).max() < 1e-7
    assert np.allclose(gen(0.4), -1j * B - 1j * np.cos(1.2) * A)


def _time_dependent_problem():
    rng = np.random.default_rng(11)
    d = 8
    terms = []
    for _ in range(3):
        A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        terms.append(A)
    H0 = (terms[0] + terms[0].conj().T) / 2
    H1 = terms[1]
    gen = FourierGenerator([0.0, 5.0, -5.0], [-1j * H0, -1j * H1, -1j * H1.conj().T])
    y0 = np.zeros(d, complex)
    y0[0] = 1.0
    t_eval = np.linspace(0.0, 1.0, 21)
    h0 = _initial_step(gen, 0.0, y0, 1.0, 1e-9, 1e-11, np.inf)
    return (*gen.packed, d, y0, 0.0, t_eval, 1e-9, 1e-11, 1e300, h0, 10 ** 7)


@pytest.mark.skipif("cython" not in backend.available(), reason="extension not built")
def test_compiled_kernel_matches_fallback():
    from rydssh.numerics import _dopri

    args = _time_dependent_problem()
    y_py, st_py = _dopri_py.dopri5(*args)
    y_cy, st_cy = _dopri.dopri5(*args)
    assert st_py["naccept"] == st_cy["naccept"]
    assert np.abs(y_py - y_cy).max() < 1e-12


def test_fallback_is_unitary_for_hermitian_drive():
    y, stats = _dopri_py.dopri5(*_time_dependent_problem())
    assert stats["status"] == 0
    assert np.abs(np.linalg.norm(y, axis=1) - 1.0).max() < 1e-7


def test_step_budget_raises_integration_error():
    M = -1j * np.diag([1.0, 50.0])
    with pytest.raises(IntegrationError) as exc:
        integrate_linear(M, [1.0, 1.0], [0.0, 10.0], IntegratorContract(max_steps=3))
    assert exc.value.nsteps <= 3


@pytest.mark.parametrize("grid", [[], [0.0, 1.0, 1.0], [0.0, np.nan]])
def test_bad_time_grid(grid):
    with pytest.raises(DomainError):
        integrate_linear(np.eye(2), [1.0, 0.0], grid)


@pytest.mark.parametrize("kwargs", [{"rtol": 0.0}, {"atol": -1.0}, {"max_step": 0.0}, {"max_steps": 0}])
def test_bad_contract(kwargs):
    with pytest.raises(DomainError):
        IntegratorContract(**kwargs)


def test_dimension_mismatch():
    with pytest.raises(DomainError):
        integrate_linear(np.eye(3), [1.0, 0.0], [0.0, 1.0])


def test_final_only_output():
    out = integrate_linear(-np.eye(1), [1.0], np.linspace(0, 1, 5), IntegratorContract(dense_output=False))
    assert out.shape == (1, 1)
    assert abs(out[0, 0] - np.exp(-1.0)) < 1e-7


# ----------------------------------------------------------------------------
# eigensolver

def test_eig_pair_diagonal():
    spec = eig_pair(np.diag([3.0, 1.0 - 1j, 2.0]))
    assert np.allclose(spec.eigenvalues, [1.0 - 1j, 2.0, 3.0])
    assert np.allclose(np.abs(spec.right), np.abs(np.eye(3)[:, [1, 2, 0]]))
    assert spec.linewidths[0] == pytest.approx(2.0)


@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_eig_pair_two_site_nonreciprocal(jl, jr):
    M = np.array([[0.0, jl], [jr, 0.0]])
    spec = eig_pair(M)
    assert np.allclose(np.sort(spec.eigenvalues.real), [-np.sqrt(jl * jr), np.sqrt(jl * jr)])
    assert reconstruction_error(M, spec) < 1e-12
    assert biorthonormality_error(spec) < 1e-12


@given(st.integers(0, 10_000), st.integers(2, 12))
def test_eig_pair_random_matrix(seed, d):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneracyWarning)
        spec = eig_pair(M)
    assert reconstruction_error(M, spec) < 1e-9
    assert biorthonormality_error(spec) < 1e-9
    assert np.allclose(np.linalg.norm(spec.right, axis=0), 1.0)
    order = np.lexsort((np.round(spec.eigenvalues.imag, 13), np.round(spec.eigenvalues.real, 13)))
    assert np.array_equal(order, np.arange(d))


def test_eig_pair_rejects_nonfinite_and_nonsquare():
    with pytest.raises(DomainError):
        eig_pair(np.ones((2, 3)))
    with pytest.raises(DomainError):
        eig_pair(np.array([[np.nan, 0.0], [0.0, 1.0]]))


# ----------------------------------------------------------------------------
# superoperators

def _random_problem(rng, d):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    H = (A + A.conj().T) / 2
    jumps = [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(2)]
    return H, jumps


@pytest.mark.parametrize("seed", range(5))
def test_superoperator_matches_direct_rhs(seed):
    rng = np.random.default_rng(seed)
    H, jumps = _random_problem(rng, 4)
    rho = random_density(rng, 4)
    sup = vectorize_superoperator(H, jumps)
    assert np.abs(unvec(sup @ vec(rho)) - lindblad_rhs(H, jumps, rho)).max() < 1e-12


@given(st.integers(0, 10_000))
def test_superoperator_annihilates_trace(seed):
    rng = np.random.default_rng(seed)
    H, jumps = _random_problem(rng, 3)
    sup = vectorize_superoperator(H, jumps)
    trace_row = vec(np.eye(3))
    assert np.abs(trace_row @ sup).max() < 1e-12


def test_jumpless_generator_spectrum_is_imaginary():
    rng = np.random.default_rng(0)
    H, _ = _random_problem(rng, 4)
    w = np.linalg.eigvals(vectorize_superoperator(H))
    assert np.abs(w.real).max() < 1e-12


def test_rate_pairs_equal_scaled_operators():
    A = np.array([[0, 1], [0, 0]], complex)
    H = np.diag([0.0, 1.0])
    assert np.allclose(vectorize_superoperator(H, [(A, 4.0)]), vectorize_superoperator(H, [2 * A]))
    with pytest.raises(DomainError):
        vectorize_superoperator(H, [(A, -1.0)])


def test_unvec_rejects_non_square_length():
    with pytest.raises(DomainError):
        unvec(np.zeros(5))
