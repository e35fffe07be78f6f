import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rydssh.config import ColorDrive
from rydssh.errors import DomainError
from rydssh.microscopic import (DIM, SEGMENT_LABELS, build_effective_six_atom,
                                build_full_hamiltonian, evolve, full_contract,
                                full_hamiltonian_terms, marginal_populations, run_effective,
                                run_full)
from rydssh.trajectory import PopulationTrajectory, compare_trajectories, first_maximum_times


@given(st.floats(0.0, 10.0))
def test_full_hamiltonian_is_hermitian(cfg, t):
    H = build_full_hamiltonian(t, cfg)
    assert np.abs(H - H.conj().T).max() < 1e-9 * np.abs(H).max()


def test_undriven_hamiltonian_is_diagonal(cfg):
    drives = {k: ColorDrive(0.0, d.detuning) for k, d in cfg.drives.items()}
    H = build_full_hamiltonian(0.37, cfg.replace(drives=drives))
    assert np.count_nonzero(H - np.diag(np.diag(H))) == 0


def test_interaction_energy_of_doubly_excited_state(cfg):
    from rydssh.microscopic import segment_interactions

    omegas, terms = full_hamiltonian_terms(cfg)
    static = terms[list(omegas).index(0.0)]
    V = segment_interactions(cfg)
    assert static[0b11, 0b11] == pytest.approx(V[0, 1])
    assert static[0b1, 0b1] == 0.0


def test_full_dynamics_is_unitary_on_short_window(cfg):
    t = np.linspace(0.0, 0.2, 21)
    omegas, terms = full_hamiltonian_terms(cfg)
    from rydssh.numerics import FourierGenerator, integrate_linear

    psi0 = np.zeros(DIM, complex)
    psi0[2] = 1.0
    gen = FourierGenerator(omegas, [-1j * T for T in terms])
    states = integrate_linear(gen, psi0, t, full_contract(cfg))
    assert np.abs(np.linalg.norm(states, axis=1) - 1.0).max() < 1e-6
    traj = run_full(cfg.replace(t_end_us=0.2, n_points=21))
    assert traj.labels == SEGMENT_LABELS
    assert traj.site("a_n")[0] == pytest.approx(1.0)


@pytest.mark.parametrize("stark", ["exact", "printed", None])
def test_effective_hamiltonian_is_hermitian(cfg, stark):
    H = build_effective_six_atom(cfg, stark)
    assert H.shape == (6, 6)
    assert np.abs(H - H.conj().T).max() < 1e-14
    if stark is None:
        assert np.all(np.diag(H) == 0)


def test_effective_dynamics_conserves_norm(cfg):
    traj = run_effective(cfg.replace(t_end_us=5.0, n_points=101))
    assert np.abs(traj.total() - 1.0).max() < 1e-7


def test_two_level_rabi_oscillation():
    J = 0.8
    H = np.array([[0.0, J], [J, 0.0]])
    t = np.linspace(0.0, 4.0, 81)
    traj = evolve(H, [1.0, 0.0], t, labels=("x", "y"))
    assert np.abs(traj.site("y") - np.sin(J * t) ** 2).max() < 1e-7
    peaks = first_maximum_times(traj, ["y"])
    assert peaks["y"] == pytest.approx(np.pi / (2 * J), abs=t[1])


def test_zero_hamiltonian_keeps_populations():
    psi0 = np.array([0.6, 0.8j, 0.0])
    traj = evolve(np.zeros((3, 3)), psi0, np.linspace(0, 2, 5))
    assert np.allclose(traj.populations, np.abs(psi0) ** 2)


def test_evolve_requires_normalised_state():
    with pytest.raises(DomainError):
        evolve(np.eye(2), [1.0, 1.0], [0.0, 1.0])


def test_marginals_of_product_state():
    psi = np.zeros(DIM)
    psi[0b101] = 1.0
    assert np.array_equal(marginal_populations(psi)[0], [1, 0, 1, 0, 0, 0])


def _triangle_peaks(cfg, sign):
    H = build_effective_six_atom(cfg.with_flux(sign), stark=None)
    tri = [1, 2, 3]  # a_n, b_n, c_n
    traj = evolve(H[np.ix_(tri, tri)], [1.0, 0.0, 0.0], np.linspace(0.0, 40.0, 4001),
                  labels=("a", "b", "c"))
    return first_maximum_times(traj, ["b", "c"])


def test_triangle_circulation_reverses_with_flux(cfg):
    plus, minus = _triangle_peaks(cfg, +1), _triangle_peaks(cfg, -1)
    assert plus["c"] < plus["b"]
    assert minus["b"] < minus["c"]


# ----------------------------------------------------------------------------
# trajectory comparison

def _traj(p, t=None):
    t = np.linspace(0, 1, len(p)) if t is None else t
    return PopulationTrajectory(t, np.asarray(p)[:, None], ("x",))


def test_compare_identical_is_zero():
    a = _traj([0.1, 0.5, 0.9])
    assert compare_trajectories(a, a)["max_abs_deviation"] == 0.0


def test_compare_constant_offset():
    a, b = _traj([0.1, 0.5, 0.9]), _traj([0.2, 0.6, 1.0])
    res = compare_trajectories(a, b)
    assert res["max_abs_deviation"] == pytest.approx(0.1)
    assert res["argmax_site"] == "x"


def test_compare_rejects_grid_mismatch():
    with pytest.raises(DomainError):
        compare_trajectories(_traj([0.0, 1.0]), _traj([0.0, 1.0], t=[0.0, 2.0]))


def test_trajectory_shape_checked():
    with pytest.raises(DomainError):
        PopulationTrajectory([0.0, 1.0], np.zeros((3, 1)), ("x",))


def test_trajectory_csv_roundtrip():
    traj = PopulationTrajectory([0.0, 0.5], [[0.25, 0.75], [0.5, 0.5]], ("x", "y"), ground=[0.0, 0.0])
    text = traj.to_csv(header=["note=1"])
    lines = text.splitlines()
    assert lines[0] == "# note=1"
    assert lines[1] == "time_us,x,y,ground"
    assert np.allclose(np.loadtxt(lines[2:], delimiter=","), [[0, 0.25, 0.75, 0], [0.5, 0.5, 0.5, 0]])
