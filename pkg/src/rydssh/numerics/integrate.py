"""Adaptive integration of linear ODEs du/dt = G(t) u.

Generators with harmonic time dependence are written as a Fourier sum
``G(t) = sum_m exp(i w_m t) G_m`` and handed to the Dormand-Prince kernel
(compiled when available). Arbitrary callables go through scipy.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from ..errors import DomainError, IntegrationError
from . import backend as _backend

__all__ = ["IntegratorContract", "FourierGenerator", "integrate_linear", "DEFAULT_CONTRACT"]


@dataclass(frozen=True)
class IntegratorContract:
    """Tolerances and step limits for adaptive integration.

    Parameters
    ----------
    rtol, atol : float
        Relative and absolute local error tolerances, both > 0.
    max_step : float
        Upper bound on the step size (same time unit as the grid).
    dense_output : bool
        If True the state is returned at every grid point; otherwise only
        the final state is returned and intermediate points do not
        constrain the step sequence.
    max_steps : int
        Hard cap on attempted steps.
    """

    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = np.inf
    dense_output: bool = True
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise DomainError("integrator tolerances must be positive")
        if not self.max_step > 0:
            raise DomainError("max_step must be positive")
        if self.max_steps < 1:
            raise DomainError("max_steps must be >= 1")

    def with_max_step(self, max_step):
        return IntegratorContract(self.rtol, self.atol, max_step, self.dense_output, self.max_steps)


DEFAULT_CONTRACT = IntegratorContract()


class FourierGenerator:
    """Generator G(t) = sum_m exp(i w_m t) G_m with sparse terms.

    Parameters
    ----------
    omegas : sequence of float
        Angular frequencies w_m.
    terms : sequence of (dim, dim) array_like or sparse matrices
    """

    def __init__(self, omegas, terms):
        self.omegas = np.ascontiguousarray(omegas, dtype=float).ravel()
        terms = [sp.csr_matrix(T, dtype=np.complex128) for T in terms]
        if len(terms) != self.omegas.size or not terms:
            raise DomainError("need one term per frequency")
        dim = terms[0].shape[0]
        if any(T.shape != (dim, dim) for T in terms):
            raise DomainError("all generator terms must be square and of equal size")
        self.dim = dim
        self.terms = terms
        for T in terms:
            T.sum_duplicates()
            T.sort_indices()
        offs = np.cumsum([0] + [T.nnz for T in terms])
        self._data = np.ascontiguousarray(np.concatenate([T.data for T in terms]))
        self._indices = np.ascontiguousarray(np.concatenate([T.indices for T in terms]), dtype=np.int32)
        self._indptr = np.ascontiguousarray(
            np.concatenate([T.indptr + o for T, o in zip(terms, offs[:-1])]), dtype=np.int32)

    @classmethod
    def constant(cls, G):
        return cls([0.0], [G])

    def __call__(self, t):
        """Dense matrix at time t."""
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for w, T in zip(self.omegas, self.terms):
            out += (1.0 if w == 0.0 else np.exp(1j * w * t)) * T.toarray()
        return out

    def apply(self, t, y):
        out = np.zeros(self.dim, dtype=np.complex128)
        for w, T in zip(self.omegas, self.terms):
            out += (1.0 if w == 0.0 else np.exp(1j * w * t)) * (T @ y)
        return out

    @property
    def packed(self):
        return self.omegas, self._data, self._indices, self._indptr


def _initial_step(gen, t0, y0, t_end, rtol, atol, max_step):
    # Hairer, Norsett & Wanner, Solving ODEs I, sec. II.4
    f0 = gen.apply(t0, y0)
    sc = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / sc) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step, abs(t_end - t0))
    y1 = y0 + h0 * f0
    f1 = gen.apply(t0 + h0, y1)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, max_step)


def _check_grid(t_grid):
    t_grid = np.ascontiguousarray(t_grid, dtype=float).ravel()
    if t_grid.size == 0:
        raise DomainError("empty time grid")
    if not np.all(np.isfinite(t_grid)):
        raise DomainError("time grid must be finite")
    if t_grid.size > 1 and np.any(np.diff(t_grid) <= 0):
        raise DomainError("time grid must be strictly increasing")
    return t_grid


def integrate_linear(generator, state, t_grid, contract=DEFAULT_CONTRACT, t0=None,
                     return_stats=False):
    """Integrate du/dt = G(t) u and sample the solution.

    Parameters
    ----------
    generator : ndarray, FourierGenerator or callable
        Constant matrix, harmonic Fourier sum, or ``t -> matrix``.
    state : array_like
        Initial vector at ``t0``.
    t_grid : array_like
        Strictly increasing output times.
    contract : IntegratorContract
    t0 : float, optional
        Initial time, defaults to ``t_grid[0]``.

    Returns
    -------
    states : ndarray, shape (len(t_grid), dim) or (1, dim)
        Solution rows; a single row when ``contract.dense_output`` is False.
    stats : dict, optional
        Step counters and the backend used.
    """
    t_grid = _check_grid(t_grid)
    y0 = np.ascontiguousarray(state, dtype=np.complex128).ravel()
    t0 = float(t_grid[0] if t0 is None else t0)
    if t0 > t_grid[0]:
        raise DomainError("t0 must not exceed the first grid time")
    t_eval = t_grid if contract.dense_output else t_grid[-1:]

    if callable(generator) and not isinstance(generator, FourierGenerator):
        states, stats = _integrate_callable(generator, y0, t0, t_eval, contract)
    else:
        if not isinstance(generator, FourierGenerator):
            generator = FourierGenerator.constant(np.asarray(generator))
        if generator.dim != y0.size:
            raise DomainError(f"state has size {y0.size}, generator is {generator.dim}")
        if not np.all(np.isfinite(generator._data)):
            raise DomainError("generator has non-finite entries")
        if t_eval[-1] == t0:
            states = np.tile(y0, (t_eval.size, 1))
            stats = {"status": 0, "naccept": 0, "nreject": 0, "nfev": 0,
                     "t_last": t0, "h_last": 0.0, "n_out": t_eval.size}
        else:
            h0 = _initial_step(generator, t0, y0, t_eval[-1], contract.rtol,
                               contract.atol, contract.max_step)
            states, stats = _backend.dopri5(
                *generator.packed, generator.dim, y0, t0, t_eval,
                contract.rtol, contract.atol, float(min(contract.max_step, 1e300)),
                float(h0), int(contract.max_steps))
            if stats["status"] != 0:
                reason = "step size underflow" if stats["status"] == 1 else "step budget exhausted"
                raise IntegrationError(reason, stats["t_last"], stats["h_last"], stats["naccept"])
        stats["backend"] = _backend.NAME
    if not np.all(np.isfinite(states)):
        raise IntegrationError("non-finite state", float("nan"), float("nan"), stats.get("naccept", 0))
    return (states, stats) if return_stats else states


def _integrate_callable(fn, y0, t0, t_eval, contract):
    def rhs(t, y):
        return np.asarray(fn(t)) @ y

    sol = solve_ivp(rhs, (t0, t_eval[-1]), y0, method="DOP853", t_eval=t_eval,
                    rtol=contract.rtol, atol=contract.atol, max_step=contract.max_step)
    if sol.status != 0:
        raise IntegrationError(sol.message, float(sol.t[-1]) if sol.t.size else t0,
                               float("nan"), 0)
    return sol.y.T.copy(), {"status": 0, "nfev": sol.nfev, "backend": "scipy"}
