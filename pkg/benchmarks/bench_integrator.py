"""Compiled versus numpy Dormand-Prince kernel on the driven six-atom segment.

Usage::

    python benchmarks/bench_integrator.py [--t-end 0.3] [--repeat 3]

Both kernels integrate the same 64-dimensional time-dependent Schrodinger
equation over ``[0, t_end]`` us; the report lists the best wall time of each,
the speed-up and the largest difference between the final states.
"""
import argparse
import time

import numpy as np

from rydssh.config import default_config
from rydssh.microscopic import DIM, full_contract, full_hamiltonian_terms
from rydssh.numerics import FourierGenerator
from rydssh.numerics import _dopri_py
from rydssh.numerics.integrate import _initial_step

try:
    from rydssh.numerics import _dopri as _ext
except ImportError:
    _ext = None


def _problem(t_end, n_eval):
    cfg = default_config()
    omegas, terms = full_hamiltonian_terms(cfg)
    gen = FourierGenerator(omegas, [-1j * T for T in terms])
    contract = full_contract(cfg)
    y0 = np.zeros(DIM, np.complex128)
    y0[1 << 1] = 1.0
    t_eval = np.linspace(0.0, t_end, n_eval)
    h0 = _initial_step(gen, 0.0, y0, t_end, contract.rtol, contract.atol, contract.max_step)
    om, data, indices, indptr = gen.packed
    return (om, data, indices, indptr, DIM, y0, 0.0, t_eval, contract.rtol, contract.atol,
            contract.max_step, h0, int(contract.max_steps))


def _best(fn, args, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=0.3, help="integration window in us")
    ap.add_argument("--points", type=int, default=151)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    problem = _problem(args.t_end, args.points)
    t_py, (y_py, st_py) = _best(_dopri_py.dopri5, problem, args.repeat)
    print(f"python  : {t_py:8.3f} s  steps={st_py['naccept']} rejects={st_py['nreject']}")
    if _ext is None:
        print("cython  : extension not built")
        return 0
    t_cy, (y_cy, st_cy) = _best(_ext.dopri5, problem, args.repeat)
    print(f"cython  : {t_cy:8.3f} s  steps={st_cy['naccept']} rejects={st_cy['nreject']}")
    print(f"speed-up: {t_py / t_cy:8.1f}x")
    print(f"max |y_cython - y_python| = {np.abs(y_cy - y_py).max():.3e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
