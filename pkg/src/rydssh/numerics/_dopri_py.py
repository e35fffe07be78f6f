"""Pure numpy Dormand-Prince 5(4) stepper, fallback for the compiled kernel.

Same calling convention and step-control logic as ``_dopri.pyx``; the CSR
terms are densified once into a (n_terms, dim, dim) stack.
"""
import numpy as np

_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_C = (0.0, 0.2, 0.3, 0.8, 8 / 9, 1.0)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
_EPS = np.finfo(float).eps


def _densify(data, indices, indptr, n_terms, dim):
    stack = np.zeros((n_terms, dim, dim), dtype=np.complex128)
    for m in range(n_terms):
        ptr = indptr[m * (dim + 1):(m + 1) * (dim + 1)]
        for r in range(dim):
            sl = slice(ptr[r], ptr[r + 1])
            stack[m, r, indices[sl]] += data[sl]
    return stack


def dopri5(omegas, data, indices, indptr, dim, y0, t0, t_eval, rtol, atol,
           max_step, h0, max_steps):
    """Integrate and return (states[n_eval, dim], stats dict)."""
    omegas = np.asarray(omegas, dtype=float)
    n_terms = omegas.size
    flat = _densify(data, indices, indptr, n_terms, dim).reshape(n_terms, dim * dim)
    static = omegas == 0.0

    def rhs(t, y):
        coef = np.where(static, 1.0 + 0j, np.exp(1j * omegas * t))
        return (coef @ flat).reshape(dim, dim) @ y

    t_eval = np.asarray(t_eval, dtype=float)
    n_eval = t_eval.size
    out = np.zeros((n_eval, dim), dtype=np.complex128)
    y = np.array(y0, dtype=np.complex128, copy=True)
    t, h = float(t0), float(h0)
    naccept = nreject = 0
    status = 0
    last_rejected = False
    iout = 0
    while iout < n_eval and t_eval[iout] <= t:
        out[iout] = y
        iout += 1
    k = np.empty((7, dim), dtype=np.complex128)
    k[0] = rhs(t, y)
    nfev = 1
    while iout < n_eval:
        target = t_eval[iout]
        h_try = min(h, max_step)
        clipped = False
        if t + h_try >= target - 1e-13 * max(abs(target), 1.0):
            h_try = target - t
            clipped = True
        if h_try < 10.0 * _EPS * max(abs(t), 1.0):
            status = 1
            break
        if naccept + nreject >= max_steps:
            status = 2
            break
        for s in range(1, 6):
            ytmp = y + h_try * (np.asarray(_A[s]) @ k[:s])
            k[s] = rhs(t + _C[s] * h_try, ytmp)
        ynew = y + h_try * (_B @ k[:6])
        k[6] = rhs(t + h_try, ynew)
        nfev += 6
        e = h_try * (_E @ k)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        err = np.sqrt(np.mean(np.abs(e / sc) ** 2))
        if err <= 1.0:
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            if last_rejected:
                fac = min(fac, 1.0)
            t = t + h_try
            if clipped:
                t = target
                h = max(h, h_try * fac)
            else:
                h = h_try * fac
            y = ynew
            k[0] = k[6]
            naccept += 1
            last_rejected = False
            while iout < n_eval and t_eval[iout] <= t:
                out[iout] = y
                iout += 1
        else:
            h = h_try * max(0.2, 0.9 * err ** -0.2)
            nreject += 1
            last_rejected = True

    stats = {
        "status": status,
        "t_last": t,
        "h_last": h,
        "naccept": naccept,
        "nreject": nreject,
        "nfev": nfev,
        "n_out": iout,
    }
    return out, stats
