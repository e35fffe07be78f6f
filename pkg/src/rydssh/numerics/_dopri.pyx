# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Dormand-Prince 5(4) stepper for dy/dt = sum_m exp(i w_m t) G_m y.

Each G_m is stored in CSR form; all terms share one concatenated data/indices
buffer and a flattened (n_terms, dim + 1) indptr table with global offsets.
The step-control logic mirrors ``_dopri_py`` exactly.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, sin, fabs, pow, fmax, fmin

cnp.import_array()

ctypedef double complex cplx

cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0, B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0, E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0
cdef double C2 = 0.2, C3 = 0.3, C4 = 0.8, C5 = 8.0 / 9.0


cdef inline double cabs2(cplx z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef void rhs(double t, const cplx[::1] y, cplx[::1] out,
              const double[::1] omegas, const cplx[::1] data,
              const int[::1] indices, const int[::1] indptr,
              Py_ssize_t dim, cplx[::1] coef) noexcept nogil:
    cdef Py_ssize_t m, r, p, base
    cdef Py_ssize_t nterms = omegas.shape[0]
    cdef cplx acc, c
    for m in range(nterms):
        if omegas[m] == 0.0:
            coef[m] = 1.0
        else:
            coef[m] = cos(omegas[m] * t) + 1j * sin(omegas[m] * t)
    for r in range(dim):
        out[r] = 0.0
    for m in range(nterms):
        c = coef[m]
        base = m * (dim + 1)
        for r in range(dim):
            acc = 0.0
            for p in range(indptr[base + r], indptr[base + r + 1]):
                acc = acc + data[p] * y[indices[p]]
            out[r] = out[r] + c * acc


def dopri5(const double[::1] omegas, const cplx[::1] data, const int[::1] indices,
           const int[::1] indptr, Py_ssize_t dim, y0, double t0,
           const double[::1] t_eval, double rtol, double atol, double max_step,
           double h0, long max_steps):
    """Integrate and return (states[n_eval, dim], stats dict)."""
    cdef Py_ssize_t n_eval = t_eval.shape[0]
    cdef Py_ssize_t i, iout = 0
    cdef cnp.ndarray[cplx, ndim=2] out_arr = np.zeros((n_eval, dim), dtype=np.complex128)
    cdef cplx[:, ::1] out = out_arr
    cdef cplx[::1] y = np.array(y0, dtype=np.complex128, copy=True)
    cdef cplx[::1] ynew = np.empty(dim, dtype=np.complex128)
    cdef cplx[::1] ytmp = np.empty(dim, dtype=np.complex128)
    cdef cplx[::1] k1 = np.empty(dim, dtype=np.complex128)
    cdef cplx[::1] k2 = np.empty(dim, dtype=np.complex128)
    cdef cplx[::1] k3 = np.empty(dim, dtype=np.complex128)
    cdef cplx[::1] k4 = np.empty(dim, dtype=np.complex128)
    cdef cplx[::1] k5 = np.empty(dim, dtype=np.complex128)
    cdef cplx[::1] k6 = np.empty(dim, dtype=np.complex128)
    cdef cplx[::1] k7 = np.empty(dim, dtype=np.complex128)
    cdef cplx[::1] coef = np.empty(omegas.shape[0], dtype=np.complex128)
    cdef double t = t0, h = h0, h_try, target, err, sc, fac, ynorm, ynewnorm
    cdef double eps = 2.220446049250313e-16
    cdef long naccept = 0, nreject = 0, nfev = 0
    cdef int status = 0
    cdef bint clipped, last_rejected = False
    cdef cplx e

    with nogil:
        # outputs requested at t0
        while iout < n_eval and t_eval[iout] <= t:
            for i in range(dim):
                out[iout, i] = y[i]
            iout += 1
        rhs(t, y, k1, omegas, data, indices, indptr, dim, coef)
        nfev += 1
        while iout < n_eval:
            target = t_eval[iout]
            h_try = fmin(h, max_step)
            clipped = False
            if t + h_try >= target - 1e-13 * fmax(fabs(target), 1.0):
                h_try = target - t
                clipped = True
            if h_try < 10.0 * eps * fmax(fabs(t), 1.0):
                status = 1
                break
            if naccept + nreject >= max_steps:
                status = 2
                break
            for i in range(dim):
                ytmp[i] = y[i] + h_try * A21 * k1[i]
            rhs(t + C2 * h_try, ytmp, k2, omegas, data, indices, indptr, dim, coef)
            for i in range(dim):
                ytmp[i] = y[i] + h_try * (A31 * k1[i] + A32 * k2[i])
            rhs(t + C3 * h_try, ytmp, k3, omegas, data, indices, indptr, dim, coef)
            for i in range(dim):
                ytmp[i] = y[i] + h_try * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            rhs(t + C4 * h_try, ytmp, k4, omegas, data, indices, indptr, dim, coef)
            for i in range(dim):
                ytmp[i] = y[i] + h_try * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            rhs(t + C5 * h_try, ytmp, k5, omegas, data, indices, indptr, dim, coef)
            for i in range(dim):
                ytmp[i] = y[i] + h_try * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
            rhs(t + h_try, ytmp, k6, omegas, data, indices, indptr, dim, coef)
            for i in range(dim):
                ynew[i] = y[i] + h_try * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
            rhs(t + h_try, ynew, k7, omegas, data, indices, indptr, dim, coef)
            nfev += 6
            err = 0.0
            for i in range(dim):
                e = h_try * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
                ynorm = sqrt(cabs2(y[i]))
                ynewnorm = sqrt(cabs2(ynew[i]))
                sc = atol + rtol * fmax(ynorm, ynewnorm)
                err += cabs2(e) / (sc * sc)
            err = sqrt(err / dim)
            if err <= 1.0:
                if err == 0.0:
                    fac = 5.0
                else:
                    fac = fmin(5.0, fmax(0.2, 0.9 * pow(err, -0.2)))
                if last_rejected:
                    fac = fmin(fac, 1.0)
                t = t + h_try
                if clipped:
                    t = target
                    h = fmax(h, h_try * fac)
                else:
                    h = h_try * fac
                for i in range(dim):
                    y[i] = ynew[i]
                    k1[i] = k7[i]
                naccept += 1
                last_rejected = False
                while iout < n_eval and t_eval[iout] <= t:
                    for i in range(dim):
                        out[iout, i] = y[i]
                    iout += 1
            else:
                fac = fmax(0.2, 0.9 * pow(err, -0.2))
                h = h_try * fac
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
    return out_arr, stats
