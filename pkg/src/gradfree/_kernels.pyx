# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the loops in ``_kernels_py``; identical signatures."""
import numpy as np
from libc.math cimport sqrt, fabs, isfinite

cdef double DIVERGENCE_LIMIT = 1e12


cdef inline double _half_quad(const double[::1] y, const double[:, ::1] A,
                              const double[::1] a_diag, bint is_diag) noexcept nogil:
    cdef Py_ssize_t d = y.shape[0]
    cdef Py_ssize_t i, j
    cdef double s = 0.0, row
    if is_diag:
        for i in range(d):
            s += y[i] * y[i] * a_diag[i]
    else:
        for i in range(d):
            row = 0.0
            for j in range(d):
                row += A[i, j] * y[j]
            s += y[i] * row
    return 0.5 * s


cdef inline void _half_quad_pair(const double[::1] u, const double[::1] v,
                                 const double[:, ::1] A, double* qu, double* qv) noexcept nogil:
    # Both forms in one sweep over the upper triangle of the symmetric A.
    cdef Py_ssize_t d = u.shape[0]
    cdef Py_ssize_t i, j
    cdef double su = 0.0, sv = 0.0, ru, rv, a
    for i in range(d):
        ru = 0.0
        rv = 0.0
        for j in range(i + 1, d):
            a = A[i, j]
            ru += a * u[j]
            rv += a * v[j]
        su += u[i] * (0.5 * A[i, i] * u[i] + ru)
        sv += v[i] * (0.5 * A[i, i] * v[i] + rv)
    qu[0] = su
    qv[0] = sv


def half_quad_rows(Y, A, bint is_diag):
    cdef const double[:, ::1] Yv = np.ascontiguousarray(Y, dtype=float)
    A = np.ascontiguousarray(A, dtype=float)
    cdef const double[:, ::1] Am
    cdef const double[::1] ad
    if is_diag:
        ad = A
        Am = np.zeros((1, 1))
    else:
        Am = A
        ad = np.zeros(1)
    cdef Py_ssize_t n = Yv.shape[0], i
    out = np.empty(n)
    cdef double[:] ov = out
    with nogil:
        for i in range(n):
            ov[i] = _half_quad(Yv[i], Am, ad, is_diag)
    return out


def zogd_quadratic_chunk(double[:, :] X, x_star, A, bint is_diag,
                         const double[:, :, :] E, const double[:, :, :] XI,
                         const double[:] gammas, const double[:] taus,
                         double[:, :] dist_out, double[:, :] gnorm_out,
                         path_out=None):
    cdef const double[::1] xs = np.ascontiguousarray(x_star, dtype=float)
    A = np.ascontiguousarray(A, dtype=float)
    cdef const double[:, ::1] Am
    cdef const double[::1] ad
    if is_diag:
        ad = A
        Am = np.zeros((1, 1))
    else:
        Am = A
        ad = np.zeros(1)
    cdef bint record = path_out is not None
    cdef double[:, :, :] pv
    if record:
        pv = path_out
    else:
        pv = np.zeros((1, 1, 1))
    cdef Py_ssize_t R = X.shape[0], d = X.shape[1], steps = gammas.shape[0]
    cdef Py_ssize_t k, rep, i
    cdef double[::1] yp = np.empty(d)
    cdef double[::1] ym = np.empty(d)
    cdef double tau, fp, fm, np2, nm2, coef, ee, dist, xnorm, ri, qp, qm
    cdef Py_ssize_t done = steps
    with nogil:
        for k in range(steps):
            tau = taus[k]
            for rep in range(R):
                np2 = 0.0
                nm2 = 0.0
                ee = 0.0
                for i in range(d):
                    ri = X[rep, i] - xs[i]
                    yp[i] = ri + tau * E[rep, k, i]
                    ym[i] = ri - tau * E[rep, k, i]
                    np2 += yp[i] * yp[i]
                    nm2 += ym[i] * ym[i]
                    ee += E[rep, k, i] * E[rep, k, i]
                if is_diag:
                    qp = _half_quad(yp, Am, ad, True)
                    qm = _half_quad(ym, Am, ad, True)
                else:
                    _half_quad_pair(yp, ym, Am, &qp, &qm)
                fp = qp + XI[rep, k, 0] * sqrt(np2)
                fm = qm + XI[rep, k, 1] * sqrt(nm2)
                coef = d / (2.0 * tau) * (fp - fm)
                dist = 0.0
                xnorm = 0.0
                for i in range(d):
                    X[rep, i] -= gammas[k] * coef * E[rep, k, i]
                    ri = X[rep, i] - xs[i]
                    dist += ri * ri
                    xnorm += X[rep, i] * X[rep, i]
                    if record:
                        pv[rep, k, i] = X[rep, i]
                gnorm_out[rep, k] = fabs(coef) * sqrt(ee)
                dist_out[rep, k] = dist
                xnorm = sqrt(xnorm)
                if not isfinite(xnorm) or xnorm > DIVERGENCE_LIMIT:
                    done = k
            if done < steps:
                break
    return done
