# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled mixture-likelihood kernels.

Same contract as ``_kernels_py`` (the NumPy fallback): evaluate the data
term of the registration objective and its gradient with explicit C loops.
The rotation matrix and its angle derivatives are expanded in closed form
so a full theta -> (E, grad) evaluation stays allocation-light.
"""

from libc.math cimport cos, sin, exp, log, INFINITY
from libc.stdlib cimport malloc, free

import numpy as np


cdef inline void _rotation_and_derivs(const double* ang, Py_ssize_t d,
                                      double* R, double* DR) nogil:
    """Fill R (d*d, row-major) and DR (n_ang*d*d) for R = Rz(c) Ry(b) Rx(a)."""
    cdef double ca, sa, cb, sb, cc, sc
    if d == 2:
        ca = cos(ang[0]); sa = sin(ang[0])
        R[0] = ca; R[1] = -sa
        R[2] = sa; R[3] = ca
        DR[0] = -sa; DR[1] = -ca
        DR[2] = ca;  DR[3] = -sa
        return
    ca = cos(ang[0]); sa = sin(ang[0])
    cb = cos(ang[1]); sb = sin(ang[1])
    cc = cos(ang[2]); sc = sin(ang[2])
    R[0] = cc * cb; R[1] = cc * sb * sa - sc * ca; R[2] = cc * sb * ca + sc * sa
    R[3] = sc * cb; R[4] = sc * sb * sa + cc * ca; R[5] = sc * sb * ca - cc * sa
    R[6] = -sb;     R[7] = cb * sa;                R[8] = cb * ca
    # dR/dphi_x
    DR[0] = 0.0; DR[1] = cc * sb * ca + sc * sa;  DR[2] = -cc * sb * sa + sc * ca
    DR[3] = 0.0; DR[4] = sc * sb * ca - cc * sa;  DR[5] = -sc * sb * sa - cc * ca
    DR[6] = 0.0; DR[7] = cb * ca;                 DR[8] = -cb * sa
    # dR/dphi_y
    DR[9]  = -cc * sb; DR[10] = cc * cb * sa; DR[11] = cc * cb * ca
    DR[12] = -sc * sb; DR[13] = sc * cb * sa; DR[14] = sc * cb * ca
    DR[15] = -cb;      DR[16] = -sb * sa;     DR[17] = -sb * ca
    # dR/dphi_z
    DR[18] = -sc * cb; DR[19] = -sc * sb * sa - cc * ca; DR[20] = -sc * sb * ca + cc * sa
    DR[21] = cc * cb;  DR[22] = cc * sb * sa - sc * ca;  DR[23] = cc * sb * ca + sc * sa
    DR[24] = 0.0;      DR[25] = 0.0;                     DR[26] = 0.0


cdef inline void _check_shapes(Py_ssize_t p, Py_ssize_t d, Py_ssize_t n_ang,
                               Py_ssize_t n, Py_ssize_t m,
                               Py_ssize_t pi_n, Py_ssize_t pi_m) except *:
    if d != 2 and d != 3:
        raise ValueError(f"dim must be 2 or 3, got {d}")
    if p != n_ang + d:
        raise ValueError(f"expected parameter vector of length {n_ang + d}, got {p}")
    if pi_n != n or pi_m != m:
        raise ValueError(f"log_pi shape ({pi_n}, {pi_m}) does not match "
                         f"N={n}, M={m}")


def mixture_energy(double[::1] theta, double[:, ::1] X, double[:, ::1] Y,
                   double[:, ::1] log_pi, double inv_two_gamma_sq):
    """Data term of the objective (the negative marginal log-likelihood)."""
    cdef Py_ssize_t d = X.shape[0], N = X.shape[1], M = Y.shape[1]
    cdef Py_ssize_t n_ang = 1 if d == 2 else 3
    _check_shapes(theta.shape[0], d, n_ang, N, M, log_pi.shape[0], log_pi.shape[1])
    cdef double R[9]
    cdef double DR[27]
    _rotation_and_derivs(&theta[0], d, R, DR)

    cdef double* tx = <double*> malloc(d * N * sizeof(double))
    cdef double* s = <double*> malloc(N * sizeof(double))
    if tx == NULL or s == NULL:
        free(tx); free(s)
        raise MemoryError()
    cdef Py_ssize_t i, j, a, b
    cdef double acc, r, d2, sv, mx, se, total
    try:
        with nogil:
            for i in range(N):
                for a in range(d):
                    acc = theta[n_ang + a]
                    for b in range(d):
                        acc += R[a * d + b] * X[b, i]
                    tx[a * N + i] = acc
            total = 0.0
            for j in range(M):
                mx = -INFINITY
                for i in range(N):
                    d2 = 0.0
                    for a in range(d):
                        r = Y[a, j] - tx[a * N + i]
                        d2 += r * r
                    sv = log_pi[i, j] - inv_two_gamma_sq * d2
                    s[i] = sv
                    if sv > mx:
                        mx = sv
                if mx == -INFINITY:  # dead column; model layer validates this away
                    total = -INFINITY
                    break
                se = 0.0
                for i in range(N):
                    se += exp(s[i] - mx)
                total += mx + log(se)
    finally:
        free(tx)
        free(s)
    return -total


def mixture_energy_grad(double[::1] theta, double[:, ::1] X, double[:, ::1] Y,
                        double[:, ::1] log_pi, double inv_two_gamma_sq):
    """Data term and its gradient, ordered (angles..., translation...)."""
    cdef Py_ssize_t d = X.shape[0], N = X.shape[1], M = Y.shape[1]
    cdef Py_ssize_t n_ang = 1 if d == 2 else 3
    _check_shapes(theta.shape[0], d, n_ang, N, M, log_pi.shape[0], log_pi.shape[1])
    cdef double R[9]
    cdef double DR[27]
    _rotation_and_derivs(&theta[0], d, R, DR)

    grad = np.zeros(n_ang + d)
    cdef double[::1] g = grad
    cdef double* tx = <double*> malloc(d * N * sizeof(double))
    cdef double* gx = <double*> malloc(n_ang * d * N * sizeof(double))
    cdef double* s = <double*> malloc(N * sizeof(double))
    if tx == NULL or gx == NULL or s == NULL:
        free(tx); free(gx); free(s)
        raise MemoryError()
    cdef Py_ssize_t i, j, a, b, k
    cdef double acc, d2, sv, mx, se, w, dot, total, inv_gamma_sq
    cdef double r[3]
    cdef double gt[3]
    cdef double ga[3]
    try:
        with nogil:
            for i in range(N):
                for a in range(d):
                    acc = theta[n_ang + a]
                    for b in range(d):
                        acc += R[a * d + b] * X[b, i]
                    tx[a * N + i] = acc
            for k in range(n_ang):
                for i in range(N):
                    for a in range(d):
                        acc = 0.0
                        for b in range(d):
                            acc += DR[(k * d + a) * d + b] * X[b, i]
                        gx[(k * d + a) * N + i] = acc
            total = 0.0
            inv_gamma_sq = 2.0 * inv_two_gamma_sq
            for j in range(M):
                mx = -INFINITY
                for i in range(N):
                    d2 = 0.0
                    for a in range(d):
                        w = Y[a, j] - tx[a * N + i]
                        d2 += w * w
                    sv = log_pi[i, j] - inv_two_gamma_sq * d2
                    s[i] = sv
                    if sv > mx:
                        mx = sv
                if mx == -INFINITY:
                    total = -INFINITY
                    break
                se = 0.0
                for a in range(d):
                    gt[a] = 0.0
                for k in range(n_ang):
                    ga[k] = 0.0
                for i in range(N):
                    w = exp(s[i] - mx)
                    if w == 0.0:
                        continue
                    se += w
                    for a in range(d):
                        r[a] = Y[a, j] - tx[a * N + i]
                        gt[a] += w * r[a]
                    for k in range(n_ang):
                        dot = 0.0
                        for a in range(d):
                            dot += r[a] * gx[(k * d + a) * N + i]
                        ga[k] += w * dot
                total += mx + log(se)
                for k in range(n_ang):
                    g[k] -= inv_gamma_sq * ga[k] / se
                for a in range(d):
                    g[n_ang + a] -= inv_gamma_sq * gt[a] / se
    finally:
        free(tx)
        free(gx)
        free(s)
    return -total, grad
