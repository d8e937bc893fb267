# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot inner loops (fused momentum update, landscape
evaluation). Mirrors ``_kernels_py``; selected by ``adine.backend`` at import."""

from libc.math cimport sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "compiled"


def axpy(double a, const double[::1] x, const double[::1] y):
    cdef Py_ssize_t i, n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        out[i] = a * x[i] + y[i]
    return out_arr


def nrm2(const double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double s = 0.0
    for i in range(n):
        s += x[i] * x[i]
    return sqrt(s)


def momentum_apply(const double[::1] theta, const double[::1] v, const double[::1] g,
                   double m, double eta):
    cdef Py_ssize_t i, n = theta.shape[0]
    theta_arr = np.empty(n, dtype=np.float64)
    v_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] theta_new = theta_arr
    cdef double[::1] v_new = v_arr
    cdef double vi
    for i in range(n):
        vi = m * v[i] - eta * g[i]
        v_new[i] = vi
        theta_new[i] = theta[i] + vi
    return theta_arr, v_arr


def quad_f_grad(const double[::1] lam, const double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    grad_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] grad = grad_arr
    cdef double f = 0.0
    for i in range(n):
        f += lam[i] * (x[i] * x[i])
        grad[i] = 2.0 * lam[i] * x[i]
    return f, grad_arr


def cubic_f_grad(const double[::1] coef, const double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    grad_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] grad = grad_arr
    cdef double f = 0.0
    cdef double xx
    for i in range(n):
        xx = x[i] * x[i]
        f += coef[i] * (xx * x[i])
        grad[i] = 3.0 * coef[i] * xx
    return f, grad_arr
