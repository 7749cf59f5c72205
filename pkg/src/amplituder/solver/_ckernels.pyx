# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled inner loops for the exponential integrator.

Arrays are flattened with the component axis first: fields are ``(c, n)``,
per-mode matrices ``(m, m, n)``. Every routine writes into ``out`` and
returns it.
"""
import numpy as np

ctypedef double complex cplx


def etd_stage_diag(const cplx[:, ::1] E, const cplx[:, ::1] P1, const cplx[:, ::1] u,
                   const cplx[:, ::1] N, double eps, cplx[:, ::1] out):
    cdef Py_ssize_t c, i
    cdef Py_ssize_t nc = u.shape[0], n = u.shape[1]
    with nogil:
        for c in range(nc):
            for i in range(n):
                out[c, i] = E[c, i] * u[c, i] + eps * P1[c, i] * N[c, i]
    return np.asarray(out)


def etd_correct_diag(const cplx[:, ::1] a, const cplx[:, ::1] P2, const cplx[:, ::1] Na,
                     const cplx[:, ::1] Nu, double eps, cplx[:, ::1] out):
    cdef Py_ssize_t c, i
    cdef Py_ssize_t nc = a.shape[0], n = a.shape[1]
    with nogil:
        for c in range(nc):
            for i in range(n):
                out[c, i] = a[c, i] + eps * P2[c, i] * (Na[c, i] - Nu[c, i])
    return np.asarray(out)


def etd_stage(const cplx[:, :, ::1] E, const cplx[:, :, ::1] P1, const cplx[:, ::1] u,
              const cplx[:, ::1] N, double eps, cplx[:, ::1] out):
    cdef Py_ssize_t r, c, i
    cdef Py_ssize_t m = u.shape[0], n = u.shape[1]
    cdef cplx acc
    with nogil:
        for i in range(n):
            for r in range(m):
                acc = 0
                for c in range(m):
                    acc = acc + E[r, c, i] * u[c, i] + eps * P1[r, c, i] * N[c, i]
                out[r, i] = acc
    return np.asarray(out)


def etd_correct(const cplx[:, ::1] a, const cplx[:, :, ::1] P2, const cplx[:, ::1] Na,
                const cplx[:, ::1] Nu, double eps, cplx[:, ::1] out):
    cdef Py_ssize_t r, c, i
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef cplx acc
    with nogil:
        for i in range(n):
            for r in range(m):
                acc = a[r, i]
                for c in range(m):
                    acc = acc + eps * P2[r, c, i] * (Na[c, i] - Nu[c, i])
                out[r, i] = acc
    return np.asarray(out)


def poly_eval(const long long[:, ::1] exps, const cplx[:, ::1] coeffs, const cplx[:, ::1] u,
              cplx[:, ::1] out):
    """``out[c] = sum_t coeffs[t, c] * prod_v u[v]**exps[t, v]`` pointwise."""
    cdef Py_ssize_t t, v, c, i, p
    cdef Py_ssize_t T = exps.shape[0], nv = exps.shape[1], nc = coeffs.shape[1], n = u.shape[1]
    cdef cplx mono, x
    with nogil:
        for i in range(n):
            for c in range(nc):
                out[c, i] = 0
            for t in range(T):
                mono = 1
                for v in range(nv):
                    x = u[v, i]
                    for p in range(exps[t, v]):
                        mono = mono * x
                for c in range(nc):
                    out[c, i] = out[c, i] + coeffs[t, c] * mono
    return np.asarray(out)
