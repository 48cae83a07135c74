# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled cyclic Jacobi sweep; same algorithm as ``_jacobi_py``."""
import numpy as np

from libc.math cimport sqrt, hypot


cdef inline double _abs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef double _off2(double complex[:, ::1] A, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                acc += _abs2(A[i, j])
    return acc


def jacobi_sweeps(a, double rel_tol, int max_sweeps, bint want_vectors):
    cdef Py_ssize_t n = a.shape[0]
    A_arr = np.array(a, dtype=np.complex128, order="C", copy=True)
    V_arr = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] A = A_arr
    cdef double complex[:, ::1] V = V_arr
    cdef Py_ssize_t p, q, k
    cdef int sweep
    cdef double scale = 0.0, threshold, negligible, mag, app, aqq, tau, t, c, s
    cdef double complex apq, cph, sc, cc, akp, akq, vkp, vkq
    cdef int status = -1

    for p in range(n):
        for q in range(n):
            scale += _abs2(A[p, q])
    scale = sqrt(scale)
    if scale == 0.0 or n == 1:
        return A_arr.diagonal().real.copy(), (V_arr if want_vectors else None), 0
    threshold = rel_tol * scale
    negligible = 1e-300 * scale

    with nogil:
        for sweep in range(max_sweeps + 1):
            if _off2(A, n) <= threshold * threshold:
                status = sweep
                break
            if sweep == max_sweeps:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = A[p, q]
                    mag = sqrt(_abs2(apq))
                    if mag <= negligible:
                        A[p, q] = 0.0
                        A[q, p] = 0.0
                        continue
                    app = A[p, p].real
                    aqq = A[q, q].real
                    cph = apq.conjugate() / mag
                    tau = (aqq - app) / (2.0 * mag)
                    if tau >= 0.0:
                        t = 1.0 / (tau + hypot(1.0, tau))
                    else:
                        t = -1.0 / (-tau + hypot(1.0, tau))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    sc = s * cph
                    cc = c * cph
                    for k in range(n):
                        akp = A[k, p]
                        akq = A[k, q]
                        A[k, p] = c * akp - sc * akq
                        A[k, q] = s * akp + cc * akq
                    for k in range(n):
                        A[p, k] = A[k, p].conjugate()
                        A[q, k] = A[k, q].conjugate()
                    A[p, p] = app - t * mag
                    A[q, q] = aqq + t * mag
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    if want_vectors:
                        for k in range(n):
                            vkp = V[k, p]
                            vkq = V[k, q]
                            V[k, p] = c * vkp - sc * vkq
                            V[k, q] = s * vkp + cc * vkq
    return A_arr.diagonal().real.copy(), (V_arr if want_vectors else None), status
