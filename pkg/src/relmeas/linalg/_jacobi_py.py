"""Pure-Python cyclic Jacobi sweep for complex Hermitian matrices.

This is the fallback for the compiled ``_jacobi_ext`` kernel and follows it
operation for operation.  Each rotation first removes the phase of the
pivot ``a[p, q]`` and then applies the classical real Jacobi rotation, so
the accumulated transform ``G = diag(1, exp(-i phi)) R(theta)`` is unitary.
Only the columns ``p, q`` are updated explicitly; the rows follow by
Hermiticity.
"""
import math

import numpy as np


def jacobi_sweeps(a, rel_tol, max_sweeps, want_vectors):
    """Diagonalize the Hermitian matrix ``a``.

    Parameters
    ----------
    a : ndarray, complex128, shape (n, n)
        Hermitian input.  Not modified.
    rel_tol : float
        Stop once the off-diagonal Frobenius norm is at most
        ``rel_tol * ||a||_F``.
    max_sweeps : int
        Upper bound on the number of full cyclic sweeps.
    want_vectors : bool
        Accumulate the eigenvector matrix.

    Returns
    -------
    w : ndarray, float64, shape (n,)
        Unsorted eigenvalues (the final diagonal).
    v : ndarray, complex128, shape (n, n) or None
        Eigenvectors as columns, matching ``w``.
    sweeps : int
        Number of sweeps performed; ``-1`` if the threshold was never met.
    """
    n = a.shape[0]
    A = np.array(a, dtype=np.complex128, order="C", copy=True)
    V = np.eye(n, dtype=np.complex128) if want_vectors else None
    scale = math.sqrt(float(np.sum(A.real**2 + A.imag**2)))
    if scale == 0.0 or n == 1:
        return A.diagonal().real.copy(), V, 0
    threshold = rel_tol * scale
    negligible = 1e-300 * scale
    offdiag = ~np.eye(n, dtype=bool)

    for sweep in range(max_sweeps + 1):
        off = A[offdiag]
        off2 = float(np.sum(off.real**2 + off.imag**2))
        if off2 <= threshold * threshold:
            return A.diagonal().real.copy(), V, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = abs(apq)
                if mag <= negligible:
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    continue
                app = A[p, p].real
                aqq = A[q, q].real
                cph = apq.conjugate() / mag
                tau = (aqq - app) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.hypot(1.0, tau))
                else:
                    t = -1.0 / (-tau + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                sc = s * cph
                cc = c * cph

                colp = A[:, p].copy()
                colq = A[:, q].copy()
                A[:, p] = c * colp - sc * colq
                A[:, q] = s * colp + cc * colq
                A[p, :] = A[:, p].conj()
                A[q, :] = A[:, q].conj()
                A[p, p] = app - t * mag
                A[q, q] = aqq + t * mag
                A[p, q] = 0.0
                A[q, p] = 0.0

                if V is not None:
                    vp = V[:, p].copy()
                    vq = V[:, q].copy()
                    V[:, p] = c * vp - sc * vq
                    V[:, q] = s * vp + cc * vq
    return A.diagonal().real.copy(), V, -1
