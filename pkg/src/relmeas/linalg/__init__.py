"""Dense complex linear algebra for desk-scale Hilbert spaces (dim <= 64).

Matrices are plain ``numpy`` complex128 arrays.  Tensor products use one
index convention everywhere: subsystem A is the major index, so the row of
``kron(a, b)`` for ``(i_a, i_b)`` is ``i_a * b.shape[0] + i_b``.

Eigendecompositions come from a cyclic Jacobi eigensolver (compiled kernel
when available, pure Python otherwise; see :func:`current_backend`).
Singular values, operator norms, square roots and subspace operations are
all built on top of it.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, fields, replace

import numpy as np

from ..errors import (
    ConvergenceError,
    DimensionError,
    HermiticityError,
    PositivityError,
)
from . import _backend
from ._backend import available_backends, current_backend, use_backend

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "load_tolerances",
    "as_matrix",
    "as_vector",
    "dagger",
    "kron",
    "partial_trace",
    "eigh",
    "eigvalsh",
    "svd_bipartite",
    "psd_sqrt",
    "op_distance",
    "op_norm",
    "hermiticity_defect",
    "is_hermitian",
    "is_unitary",
    "projector",
    "complete_basis",
    "rank",
    "available_backends",
    "current_backend",
    "use_backend",
]

JACOBI_REL_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SINGULAR_ZERO = 1e-12

TOLERANCE_ENV = "RELMEAS_TOLERANCE_FILE"


@dataclass(frozen=True)
class Tolerances:
    """Numerical slack used by every equality and validity predicate.

    Attributes
    ----------
    eq_tol : float
        Operator-norm / scalar equality.
    psd_tol : float
        Allowed eigenvalue negativity (clipped to zero).
    degeneracy_tol : float
        Relative gap below which Schmidt coefficients are merged.
    """

    eq_tol: float = 1e-9
    psd_tol: float = 1e-10
    degeneracy_tol: float = 1e-8

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
                raise ValueError(f"tolerance {f.name} must be a finite non-negative number")

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_TOL = Tolerances()


def load_tolerances(path=None):
    """Read tolerance overrides from a JSON object file.

    With no ``path``, the file named by ``$RELMEAS_TOLERANCE_FILE`` is used
    if set; otherwise the defaults are returned.
    """
    if path is None:
        path = os.environ.get(TOLERANCE_ENV)
    if not path:
        return DEFAULT_TOL
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    unknown = set(data) - {f.name for f in fields(Tolerances)}
    if unknown:
        raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
    return replace(DEFAULT_TOL, **{k: float(v) for k, v in data.items()})


def as_matrix(m, name="matrix"):
    """Return ``m`` as a finite 2-D complex128 array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def as_vector(v, name="vector"):
    a = np.asarray(v, dtype=np.complex128)
    if a.ndim != 1 or a.shape[0] == 0:
        raise DimensionError(f"{name} must be a non-empty 1-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def dagger(m):
    return np.conj(np.transpose(m))


def kron(a, b):
    """Kronecker product, subsystem ``a`` major."""
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def partial_trace(m, dims, over="B"):
    """Trace out one factor of a bipartite operator.

    Parameters
    ----------
    m : array_like, shape (dA*dB, dA*dB)
    dims : (int, int)
        ``(dA, dB)``.
    over : {"A", "B"}
        The factor to trace out; the other one is returned.
    """
    m = as_matrix(m)
    da, db = int(dims[0]), int(dims[1])
    if m.shape != (da * db, da * db):
        raise DimensionError(f"operator of shape {m.shape} does not match dims {da}x{db}")
    t = m.reshape(da, db, da, db)
    if over == "B":
        return np.einsum("ijkj->ik", t)
    if over == "A":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"over must be 'A' or 'B', got {over!r}")


def _sweep(h, want_vectors):
    w, v, status = _backend.jacobi_sweeps(h, JACOBI_REL_TOL, JACOBI_MAX_SWEEPS, want_vectors)
    if status < 0:
        raise ConvergenceError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    return w, v


def hermiticity_defect(h):
    """Operator norm of ``h - h^dagger``."""
    d = h - dagger(h)
    if not np.any(d):
        return 0.0
    # d is exactly anti-Hermitian, so 1j*d is exactly Hermitian
    w, _ = _sweep(1j * d, False)
    return float(np.max(np.abs(w)))


def is_hermitian(h, tol=DEFAULT_TOL):
    h = as_matrix(h)
    if h.shape[0] != h.shape[1]:
        return False
    return hermiticity_defect(h) <= tol.eq_tol


def _check_hermitian(h, tol):
    h = as_matrix(h)
    if h.shape[0] != h.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {h.shape}")
    defect = hermiticity_defect(h)
    if defect > tol.eq_tol:
        raise HermiticityError(f"matrix is not Hermitian (||h - h^+|| = {defect:.3e})")
    return 0.5 * (h + dagger(h))


def eigh(h, tol=DEFAULT_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns
    -------
    w : ndarray
        Eigenvalues in descending order.
    v : ndarray
        Orthonormal eigenvectors as columns, ``h = v @ diag(w) @ v^dagger``.
    """
    h = _check_hermitian(h, tol)
    w, v = _sweep(h, True)
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def eigvalsh(h, tol=DEFAULT_TOL):
    """Eigenvalues only, descending."""
    h = _check_hermitian(h, tol)
    w, _ = _sweep(h, False)
    return np.sort(w)[::-1]


def op_norm(d):
    """Largest singular value of ``d``."""
    d = as_matrix(d)
    if not np.any(d):
        return 0.0
    if d.shape[0] == d.shape[1] and np.array_equal(d, dagger(d)):
        w, _ = _sweep(d, False)
        return float(np.max(np.abs(w)))
    gram = dagger(d) @ d if d.shape[1] <= d.shape[0] else d @ dagger(d)
    gram = 0.5 * (gram + dagger(gram))
    w, _ = _sweep(gram, False)
    return math.sqrt(max(float(np.max(w)), 0.0))


def op_distance(a, b):
    """Operator-norm distance ``||a - b||``."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return op_norm(a - b)


def is_unitary(u, tol=DEFAULT_TOL):
    u = as_matrix(u)
    if u.shape[0] != u.shape[1]:
        return False
    return op_distance(dagger(u) @ u, np.eye(u.shape[0])) <= tol.eq_tol


def psd_sqrt(h, tol=DEFAULT_TOL):
    """Positive square root; eigenvalues in ``[-psd_tol, 0)`` are clipped."""
    w, v = eigh(h, tol)
    if w.size and w[-1] < -tol.psd_tol:
        raise PositivityError(f"matrix has eigenvalue {w[-1]:.3e} < -{tol.psd_tol:g}")
    r = (v * np.sqrt(np.clip(w, 0.0, None))) @ dagger(v)
    return 0.5 * (r + dagger(r))


def projector(v):
    """Rank-one projector onto the (normalized) vector ``v``."""
    v = as_vector(v)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def rank(m, rel_tol=1e-9):
    """Numerical rank: squared singular values above ``rel_tol * max``."""
    m = as_matrix(m)
    gram = dagger(m) @ m if m.shape[1] <= m.shape[0] else m @ dagger(m)
    gram = 0.5 * (gram + dagger(gram))
    w, _ = _sweep(gram, False)
    top = float(np.max(w))
    if top <= 0.0:
        return 0
    return int(np.sum(w > rel_tol * top))


def complete_basis(vectors, dim):
    """Extend orthonormal columns to an orthonormal basis of C^dim.

    Candidates are the canonical basis vectors in index order; each is kept
    when its component orthogonal to everything chosen so far has norm above
    ``1/sqrt(2*dim)`` (which always leaves enough candidates).

    Returns only the new columns, shape ``(dim, dim - k)``.
    """
    vectors = np.asarray(vectors, dtype=np.complex128).reshape(dim, -1)
    basis = [vectors[:, j] for j in range(vectors.shape[1])]
    needed = dim - len(basis)
    threshold = 1.0 / math.sqrt(2.0 * dim)
    new = []
    for j in range(dim):
        if len(new) == needed:
            break
        x = np.zeros(dim, dtype=np.complex128)
        x[j] = 1.0
        for _ in range(2):
            for b in basis:
                x = x - b * np.vdot(b, x)
        norm = np.linalg.norm(x)
        if norm > threshold:
            x = x / norm
            basis.append(x)
            new.append(x)
    if len(new) != needed:
        raise ConvergenceError("basis completion ran out of candidates")
    if not new:
        return np.zeros((dim, 0), dtype=np.complex128)
    return np.column_stack(new)


def svd_bipartite(v, dims):
    """Singular value decomposition of a bipartite vector.

    The vector is reshaped row-major into ``C[i, j] = v[i*dB + j]`` and
    decomposed from the eigenvectors of the smaller Gram matrix (``C C^+``
    or ``C^+ C``).  The partner vectors are obtained by applying ``C`` (or
    ``C^+``) to them, which pins their relative phases; singular values are
    taken as the norms of those images, so small ones stay accurate.
    Values below ``1e-12`` are set to zero and their partner vectors are
    completed from the eigenvectors of the other Gram matrix.

    Returns
    -------
    s : ndarray, shape (k,)
        Singular values, descending, ``k = min(dA, dB)``.
    left : ndarray, shape (dA, k)
    right : ndarray, shape (dB, k)
        ``C = left @ diag(s) @ right^dagger``.
    """
    v = as_vector(v)
    da, db = int(dims[0]), int(dims[1])
    if v.shape[0] != da * db:
        raise DimensionError(f"vector of length {v.shape[0]} does not match dims {da}x{db}")
    c = v.reshape(da, db)
    if da <= db:
        s, left, right = _svd_from_gram(c)
    else:
        s, right, left = _svd_from_gram(dagger(c))
    return s, left, right


def _svd_from_gram(c):
    # c has at most as many rows as columns
    k, m = c.shape
    _, u = eigh(c @ dagger(c))
    images = dagger(c) @ u
    s = np.linalg.norm(images, axis=0)
    order = np.argsort(-s, kind="stable")
    s, u, images = s[order], u[:, order], images[:, order]
    s = np.where(s < SINGULAR_ZERO, 0.0, s)
    nonzero = s > 0
    w = np.zeros((m, k), dtype=np.complex128)
    w[:, nonzero] = images[:, nonzero] / s[nonzero]
    if not np.all(nonzero):
        kept = w[:, nonzero]
        _, other = eigh(dagger(c) @ c)
        fill = []
        for j in range(m - 1, -1, -1):
            x = other[:, j]
            for _ in range(2):
                for b in list(kept.T) + fill:
                    x = x - b * np.vdot(b, x)
            norm = np.linalg.norm(x)
            if norm > 0.5:
                fill.append(x / norm)
            if len(fill) == int(np.sum(~nonzero)):
                break
        w[:, ~nonzero] = np.column_stack(fill)
    return s, u, w
