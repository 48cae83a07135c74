"""Subspace lattice of C^n: meet, join, orthocomplement and the event-structure checks.

Subspaces are carried as orthonormal bases (columns).  Ranks are decided by
eigenvalue thresholds on Hermitian matrices built from projectors.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import linalg
from .errors import DimensionError, OrderError
from .linalg import DEFAULT_TOL, Tolerances, dagger


class Subspace:
    """Subspace of ``C^ambient_dim`` spanned by orthonormal ``basis`` columns."""

    def __init__(self, ambient_dim, basis=None, tol: Tolerances = DEFAULT_TOL):
        ambient_dim = int(ambient_dim)
        if basis is None:
            basis = np.zeros((ambient_dim, 0), dtype=np.complex128)
        basis = np.asarray(basis, dtype=np.complex128).reshape(ambient_dim, -1)
        if basis.shape[1]:
            defect = linalg.op_distance(dagger(basis) @ basis, np.eye(basis.shape[1]))
            if defect > tol.eq_tol:
                raise ValueError(f"basis columns are not orthonormal (defect {defect:.3e})")
        basis = basis.copy()
        basis.setflags(write=False)
        self.ambient_dim = ambient_dim
        self.basis = basis

    @classmethod
    def span(cls, ambient_dim, vectors, tol: Tolerances = DEFAULT_TOL):
        """Span of arbitrary (possibly dependent) column vectors."""
        vectors = np.asarray(vectors, dtype=np.complex128).reshape(ambient_dim, -1)
        if vectors.shape[1] == 0:
            return cls(ambient_dim)
        return cls(ambient_dim, _range(vectors @ dagger(vectors), tol))

    @classmethod
    def zero(cls, ambient_dim):
        return cls(ambient_dim)

    @classmethod
    def full(cls, ambient_dim):
        return cls(ambient_dim, np.eye(ambient_dim))

    @property
    def dim(self):
        return self.basis.shape[1]

    @property
    def projector(self):
        return self.basis @ dagger(self.basis)

    def is_zero(self):
        return self.dim == 0

    def __le__(self, other):
        return is_below(self, other)

    def __repr__(self):
        return f"Subspace(ambient_dim={self.ambient_dim}, dim={self.dim})"


def _range(h, tol):
    # eigenvectors of a Hermitian PSD matrix with eigenvalue above eq_tol
    w, v = linalg.eigh(h, tol)
    return v[:, w > tol.eq_tol]


def _kernel(h, tol):
    w, v = linalg.eigh(h, tol)
    return v[:, w <= tol.eq_tol]


def _same_ambient(a, b):
    if a.ambient_dim != b.ambient_dim:
        raise DimensionError(f"ambient dims {a.ambient_dim} and {b.ambient_dim} differ")
    return a.ambient_dim


def meet(a: Subspace, b: Subspace, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Intersection: kernel of ``(I - P_a) + (I - P_b)``."""
    n = _same_ambient(a, b)
    eye = np.eye(n)
    return Subspace(n, _kernel((eye - a.projector) + (eye - b.projector), tol))


def join(a: Subspace, b: Subspace, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Closed span: range of ``P_a + P_b``."""
    n = _same_ambient(a, b)
    return Subspace(n, _range(a.projector + b.projector, tol))


def ortho(a: Subspace, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Orthocomplement: kernel of ``P_a``."""
    w, v = linalg.eigh(a.projector, tol)
    return Subspace(a.ambient_dim, v[:, w < 0.5])


def is_below(a: Subspace, b: Subspace, tol: Tolerances = DEFAULT_TOL) -> bool:
    """``P_a <= P_b``, i.e. ``(I - P_b) P_a = 0``."""
    n = _same_ambient(a, b)
    if a.dim == 0:
        return True
    return linalg.op_norm((np.eye(n) - b.projector) @ a.basis) <= tol.eq_tol


def same(a: Subspace, b: Subspace, tol: Tolerances = DEFAULT_TOL) -> bool:
    _same_ambient(a, b)
    return linalg.op_distance(a.projector, b.projector) <= tol.eq_tol


def is_relevant(b: Subspace, a: Subspace, tol: Tolerances = DEFAULT_TOL) -> bool:
    """``b`` is relevant to ``a`` when ``b meet ortho(a)`` is zero."""
    return meet(b, ortho(a, tol), tol).is_zero()


def commutator_norm(a: Subspace, b: Subspace) -> float:
    pa, pb = a.projector, b.projector
    return linalg.op_norm(pa @ pb - pb @ pa)


class OrthomodularityVerdict(NamedTuple):
    holds: bool
    max_residual: float
    counterexamples: tuple


def orthomodular_residual(a: Subspace, b: Subspace, tol: Tolerances = DEFAULT_TOL) -> float:
    """``||P_b - P_{a join (b meet ortho(a))}||``."""
    rhs = join(a, meet(b, ortho(a, tol), tol), tol)
    return linalg.op_distance(b.projector, rhs.projector)


def check_orthomodularity(pairs, tol: Tolerances = DEFAULT_TOL, law_tol=1e-8) -> OrthomodularityVerdict:
    """Verify ``b = a join (b meet ortho(a))`` for nested pairs ``a <= b``.

    Raises :class:`OrderError` if some pair is not nested.  Failures are
    returned as ``(index, residual)`` counterexamples.
    """
    worst = 0.0
    bad = []
    for i, (a, b) in enumerate(pairs):
        if not is_below(a, b, tol):
            raise OrderError(f"pair {i} is not nested (a is not below b)")
        r = orthomodular_residual(a, b, tol)
        worst = max(worst, r)
        if r > law_tol:
            bad.append((i, r))
    return OrthomodularityVerdict(not bad, worst, tuple(bad))


@dataclass(frozen=True, eq=False)
class BooleanFailureWitness:
    """Two lines certifying that the lattice is not Boolean.

    ``a`` and ``b`` are disjoint (zero meet) yet not orthogonal; they do not
    commute, and both ``b`` and ``ortho(b)`` are relevant to ``a``.
    """

    a: Subspace
    b: Subspace
    disjoint: bool
    orthogonal: bool
    incompatible: bool
    b_relevant: bool
    b_perp_relevant: bool

    @property
    def certified(self):
        return (
            self.disjoint
            and not self.orthogonal
            and self.incompatible
            and self.b_relevant
            and self.b_perp_relevant
        )


def boolean_failure_witness(dim, tol: Tolerances = DEFAULT_TOL) -> BooleanFailureWitness:
    """Disjoint, non-orthogonal, incompatible pair in ``C^dim``.

    ``a`` spans the first ``k = ceil(dim/2)`` coordinates and ``b`` spans
    ``(e_j + e_{k+j})/sqrt2`` for ``j < dim - k``.  In ``C^2`` these are the
    lines ``|0>`` and ``|+>``.  Because ``a join b`` is the whole space and
    ``dim b <= dim a``, both ``b`` and ``ortho(b)`` are relevant to ``a``.
    """
    if dim < 2:
        raise DimensionError("a Boolean failure needs dimension at least 2")
    k = (dim + 1) // 2
    eye = np.eye(dim, dtype=np.complex128)
    a = Subspace(dim, eye[:, :k])
    b = Subspace(dim, np.column_stack([(eye[:, j] + eye[:, k + j]) / np.sqrt(2.0) for j in range(dim - k)]))
    return BooleanFailureWitness(
        a=a,
        b=b,
        disjoint=meet(a, b, tol).is_zero(),
        orthogonal=is_below(a, ortho(b, tol), tol),
        incompatible=commutator_norm(a, b) > tol.eq_tol,
        b_relevant=is_relevant(b, a, tol),
        b_perp_relevant=is_relevant(ortho(b, tol), a, tol),
    )


def truncated_chain(dim, tol: Tolerances = DEFAULT_TOL):
    """Chain ``V_1 < V_2 < ... < V_dim`` of coordinate subspaces.

    A finite stand-in for the infinite increasing chains of an
    infinite-dimensional space.  In finite dimension every such chain is
    orthomodular; the returned residuals only confirm that.
    """
    chain = [Subspace(dim, np.eye(dim)[:, :k]) for k in range(1, dim + 1)]
    residuals = [orthomodular_residual(a, b, tol) for i, a in enumerate(chain) for b in chain[i:]]
    return chain, residuals


def random_subspace(ambient_dim, k, rng):
    """Uniform-ish random ``k``-dimensional subspace (QR of a complex Gaussian)."""
    g = rng.normal(size=(ambient_dim, k)) + 1j * rng.normal(size=(ambient_dim, k))
    q, _ = np.linalg.qr(g)
    return Subspace(ambient_dim, q)


def random_nested_pair(ambient_dim, rng):
    """``(a, b)`` with ``a <= b``: ``b`` random, ``a`` a random subspace of ``b``."""
    kb = int(rng.integers(0, ambient_dim + 1))
    b = random_subspace(ambient_dim, kb, rng) if kb else Subspace.zero(ambient_dim)
    ka = int(rng.integers(0, kb + 1))
    if ka == 0:
        return Subspace.zero(ambient_dim), b
    inner = random_subspace(kb, ka, rng)
    return Subspace(ambient_dim, b.basis @ inner.basis), b
