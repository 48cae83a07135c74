"""Couplings, correlation coefficients and Schmidt-based strong correlations."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import linalg
from .errors import DimensionError, LabelError, NormError, SubspaceError
from .linalg import DEFAULT_TOL, Tolerances, dagger
from .qstructs import DiscreteObservable, Effect, ReadingScale, State


class Coupling:
    """Joint pmf ``gamma`` on ``row_outcomes x col_outcomes``."""

    def __init__(self, row_outcomes, col_outcomes, gamma, tol: Tolerances = DEFAULT_TOL):
        gamma = np.asarray(gamma, dtype=float)
        if gamma.shape != (len(row_outcomes), len(col_outcomes)):
            raise DimensionError(f"gamma shape {gamma.shape} does not match outcome lists")
        if np.any(gamma < -tol.eq_tol):
            raise ValueError("coupling has negative mass")
        if abs(gamma.sum() - 1.0) > tol.eq_tol:
            raise ValueError(f"coupling has total mass {gamma.sum():.12g}")
        self.row_outcomes = tuple(row_outcomes)
        self.col_outcomes = tuple(col_outcomes)
        self.gamma = np.clip(gamma, 0.0, None)

    @property
    def mu(self):
        return self.gamma.sum(axis=1)

    @property
    def nu(self):
        return self.gamma.sum(axis=0)

    @classmethod
    def product(cls, mu, nu, row_outcomes=None, col_outcomes=None):
        mu, nu = np.asarray(mu, float), np.asarray(nu, float)
        return cls(
            row_outcomes or tuple(range(len(mu))),
            col_outcomes or tuple(range(len(nu))),
            np.outer(mu, nu),
        )


class Correlation(NamedTuple):
    """``coefficient`` is ``None`` when a marginal is a point measure."""

    coefficient: Optional[float]
    covariance: float

    @property
    def defined(self):
        return self.coefficient is not None


def _moments(c: Coupling, row_values, col_values):
    x = np.asarray(row_values, dtype=float)
    y = np.asarray(col_values, dtype=float)
    if x.shape != (len(c.row_outcomes),) or y.shape != (len(c.col_outcomes),):
        raise LabelError("value lists must match the outcome lists")
    mean_x = float(c.mu @ x)
    mean_y = float(c.nu @ y)
    cov = float(x @ c.gamma @ y) - mean_x * mean_y
    sd_x = math.sqrt(max(float(c.mu @ (x - mean_x) ** 2), 0.0))
    sd_y = math.sqrt(max(float(c.nu @ (y - mean_y) ** 2), 0.0))
    return mean_x, mean_y, sd_x, sd_y, cov


def correlation_coefficient(c: Coupling, row_values, col_values, tol: Tolerances = DEFAULT_TOL) -> Correlation:
    """Normalized correlation ``cov / (sd(mu) sd(nu))`` of the two value maps."""
    _, _, sd_x, sd_y, cov = _moments(c, row_values, col_values)
    if sd_x <= tol.eq_tol or sd_y <= tol.eq_tol:
        return Correlation(None, 0.0)
    r = cov / (sd_x * sd_y)
    return Correlation(float(min(max(r, -1.0), 1.0)), cov)


def dependence_line(c: Coupling, row_values, col_values, tol: Tolerances = DEFAULT_TOL):
    """Slope and intercept ``(a, b)`` with ``x = a y + b`` on the support of ``c``
    when ``|cor| = 1``; ``None`` otherwise."""
    mean_x, mean_y, sd_x, sd_y, _ = _moments(c, row_values, col_values)
    corr = correlation_coefficient(c, row_values, col_values, tol)
    if not corr.defined or abs(abs(corr.coefficient) - 1.0) > tol.eq_tol:
        return None
    a = math.copysign(sd_x / sd_y, corr.coefficient)
    return a, mean_x - a * mean_y


def _joint_dims(joint, e_dim, f_dim):
    rho = joint.rho if isinstance(joint, State) else linalg.as_matrix(joint)
    if rho.shape != (e_dim * f_dim, e_dim * f_dim):
        raise DimensionError(f"joint state of shape {rho.shape} for effect dims {e_dim}, {f_dim}")
    return rho


def _op(e):
    return e.op if isinstance(e, Effect) else linalg.as_matrix(e)


def coupling_from_joint_state(joint, e, f) -> Coupling:
    """2x2 coupling of the dichotomic observables ``{I-E, E}`` and ``{I-F, F}``.

    Outcome 1 is the effect itself, outcome 0 its complement.
    """
    e, f = _op(e), _op(f)
    rho = _joint_dims(joint, e.shape[0], f.shape[0])
    es = [np.eye(e.shape[0]) - e, e]
    fs = [np.eye(f.shape[0]) - f, f]
    gamma = np.array([[np.real(np.trace(rho @ np.kron(a, b))) for b in fs] for a in es])
    return Coupling((0, 1), (0, 1), gamma)


def correlation_probabilities(joint, e, f):
    """``(tr[rho^f E], tr[sigma^f F], tr[joint E (x) F])``."""
    e, f = _op(e), _op(f)
    rho = _joint_dims(joint, e.shape[0], f.shape[0])
    dims = (e.shape[0], f.shape[0])
    rho_f = linalg.partial_trace(rho, dims, over="B")
    sigma_f = linalg.partial_trace(rho, dims, over="A")
    return (
        float(np.real(np.trace(rho_f @ e))),
        float(np.real(np.trace(sigma_f @ f))),
        float(np.real(np.trace(rho @ np.kron(e, f)))),
    )


def strongly_correlated_effects(joint, e, f, tol: Tolerances = DEFAULT_TOL) -> bool:
    """The marginal probabilities of ``E`` and ``F`` both equal the joint one."""
    p = correlation_probabilities(joint, e, f)
    return max(p) - min(p) <= tol.eq_tol


def strongly_correlated_observables(
    joint,
    obs_a: DiscreteObservable,
    scale_a: ReadingScale,
    obs_b: DiscreteObservable,
    scale_b: ReadingScale,
    tol: Tolerances = DEFAULT_TOL,
):
    """Injective pairing of bins, ``{bin_a: bin_b}``, with every pair strongly
    correlated; ``None`` if there is none.

    Exhaustive backtracking in bin order, so among valid pairings the one
    using the lowest ``bin_b`` indices first is returned.
    """
    scale_a.check_covers(obs_a)
    scale_b.check_covers(obs_b)
    ea = [obs_a.effect_of(b) for b in scale_a.bins]
    eb = [obs_b.effect_of(b) for b in scale_b.bins]
    ok = [[strongly_correlated_effects(joint, x, y, tol) for y in eb] for x in ea]

    chosen = []

    def search(i, used):
        if i == len(ea):
            return True
        for j in range(len(eb)):
            if j not in used and ok[i][j]:
                chosen.append(j)
                if search(i + 1, used | {j}):
                    return True
                chosen.pop()
        return False

    if not search(0, frozenset()):
        return None
    return {scale_a.names[i]: scale_b.names[j] for i, j in enumerate(chosen)}


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """Grouped Schmidt data of a bipartite unit vector.

    ``xi[i]`` and ``eta[i]`` hold the ``n_i`` vectors of group ``i`` as
    columns; ``v = sum_i lambda_i sum_m xi[i][:, m] (x) eta[i][:, m]``.
    """

    dims: tuple
    lambdas: tuple
    multiplicities: tuple
    xi: tuple
    eta: tuple

    @property
    def P(self):
        return tuple(x @ dagger(x) for x in self.xi)

    @property
    def R(self):
        return tuple(y @ dagger(y) for y in self.eta)

    def vector(self):
        da, db = self.dims
        v = np.zeros(da * db, dtype=np.complex128)
        for lam, x, y in zip(self.lambdas, self.xi, self.eta):
            for m in range(x.shape[1]):
                v = v + lam * np.kron(x[:, m], y[:, m])
        return v


def _fix_phase(x, y):
    mags = np.abs(x)
    k = int(np.argmax(mags >= mags.max() - 1e-12))
    ph = x[k] / mags[k]
    return x / ph, y * ph


def schmidt(v, dims, tol: Tolerances = DEFAULT_TOL) -> SchmidtDecomposition:
    """Schmidt decomposition with degenerate coefficients grouped.

    Coefficients whose relative gap is within ``degeneracy_tol`` (compared
    with the largest member of the current group) share a group; the group
    coefficient is the mean of its members.  Each ``xi`` vector is rotated
    so its largest-magnitude component is real positive, and its partner
    ``eta`` gets the inverse phase.
    """
    v = linalg.as_vector(v)
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > tol.eq_tol:
        raise NormError(f"vector has norm {norm:.12g}")
    s, left, right = linalg.svd_bipartite(v, dims)
    eta_all = right.conj()
    groups = []
    for k in np.flatnonzero(s > 0):
        if groups and abs(s[groups[-1][0]] - s[k]) <= tol.degeneracy_tol * s[groups[-1][0]]:
            groups[-1].append(k)
        else:
            groups.append([k])
    lambdas, mults, xis, etas = [], [], [], []
    for g in groups:
        xs, ys = [], []
        for k in g:
            x, y = _fix_phase(left[:, k], eta_all[:, k])
            xs.append(x)
            ys.append(y)
        lambdas.append(float(np.mean(s[g])))
        mults.append(len(g))
        xis.append(np.column_stack(xs))
        etas.append(np.column_stack(ys))
    return SchmidtDecomposition(tuple(int(d) for d in dims), tuple(lambdas), tuple(mults), tuple(xis), tuple(etas))


def _group_coordinates(sd, k, refinement, tol):
    x = sd.xi[k]
    n = x.shape[1]
    u = linalg.as_matrix(refinement, "refinement")
    if u.shape == (n, n) and u.shape[0] != sd.dims[0]:
        coords = u
    elif u.shape == (sd.dims[0], sd.dims[0]):
        coords = dagger(x) @ u @ x
        if linalg.op_norm(u @ x - x @ coords) > tol.eq_tol:
            raise SubspaceError(f"refinement does not act within Schmidt group {k}")
    else:
        raise SubspaceError(f"refinement of shape {u.shape} for group {k} of size {n}")
    if linalg.op_distance(dagger(coords) @ coords, np.eye(n)) > tol.eq_tol:
        raise SubspaceError(f"refinement for group {k} is not unitary on the group subspace")
    return coords


def correlated_projection_pairs(sd: SchmidtDecomposition, refinements=None, tol: Tolerances = DEFAULT_TOL):
    """Strongly correlated ``(P, R)`` projection pairs of a Schmidt decomposition.

    Always returns the group pairs ``(P_i, R_i)``.  ``refinements`` maps a
    group index to a unitary acting within that group, given either in the
    group's own ``n_k x n_k`` coordinates or as an operator on ``H`` that
    leaves the group subspace invariant.  For each refined group the rank-one
    pairs ``(P[U xi_km], P[conj(U) eta_km])`` are appended, with the
    conjugate taken in group coordinates.
    """
    pairs = list(zip(sd.P, sd.R))
    for k, refinement in sorted((refinements or {}).items()):
        if not 0 <= k < len(sd.lambdas):
            raise SubspaceError(f"no Schmidt group {k}")
        coords = _group_coordinates(sd, k, refinement, tol)
        xs = sd.xi[k] @ coords
        ys = sd.eta[k] @ coords.conj()
        for m in range(xs.shape[1]):
            pairs.append((np.outer(xs[:, m], xs[:, m].conj()), np.outer(ys[:, m], ys[:, m].conj())))
    return pairs
