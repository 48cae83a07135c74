"""States, effects, finite-outcome observables and reading scales.

All objects validate on construction and hold read-only arrays.  Outcome
labels are opaque strings; a :class:`ReadingScale` groups labels into bins,
and probabilities are always asked for a set of labels.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import linalg
from .errors import (
    DimensionError,
    EffectRangeError,
    LabelError,
    NormalizationError,
    PositivityError,
    ProbabilityRangeError,
    ScaleError,
    TraceError,
)
from .linalg import DEFAULT_TOL, Tolerances

PROBABILITY_SLACK = 1e-7


def _frozen(a):
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class State:
    """Density operator: Hermitian, positive, unit trace."""

    rho: np.ndarray

    def __init__(self, rho, tol: Tolerances = DEFAULT_TOL):
        rho = linalg.as_matrix(rho, "state")
        if rho.shape[0] != rho.shape[1]:
            raise DimensionError(f"state must be square, got {rho.shape}")
        w = linalg.eigvalsh(rho, tol)
        if w[-1] < -tol.psd_tol:
            raise PositivityError(f"state has eigenvalue {w[-1]:.3e} below -psd_tol")
        tr = np.trace(rho)
        if abs(tr - 1.0) > tol.eq_tol:
            raise TraceError(f"state trace is {tr.real:.12g}, expected 1")
        object.__setattr__(self, "rho", _frozen(0.5 * (rho + linalg.dagger(rho))))

    @property
    def dim(self):
        return self.rho.shape[0]

    def purity(self):
        return float(np.real(np.trace(self.rho @ self.rho)))

    def is_pure(self, tol: Tolerances = DEFAULT_TOL):
        return abs(self.purity() - 1.0) <= tol.eq_tol

    @classmethod
    def pure(cls, vector, tol: Tolerances = DEFAULT_TOL):
        """State ``|v><v|`` of the normalized vector ``v``."""
        return cls(linalg.projector(vector), tol)

    @classmethod
    def maximally_mixed(cls, dim):
        return cls(np.eye(dim) / dim)

    @classmethod
    def basis(cls, dim, index):
        v = np.zeros(dim)
        v[index] = 1.0
        return cls.pure(v)

    def __repr__(self):
        return f"State(dim={self.dim})"


@dataclass(frozen=True, eq=False)
class Effect:
    """Operator ``0 <= E <= I``."""

    op: np.ndarray

    def __init__(self, op, tol: Tolerances = DEFAULT_TOL):
        op = linalg.as_matrix(op, "effect")
        if op.shape[0] != op.shape[1]:
            raise DimensionError(f"effect must be square, got {op.shape}")
        w = linalg.eigvalsh(op, tol)
        if w[-1] < -tol.psd_tol:
            raise PositivityError(f"effect has eigenvalue {w[-1]:.3e} below -psd_tol")
        if w[0] > 1.0 + tol.psd_tol:
            raise EffectRangeError(f"effect has eigenvalue {w[0]:.12g} above 1")
        object.__setattr__(self, "op", _frozen(0.5 * (op + linalg.dagger(op))))

    @property
    def dim(self):
        return self.op.shape[0]

    def complement(self):
        return Effect(np.eye(self.dim) - self.op)

    def is_projection(self, tol: Tolerances = DEFAULT_TOL):
        return linalg.op_distance(self.op @ self.op, self.op) <= tol.eq_tol

    def __repr__(self):
        return f"Effect(dim={self.dim})"


class DiscreteObservable:
    """Finite-outcome POVM ``{label: effect}`` summing to the identity.

    Parameters
    ----------
    outcomes : sequence of str
        Distinct outcome labels, in order.
    effects : sequence of array_like
        One effect per outcome.
    """

    def __init__(self, outcomes: Sequence[str], effects, tol: Tolerances = DEFAULT_TOL):
        outcomes = tuple(str(o) for o in outcomes)
        effects = list(effects)
        if not outcomes:
            raise LabelError("an observable needs at least one outcome")
        if len(set(outcomes)) != len(outcomes):
            raise LabelError(f"duplicate outcome labels in {outcomes}")
        if len(effects) != len(outcomes):
            raise DimensionError(f"{len(outcomes)} labels but {len(effects)} effects")
        validated = tuple(e if isinstance(e, Effect) else Effect(e, tol) for e in effects)
        dims = {e.dim for e in validated}
        if len(dims) != 1:
            raise DimensionError(f"effects have mixed dimensions {sorted(dims)}")
        dim = dims.pop()
        total = sum(e.op for e in validated)
        defect = linalg.op_distance(total, np.eye(dim))
        if defect > tol.eq_tol:
            raise NormalizationError(f"effects sum to I only within {defect:.3e}")
        self.outcomes = outcomes
        self.effects = validated
        self.dim = dim
        self._index = {o: i for i, o in enumerate(outcomes)}

    @classmethod
    def from_basis(cls, outcomes, basis_columns):
        """Sharp observable of rank-one projectors onto the given columns."""
        basis_columns = linalg.as_matrix(basis_columns, "basis")
        return cls(outcomes, [np.outer(c, c.conj()) for c in basis_columns.T])

    @classmethod
    def from_projectors(cls, outcomes, projectors):
        return cls(outcomes, projectors)

    def effect(self, label):
        try:
            return self.effects[self._index[label]].op
        except KeyError:
            raise LabelError(f"unknown outcome label {label!r}") from None

    def effect_of(self, labels: Iterable[str]):
        """``E(X) = sum of E({w})`` over the labels in ``X``."""
        total = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for label in _as_label_set(labels):
            total = total + self.effect(label)
        return total

    def is_sharp(self, tol: Tolerances = DEFAULT_TOL):
        """Every effect is a projection and distinct effects are orthogonal."""
        ops = [e.op for e in self.effects]
        for i, a in enumerate(ops):
            if linalg.op_distance(a @ a, a) > tol.eq_tol:
                return False
            for b in ops[i + 1 :]:
                if linalg.op_norm(a @ b) > tol.eq_tol:
                    return False
        return True

    def __len__(self):
        return len(self.outcomes)

    def __repr__(self):
        return f"DiscreteObservable(dim={self.dim}, outcomes={list(self.outcomes)})"


def _as_label_set(labels):
    if isinstance(labels, str):
        return (labels,)
    return tuple(labels)


class ReadingScale:
    """Partition of an observable's outcome labels into named bins.

    Bin names default to the label itself for singletons and to
    ``"{a,b,...}"`` for larger bins.
    """

    def __init__(self, bins: Sequence[Sequence[str]], names: Sequence[str] | None = None):
        bins = tuple(tuple(str(x) for x in _as_label_set(b)) for b in bins)
        if not bins:
            raise ScaleError("a reading scale needs at least one bin")
        seen = set()
        for b in bins:
            if not b:
                raise ScaleError("empty bin in reading scale")
            for label in b:
                if label in seen:
                    raise ScaleError(f"label {label!r} occurs in more than one bin")
                seen.add(label)
        if names is None:
            names = tuple(b[0] if len(b) == 1 else "{" + ",".join(b) + "}" for b in bins)
        names = tuple(str(n) for n in names)
        if len(names) != len(bins) or len(set(names)) != len(names):
            raise ScaleError("bin names must be distinct, one per bin")
        self.bins = bins
        self.names = names

    @classmethod
    def singletons(cls, obs: DiscreteObservable):
        return cls([(o,) for o in obs.outcomes])

    @classmethod
    def trivial(cls, obs: DiscreteObservable, name="Omega"):
        return cls([obs.outcomes], [name])

    def labels(self):
        return tuple(x for b in self.bins for x in b)

    def check_covers(self, obs: DiscreteObservable):
        if set(self.labels()) != set(obs.outcomes):
            missing = set(obs.outcomes) - set(self.labels())
            extra = set(self.labels()) - set(obs.outcomes)
            raise ScaleError(f"scale does not partition outcomes (missing {sorted(missing)}, unknown {sorted(extra)})")

    def bin(self, name):
        try:
            return self.bins[self.names.index(name)]
        except ValueError:
            raise LabelError(f"unknown bin {name!r}") from None

    def __len__(self):
        return len(self.bins)

    def __repr__(self):
        return f"ReadingScale({list(self.names)})"


def _clip_probability(p):
    if p < -PROBABILITY_SLACK or p > 1.0 + PROBABILITY_SLACK:
        raise ProbabilityRangeError(f"probability {p:.12g} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def trace_probability(rho, op):
    """``tr(rho op)`` as a clipped probability; arrays in, float out."""
    return _clip_probability(float(np.real(np.trace(rho @ op))))


def probability(obs: DiscreteObservable, state: State, labels) -> float:
    """Born rule ``tr(rho E(X))`` for the label set ``X``."""
    if obs.dim != state.dim:
        raise DimensionError(f"observable dim {obs.dim} != state dim {state.dim}")
    return trace_probability(state.rho, obs.effect_of(labels))


def distribution(obs: DiscreteObservable, state: State, scale: ReadingScale | None = None):
    """Probabilities of every bin of ``scale`` (singletons by default)."""
    if scale is None:
        scale = ReadingScale.singletons(obs)
    scale.check_covers(obs)
    return np.array([probability(obs, state, b) for b in scale.bins])


def coarse_grain(obs: DiscreteObservable, scale: ReadingScale) -> DiscreteObservable:
    """One outcome per bin, effect ``sum over the bin``; labels are bin names."""
    scale.check_covers(obs)
    return DiscreteObservable(scale.names, [obs.effect_of(b) for b in scale.bins])


def is_objective(effect: Effect, state: State, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True when ``tr(rho E)`` is 0 or 1."""
    if effect.dim != state.dim:
        raise DimensionError(f"effect dim {effect.dim} != state dim {state.dim}")
    p = float(np.real(np.trace(state.rho @ effect.op)))
    return abs(p) <= tol.eq_tol or abs(p - 1.0) <= tol.eq_tol


def spanning_states(dim):
    """``dim**2`` pure states whose projectors span the Hermitian matrices.

    Basis vectors, then ``(e_a + e_b)/sqrt2`` and ``(e_a + i e_b)/sqrt2`` for
    ``a < b``.
    """
    eye = np.eye(dim, dtype=np.complex128)
    states = [State.pure(eye[a]) for a in range(dim)]
    for a in range(dim):
        for b in range(a + 1, dim):
            states.append(State.pure(eye[a] + eye[b]))
            states.append(State.pure(eye[a] + 1j * eye[b]))
    return states
