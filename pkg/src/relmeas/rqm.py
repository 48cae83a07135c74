"""Relational bookkeeping: who assigns which state to whom.

The :class:`PerspectiveLedger` is an immutable value.  Every operation
that "happens" returns a new ledger.  An interaction between a target ``S``
and an observer ``S'`` updates three things:

* the record of ``S`` relative to ``S'`` (the conditional state of the
  realized bin; the local collapse),
* the state of ``S`` and ``S'`` relative to everyone else (the
  uncollapsed marginals of ``U(rho (x) sigma)U^+`` under LOCAL semantics,
  the conditional states under GLOBAL semantics),
* the joint state of the pair relative to third parties.

Sampling uses :class:`CollapseSampler`, a PCG64 bit stream read through a
fixed uniform/inverse-CDF recipe so that traces are bit-reproducible.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import NamedTuple

import numpy as np

from .errors import (
    DegenerateDistributionError,
    DimensionError,
    ScaleError,
    UnknownPerspectiveError,
)
from .linalg import DEFAULT_TOL, Tolerances
from .qstructs import ReadingScale, State, coarse_grain
from .schemes import (
    MeasurementScheme,
    build_lueders_scheme,
    build_naimark_scheme,
    final_states,
    induced_observable,
    instrument_of,
    is_repeatable,
    sequential_biobservable,
    unnormalized_conditional_pair,
)


class CollapseSemantics(enum.Enum):
    LOCAL = "local"
    GLOBAL = "global"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"semantics must be 'local' or 'global', got {value!r}") from None


LOCAL = CollapseSemantics.LOCAL
GLOBAL = CollapseSemantics.GLOBAL


class CollapseSampler:
    """Seeded bin sampler.

    Algorithm ``pcg64-u53-icdf/1``: numpy's PCG64 bit generator seeded with
    the integer seed; each 64-bit output ``x`` becomes ``u = (x >> 11) * 2**-53``
    in ``[0, 1)``; the bin is the first index whose cumulative probability
    (bins in label order, normalized by the total) exceeds ``u``.
    """

    ALGORITHM = "pcg64-u53-icdf/1"

    def __init__(self, seed):
        if seed is None:
            raise ValueError("a seed is required for reproducible sampling")
        self.seed = int(seed)
        self._bits = np.random.PCG64(self.seed)

    def uniforms(self, n):
        raw = np.asarray(self._bits.random_raw(n), dtype=np.uint64)
        return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)

    @staticmethod
    def _cdf(probs):
        p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
        total = p.sum()
        if not total > 0.0:
            raise DegenerateDistributionError("all bin probabilities are zero")
        cdf = np.cumsum(p / total)
        last = int(np.flatnonzero(p > 0)[-1])
        return cdf, last

    def draw_many(self, probs, n):
        cdf, last = self._cdf(probs)
        idx = np.searchsorted(cdf, self.uniforms(n), side="right")
        return np.minimum(idx, last)

    def draw(self, probs):
        return int(self.draw_many(probs, 1)[0])


def _sampler(rng):
    return rng if isinstance(rng, CollapseSampler) else CollapseSampler(rng)


@dataclass(frozen=True, eq=False)
class RelationalRecord:
    system_id: str
    relative_to_id: str
    state: State
    history: tuple = ()


@dataclass(frozen=True, eq=False)
class InteractionEvent:
    interaction_id: str
    target: str
    observer: str
    semantics: CollapseSemantics
    bin: str
    probability: float
    bin_names: tuple
    probabilities: tuple
    partner_state: State
    third_party_state: State
    observer_state: State
    joint_state: np.ndarray


def _freeze(d):
    return MappingProxyType(dict(d))


@dataclass(frozen=True, eq=False)
class PerspectiveLedger:
    """Relational state assignments; see the module docstring."""

    initial: MappingProxyType = field(default_factory=lambda: _freeze({}))
    records: MappingProxyType = field(default_factory=lambda: _freeze({}))
    external: MappingProxyType = field(default_factory=lambda: _freeze({}))
    joint_states: MappingProxyType = field(default_factory=lambda: _freeze({}))
    events: tuple = ()

    def with_system(self, system_id, state: State):
        return replace(self, initial=_freeze({**self.initial, system_id: state}))

    def record(self, system_id, relative_to_id):
        return self.records.get((system_id, relative_to_id))


def relative_state(ledger: PerspectiveLedger, system_id, perspective_id) -> State:
    """State of ``system_id`` as assigned by ``perspective_id``.

    The interaction partner sees its collapsed record; anyone else sees the
    latest third-party state, or the initial state before any interaction.
    """
    rec = ledger.records.get((system_id, perspective_id))
    if rec is not None:
        return rec.state
    if system_id == perspective_id:
        raise UnknownPerspectiveError(f"{system_id!r} has no state relative to itself")
    if system_id in ledger.external:
        return ledger.external[system_id]
    if system_id in ledger.initial:
        return ledger.initial[system_id]
    raise UnknownPerspectiveError(f"no state of {system_id!r} relative to {perspective_id!r}")


def bin_probabilities(m: MeasurementScheme, rho, scale: ReadingScale | None = None):
    """``[tr I(X_i)(rho)]`` clipped to ``[0, 1]``."""
    scale = scale or ReadingScale.singletons(m.Z)
    inst = instrument_of(m, scale)
    return np.array([min(max(float(np.real(np.trace(inst.apply(n, rho)))), 0.0), 1.0) for n in scale.names])


def apply_interaction(
    ledger: PerspectiveLedger,
    scheme: MeasurementScheme,
    scale: ReadingScale | None,
    target,
    observer,
    rho=None,
    rng=None,
    semantics=LOCAL,
    collapse_pointer=None,
    interaction_id=None,
    tol: Tolerances = DEFAULT_TOL,
):
    """Let ``observer`` interact with ``target`` through ``scheme``.

    Parameters
    ----------
    rho : State, optional
        Pre-interaction state of the target; defaults to its current
        third-party state in ``ledger``.
    rng : int or CollapseSampler
        Seed or sampler deciding the realized bin.
    semantics : CollapseSemantics or str
        LOCAL keeps third parties uncollapsed; GLOBAL collapses for everyone.
    collapse_pointer : bool, optional
        Also record the observer relative to the target as ``sigma^f(X_k)``.
        Defaults to off under LOCAL and on under GLOBAL.

    Returns
    -------
    (str, PerspectiveLedger)
        The realized bin name and the updated ledger.
    """
    semantics = CollapseSemantics.parse(semantics)
    if collapse_pointer is None:
        collapse_pointer = semantics is GLOBAL
    scale = scale or ReadingScale.singletons(scheme.Z)
    scale.check_covers(scheme.Z)
    if rho is None:
        rho = relative_state(ledger, target, None)
    if not isinstance(rho, State):
        rho = State(rho, tol)
    if rho.dim != scheme.sys_dim:
        raise DimensionError(f"state of dim {rho.dim} for scheme on dim {scheme.sys_dim}")

    probs = bin_probabilities(scheme, rho, scale)
    if not probs.sum() > 0.0:
        raise DegenerateDistributionError("all bin probabilities vanish")
    k = _sampler(rng).draw(probs)
    labels = scale.bins[k]
    name = scale.names[k]
    iid = interaction_id or f"i{len(ledger.events) + 1}"

    sys, anc = unnormalized_conditional_pair(scheme, rho, labels)
    p_k = float(np.real(np.trace(sys)))
    partner = State(sys / p_k, tol)
    pointer_k = State(anc / np.real(np.trace(anc)), tol)
    joint = scheme.joint_state(rho)
    rho_f, sigma_f = final_states(scheme, rho)

    records = dict(ledger.records)
    external = dict(ledger.external)
    joints = dict(ledger.joint_states)
    if semantics is GLOBAL:
        for key in [key for key in records if key[0] in (target, observer)]:
            del records[key]
        zx = scheme.pointer_on_joint(labels)
        cond = zx @ joint @ zx
        joints[(target, observer)] = cond / np.real(np.trace(cond))
        external[target] = partner
        external[observer] = pointer_k
    else:
        joints[(target, observer)] = joint
        external[target] = rho_f
        external[observer] = sigma_f

    def _record(sid, rid, state):
        old = ledger.records.get((sid, rid))
        history = (old.history if old is not None and semantics is LOCAL else ()) + ((iid, name, p_k),)
        records[(sid, rid)] = RelationalRecord(sid, rid, state, history)

    _record(target, observer, partner)
    if collapse_pointer:
        _record(observer, target, pointer_k)

    event = InteractionEvent(
        interaction_id=iid,
        target=target,
        observer=observer,
        semantics=semantics,
        bin=name,
        probability=p_k,
        bin_names=scale.names,
        probabilities=tuple(float(x) for x in probs),
        partner_state=partner,
        third_party_state=external[target],
        observer_state=external[observer],
        joint_state=joints[(target, observer)],
    )
    new = replace(
        ledger,
        records=_freeze(records),
        external=_freeze(external),
        joint_states=_freeze(joints),
        events=ledger.events + (event,),
    )
    return name, new


class JointSpectrum(NamedTuple):
    names: tuple
    table: np.ndarray


def joint_value_spectrum(m: MeasurementScheme, scale: ReadingScale | None, rho, tol: Tolerances = DEFAULT_TOL):
    """``tr[U(rho (x) sigma)U^+ E(X_i) (x) Z(X_j)]`` over all bin pairs.

    Warns (RuntimeWarning) when the scheme is not repeatable for ``scale``;
    only then is the table guaranteed diagonal.
    """
    scale = scale or ReadingScale.singletons(m.Z)
    if not is_repeatable(m, scale, tol):
        warnings.warn("scheme is not repeatable for this reading scale", RuntimeWarning, stacklevel=2)
    joint = m.joint_state(rho)
    e = coarse_grain(induced_observable(m), scale)
    z = [m.Z.effect_of(b) for b in scale.bins]
    table = np.array(
        [[np.real(np.trace(joint @ np.kron(e.effect(x), zj))) for zj in z] for x in scale.names]
    )
    return JointSpectrum(scale.names, table)


class CplTerms(NamedTuple):
    names: tuple
    alice: np.ndarray
    bob_unconditioned: np.ndarray
    bob_given_alice: np.ndarray


def _bob_effects(alice: MeasurementScheme, scale: ReadingScale, bob, bob_scale):
    if bob is None:
        pointer = coarse_grain(alice.Z, scale)
        bob = build_lueders_scheme(pointer) if pointer.is_sharp() else build_naimark_scheme(pointer)
    if bob.sys_dim != alice.anc_dim:
        raise DimensionError(f"Bob's scheme acts on dim {bob.sys_dim}, Alice's pointer lives in dim {alice.anc_dim}")
    bob_scale = bob_scale or ReadingScale.singletons(bob.Z)
    bob_scale.check_covers(bob.Z)
    if set(bob_scale.names) != set(scale.names):
        raise ScaleError(f"Bob reads bins {list(bob_scale.names)}, Alice records {list(scale.names)}")
    e = coarse_grain(induced_observable(bob), bob_scale)
    return [e.effect(n) for n in scale.names]


def cpl_terms(alice, scale, rho, bob=None, bob_scale=None, tol: Tolerances = DEFAULT_TOL) -> CplTerms:
    """Ingredients of the match probability.

    ``alice[i] = p^E_rho(X_i)``; ``bob_unconditioned[i]`` is Bob's
    probability of ``X_i`` on ``sigma^f``; ``bob_given_alice[i]`` is his
    probability of ``X_i`` on ``sigma^f(X_i)`` (zero where Alice's bin has
    zero probability).
    """
    scale = scale or ReadingScale.singletons(alice.Z)
    scale.check_covers(alice.Z)
    bob_e = _bob_effects(alice, scale, bob, bob_scale)
    _, sigma_f = final_states(alice, rho)
    p, q, g = [], [], []
    for labels, e in zip(scale.bins, bob_e):
        sys, anc = unnormalized_conditional_pair(alice, rho, labels)
        p_i = float(np.real(np.trace(sys)))
        p.append(p_i)
        q.append(float(np.real(np.trace(sigma_f.rho @ e))))
        if p_i > tol.eq_tol:
            g.append(float(np.real(np.trace(anc @ e) / np.trace(anc))))
        else:
            g.append(0.0)
    return CplTerms(scale.names, np.array(p), np.array(q), np.array(g))


def cpl_match_probability(
    alice: MeasurementScheme,
    scale: ReadingScale | None,
    rho,
    semantics=LOCAL,
    bob: MeasurementScheme | None = None,
    bob_scale: ReadingScale | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> float:
    """Probability that Bob, reading Alice's pointer, finds Alice's bin.

    LOCAL: Bob measures the uncollapsed ``sigma^f``; the result is
    ``sum_i p_i q_i``.  GLOBAL: Bob measures ``sigma^f(X_k)`` for Alice's
    recorded ``X_k``; the result is ``sum_i p_i p^Z_{sigma^f(X_i)}(X_i)``.
    Bob's scheme defaults to a Lueders measurement of Alice's coarse-grained
    pointer.
    """
    semantics = CollapseSemantics.parse(semantics)
    t = cpl_terms(alice, scale, rho, bob, bob_scale, tol)
    if semantics is LOCAL:
        return float(t.alice @ t.bob_unconditioned)
    return float(t.alice @ t.bob_given_alice)


@dataclass(frozen=True, eq=False)
class StageRecord:
    stage: int
    observer: str
    event: InteractionEvent
    input_state: State
    partner_view: tuple | None


@dataclass(frozen=True, eq=False)
class SequentialTrace:
    stages: tuple
    biobservable_tables: tuple
    ledger: PerspectiveLedger


def sequential_perspectives_run(
    ledger: PerspectiveLedger,
    stages,
    rho,
    rng,
    target="S",
    semantics=LOCAL,
    tol: Tolerances = DEFAULT_TOL,
) -> SequentialTrace:
    """Let a sequence of observers interact with ``target`` in turn.

    ``stages`` is a list of ``(scheme, scale, observer_id)``.  Each stage
    acts on the target's third-party state left by the previous stage
    (``rho^f`` under LOCAL semantics).  For stage ``k > 1`` the trace also
    gives ``partner_view``: the bin distribution of stage ``k`` evaluated on
    the state the previous partner holds for the target.

    ``biobservable_tables[k]`` is the sequential-probability table of
    stages ``k`` and ``k+1`` on the input state of stage ``k``, i.e. the
    joint perspective on the same pair of interactions.
    """
    sampler = _sampler(rng)
    state = rho if isinstance(rho, State) else State(rho, tol)
    if target not in ledger.initial:
        ledger = ledger.with_system(target, state)
    records = []
    inputs = []
    prev_partner = None
    for i, (m, scale, observer) in enumerate(stages):
        scale = scale or ReadingScale.singletons(m.Z)
        inputs.append(state)
        view = None
        if prev_partner is not None:
            view = tuple(float(x) for x in bin_probabilities(m, prev_partner, scale))
        _, ledger = apply_interaction(
            ledger, m, scale, target, observer, state, sampler, semantics, interaction_id=f"s{i + 1}", tol=tol
        )
        event = ledger.events[-1]
        records.append(StageRecord(i + 1, observer, event, state, view))
        prev_partner = event.partner_state
        state = event.third_party_state
    tables = []
    for i in range(len(stages) - 1):
        (m1, s1, _), (m2, s2, _) = stages[i], stages[i + 1]
        bio = sequential_biobservable(m1, s1, m2, s2)
        tables.append((bio.row_names, bio.col_names, bio.table(inputs[i])))
    return SequentialTrace(tuple(records), tuple(tables), ledger)
