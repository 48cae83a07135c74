"""Measurement schemes, their instruments and the repeatability family.

A :class:`MeasurementScheme` couples a system ``H`` to an ancilla ``H'``
through a unitary ``U`` on ``H (x) H'`` (system major), starting from a
ready state ``sigma`` and reading a pointer observable ``Z``.  Everything
else here is derived from that 4-tuple:

* the induced system observable, ``E(X) = tr_H'[(I (x) sigma) U^+ (I (x) Z(X)) U]``;
* the instrument ``rho -> tr_H'[U(rho (x) sigma)U^+ (I (x) Z(X))]`` in Kraus form;
* operator-level predicates (first kind, repeatable, nondegenerate, d-ideal)
  that decide their "for every state" quantifier through dual maps.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import linalg
from .errors import (
    DimensionError,
    LabelError,
    NullEventError,
    SharpnessError,
    UnitarityError,
)
from .linalg import DEFAULT_TOL, Tolerances, dagger
from .qstructs import (
    DiscreteObservable,
    ReadingScale,
    State,
    coarse_grain,
    spanning_states,
)

KRAUS_WEIGHT_FLOOR = 1e-14


class MeasurementScheme:
    """The 4-tuple ``(H', U, sigma, Z)`` for a system of dimension ``sys_dim``."""

    def __init__(self, sys_dim, U, sigma: State, Z: DiscreteObservable, tol: Tolerances = DEFAULT_TOL):
        U = linalg.as_matrix(U, "U")
        anc_dim = sigma.dim
        if Z.dim != anc_dim:
            raise DimensionError(f"pointer dim {Z.dim} != ready-state dim {anc_dim}")
        if U.shape != (sys_dim * anc_dim, sys_dim * anc_dim):
            raise DimensionError(f"U has shape {U.shape}, expected {sys_dim * anc_dim}-square")
        defect = linalg.op_distance(dagger(U) @ U, np.eye(U.shape[0]))
        if defect > tol.eq_tol:
            raise UnitarityError(f"interaction is not unitary (||U^+U - I|| = {defect:.3e})")
        U = U.copy()
        U.setflags(write=False)
        self.sys_dim = int(sys_dim)
        self.anc_dim = anc_dim
        self.U = U
        self.sigma = sigma
        self.Z = Z

    @property
    def dims(self):
        return (self.sys_dim, self.anc_dim)

    @property
    def labels(self):
        return self.Z.outcomes

    def joint_state(self, rho):
        """``U (rho (x) sigma) U^+``."""
        rho = _rho(rho)
        if rho.shape[0] != self.sys_dim:
            raise DimensionError(f"state dim {rho.shape[0]} != system dim {self.sys_dim}")
        return self.U @ np.kron(rho, self.sigma.rho) @ dagger(self.U)

    def pointer_on_joint(self, labels):
        """``I (x) Z(X)``."""
        return np.kron(np.eye(self.sys_dim), self.Z.effect_of(labels))

    def __repr__(self):
        return f"MeasurementScheme(sys_dim={self.sys_dim}, anc_dim={self.anc_dim}, outcomes={list(self.labels)})"


def _rho(rho):
    return rho.rho if isinstance(rho, State) else linalg.as_matrix(rho, "rho")


def _scale_for(m: MeasurementScheme, scale):
    if scale is None:
        return ReadingScale.singletons(m.Z)
    scale.check_covers(m.Z)
    return scale


class Instrument:
    """Outcome-indexed completely positive maps in Kraus form.

    ``kraus_sets[name]`` is the list of Kraus operators ``A_k`` of the
    outcome ``name``; the outcome map is ``rho -> sum_k A_k rho A_k^+``.
    """

    def __init__(self, sys_dim, outcomes, kraus_sets, tol: Tolerances = DEFAULT_TOL):
        outcomes = tuple(outcomes)
        if set(outcomes) != set(kraus_sets):
            raise LabelError("kraus_sets keys must match outcomes")
        sets = {}
        total = np.zeros((sys_dim, sys_dim), dtype=np.complex128)
        for name in outcomes:
            ops = [linalg.as_matrix(a, "kraus") for a in kraus_sets[name]]
            for a in ops:
                if a.shape != (sys_dim, sys_dim):
                    raise DimensionError(f"Kraus operator of shape {a.shape} for dim {sys_dim}")
                total = total + dagger(a) @ a
            sets[name] = tuple(ops)
        defect = linalg.op_distance(total, np.eye(sys_dim))
        if defect > tol.eq_tol:
            raise ValueError(f"instrument is not trace preserving (defect {defect:.3e})")
        self.sys_dim = sys_dim
        self.outcomes = outcomes
        self.kraus_sets = sets

    @classmethod
    def lueders(cls, obs: DiscreteObservable, scale: ReadingScale | None = None):
        """``rho -> sum_{w in X} E(w) rho E(w)``; ``obs`` must be sharp."""
        if not obs.is_sharp():
            raise SharpnessError("Lueders instrument needs a sharp observable")
        scale = scale or ReadingScale.singletons(obs)
        scale.check_covers(obs)
        sets = {name: [obs.effect(w) for w in b] for name, b in zip(scale.names, scale.bins)}
        return cls(obs.dim, scale.names, sets)

    def _ops(self, name):
        try:
            return self.kraus_sets[name]
        except KeyError:
            raise LabelError(f"unknown instrument outcome {name!r}") from None

    def apply(self, name, rho):
        rho = _rho(rho)
        out = np.zeros_like(rho, dtype=np.complex128)
        for a in self._ops(name):
            out = out + a @ rho @ dagger(a)
        return out

    def dual(self, name, b):
        b = linalg.as_matrix(b)
        out = np.zeros_like(b, dtype=np.complex128)
        for a in self._ops(name):
            out = out + dagger(a) @ b @ a
        return out

    def total(self, rho):
        return sum(self.apply(n, rho) for n in self.outcomes)

    def total_dual(self, b):
        return sum(self.dual(n, b) for n in self.outcomes)

    def effect(self, name):
        """``I(X)^*(I)``."""
        return self.dual(name, np.eye(self.sys_dim))

    def __repr__(self):
        return f"Instrument(sys_dim={self.sys_dim}, outcomes={list(self.outcomes)})"


class BiObservable:
    """Two-index observable ``E12(X, Y)`` on a reading-scale grid."""

    def __init__(self, row_names, col_names, effects, tol: Tolerances = DEFAULT_TOL):
        effects = np.asarray(effects, dtype=np.complex128)
        r, c = len(row_names), len(col_names)
        if effects.shape[:2] != (r, c) or effects.ndim != 4:
            raise DimensionError(f"effects grid of shape {effects.shape} for {r}x{c} bins")
        dim = effects.shape[2]
        defect = linalg.op_distance(effects.sum(axis=(0, 1)), np.eye(dim))
        if defect > tol.eq_tol:
            raise ValueError(f"biobservable does not sum to I (defect {defect:.3e})")
        self.row_names = tuple(row_names)
        self.col_names = tuple(col_names)
        self.effects = effects
        self.dim = dim

    def effect(self, row, col):
        return self.effects[self.row_names.index(row), self.col_names.index(col)]

    def row_marginal(self):
        return DiscreteObservable(self.row_names, list(self.effects.sum(axis=1)))

    def col_marginal(self):
        return DiscreteObservable(self.col_names, list(self.effects.sum(axis=0)))

    def table(self, rho):
        rho = _rho(rho)
        return np.real(np.einsum("ij,rcji->rc", rho, self.effects))


def induced_observable(m: MeasurementScheme) -> DiscreteObservable:
    """The system observable whose statistics the pointer reproduces.

    ``E(w) = tr_H'[(I (x) sigma) U^+ (I (x) Z(w)) U]`` for each pointer label.
    """
    lift = np.kron(np.eye(m.sys_dim), m.sigma.rho)
    effects = []
    for label in m.labels:
        heis = dagger(m.U) @ m.pointer_on_joint([label]) @ m.U
        e = linalg.partial_trace(lift @ heis, m.dims, over="B")
        effects.append(0.5 * (e + dagger(e)))
    return DiscreteObservable(m.labels, effects)


def final_states(m: MeasurementScheme, rho):
    """``(rho^f, sigma^f)``: both marginals of ``U(rho (x) sigma)U^+``."""
    joint = m.joint_state(rho)
    return (
        State(linalg.partial_trace(joint, m.dims, over="B")),
        State(linalg.partial_trace(joint, m.dims, over="A")),
    )


def unnormalized_conditional_pair(m: MeasurementScheme, rho, labels):
    """Unnormalized conditional states of system and ancilla for the event ``X``.

    Returns ``(tr_H'[U(rho (x) sigma)U^+ (I (x) Z(X))],  Z(X) sigma^f Z(X))``.
    For a projection-valued pointer the first also equals the partial trace
    of the ``I (x) Z(X)`` sandwich.
    """
    joint = m.joint_state(rho)
    zx = m.pointer_on_joint(labels)
    sys = linalg.partial_trace(joint @ zx, m.dims, over="B")
    anc = linalg.partial_trace(zx @ joint @ zx, m.dims, over="A")
    return 0.5 * (sys + dagger(sys)), 0.5 * (anc + dagger(anc))


def conditional_state(m: MeasurementScheme, rho, labels, tol: Tolerances = DEFAULT_TOL) -> State:
    """Normalized ``rho^f(X)``; raises :class:`NullEventError` when ``p(X) ~ 0``."""
    sys, _ = unnormalized_conditional_pair(m, rho, labels)
    p = float(np.real(np.trace(sys)))
    if p <= tol.eq_tol:
        raise NullEventError(f"event {tuple(labels)} has probability {p:.3e}")
    return State(sys / p, tol)


def apparatus_conditional_state(m: MeasurementScheme, rho, labels, tol: Tolerances = DEFAULT_TOL) -> State:
    """Normalized ``sigma^f(X)``."""
    sys, anc = unnormalized_conditional_pair(m, rho, labels)
    p = float(np.real(np.trace(sys)))
    if p <= tol.eq_tol:
        raise NullEventError(f"event {tuple(labels)} has probability {p:.3e}")
    return State(anc / np.real(np.trace(anc)), tol)


def _components(op, floor=KRAUS_WEIGHT_FLOOR):
    w, v = linalg.eigh(op)
    return [(float(x), v[:, k]) for k, x in enumerate(w) if x > floor]


def instrument_of(m: MeasurementScheme, scale: ReadingScale | None = None) -> Instrument:
    """Kraus form of the scheme's instrument, one outcome per bin.

    The ready state and each pointer effect are eigen-expanded, giving
    ``A = sqrt(p_s z_k) (I (x) <z_k|) U (I (x) |phi_s>)`` for every
    ready-state component ``(p_s, phi_s)`` and pointer component
    ``(z_k, z_k)``; a pure ready state and sharp pointer give one operator
    per pointer eigenvector.
    """
    scale = _scale_for(m, scale)
    d, a = m.dims
    U4 = m.U.reshape(d, a, d, a)
    ready = _components(m.sigma.rho)
    sets = {}
    for name, bin_labels in zip(scale.names, scale.bins):
        ops = []
        for label in bin_labels:
            for z_weight, z in _components(m.Z.effect(label)):
                for p_weight, phi in ready:
                    block = np.einsum("a,iajb,b->ij", z.conj(), U4, phi)
                    ops.append(np.sqrt(z_weight * p_weight) * block)
        sets[name] = ops
    return Instrument(d, scale.names, sets)


def _dilation(obs: DiscreteObservable, kraus):
    """Unitary extending ``phi (x) e_0 -> sum_i (K_i phi) (x) e_i``.

    Columns ``j*n`` (ready component of each system basis vector) carry the
    isometry; the remaining columns, in index order, are filled by
    Gram-Schmidt over the canonical basis.
    """
    d, n = obs.dim, len(obs)
    total = d * n
    iso = np.zeros((total, d), dtype=np.complex128)
    for i, k in enumerate(kraus):
        iso[i::n, :] = k
    rest = linalg.complete_basis(iso, total)
    U = np.zeros((total, total), dtype=np.complex128)
    iso_cols = [j * n for j in range(d)]
    free_cols = [c for c in range(total) if c not in set(iso_cols)]
    U[:, iso_cols] = iso
    U[:, free_cols] = rest
    sigma = State.basis(n, 0)
    pointer = DiscreteObservable(obs.outcomes, [np.diag(np.eye(n)[i]) for i in range(n)])
    return MeasurementScheme(d, U, sigma, pointer)


def build_lueders_scheme(obs: DiscreteObservable) -> MeasurementScheme:
    """Dilation of the Lueders instrument of a sharp observable."""
    if not obs.is_sharp():
        raise SharpnessError("Lueders scheme needs a sharp (projection-valued) observable")
    return _dilation(obs, [e.op for e in obs.effects])


def build_naimark_scheme(povm: DiscreteObservable) -> MeasurementScheme:
    """Dilation through the Kraus operators ``sqrt(E_i)``; pure ready state, sharp pointer."""
    return _dilation(povm, [linalg.psd_sqrt(e.op) for e in povm.effects])


def with_outcome_kicks(m: MeasurementScheme, kicks) -> MeasurementScheme:
    """Follow ``m`` by a system unitary conditioned on the pointer outcome.

    ``kicks`` maps pointer labels to unitaries on ``H``; missing labels get
    the identity.  The pointer must be sharp for the result to be unitary.
    """
    d = m.sys_dim
    control = sum(
        np.kron(linalg.as_matrix(kicks.get(label, np.eye(d))), m.Z.effect(label)) for label in m.labels
    )
    return MeasurementScheme(d, control @ m.U, m.sigma, m.Z)


def _coarse_effects(m, scale):
    obs = coarse_grain(induced_observable(m), scale)
    return [obs.effect(name) for name in scale.names]


def is_first_kind(m: MeasurementScheme, scale: ReadingScale | None = None, tol: Tolerances = DEFAULT_TOL) -> bool:
    """``I(Omega)^*(E(X_i)) = E(X_i)`` for every bin."""
    scale = _scale_for(m, scale)
    inst = instrument_of(m, scale)
    return all(
        linalg.op_distance(inst.total_dual(e), e) <= tol.eq_tol for e in _coarse_effects(m, scale)
    )


def is_repeatable(m: MeasurementScheme, scale: ReadingScale | None = None, tol: Tolerances = DEFAULT_TOL) -> bool:
    """``I(X_i)^*(E(X_i)) = E(X_i)`` for every bin."""
    scale = _scale_for(m, scale)
    inst = instrument_of(m, scale)
    return all(
        linalg.op_distance(inst.dual(name, e), e) <= tol.eq_tol
        for name, e in zip(scale.names, _coarse_effects(m, scale))
    )


def dual_channel_matrix(inst: Instrument):
    """Matrix of ``B -> I(Omega)^*(B)`` acting on row-major ``vec(B)``."""
    d = inst.sys_dim
    s = np.zeros((d * d, d * d), dtype=np.complex128)
    for name in inst.outcomes:
        for a in inst.kraus_sets[name]:
            s = s + np.kron(dagger(a), a.T)
    return s


def is_nondegenerate(m: MeasurementScheme) -> bool:
    """The final system states separate effects, i.e. the dual channel is injective."""
    s = dual_channel_matrix(instrument_of(m))
    return linalg.rank(s) == m.sys_dim**2


def is_d_ideal(m: MeasurementScheme, scale: ReadingScale | None = None, tol: Tolerances = DEFAULT_TOL) -> bool:
    """States certain to give bin ``X_i`` are left unchanged by conditioning on it.

    Checked on a spanning set of pure states inside the eigenvalue-1
    eigenspace of each ``E(X_i)``.
    """
    scale = _scale_for(m, scale)
    for labels, e in zip(scale.bins, _coarse_effects(m, scale)):
        w, v = linalg.eigh(e)
        q = v[:, w >= 1.0 - tol.eq_tol]
        if q.shape[1] == 0:
            continue
        for local in spanning_states(q.shape[1]):
            rho = q @ local.rho @ dagger(q)
            cond = conditional_state(m, rho, labels, tol)
            if linalg.op_distance(cond.rho, rho) > tol.eq_tol:
                return False
    return True


class MixtureCheck(NamedTuple):
    system_mixture_holds: bool
    apparatus_mixture_holds: bool
    components_orthogonal: bool


def mixture_residuals(m: MeasurementScheme, rho, scale: ReadingScale | None = None, tol: Tolerances = DEFAULT_TOL):
    """Residuals behind :func:`mixture_decomposition_check`.

    Returns a dict with ``system`` (``||rho^f - sum_i p_i rho^f(X_i)||``),
    ``apparatus`` (same for ``sigma^f``) and ``overlap`` (largest
    ``||rho^f(X_i) rho^f(X_j)||``, ``i != j``), plus the bin probabilities.
    Bins with ``p_i <= eq_tol`` are left out of the mixtures.
    """
    scale = _scale_for(m, scale)
    rho_f, sigma_f = final_states(m, rho)
    sys_mix = np.zeros_like(rho_f.rho)
    anc_mix = np.zeros_like(sigma_f.rho)
    components = []
    probs = []
    for labels in scale.bins:
        sys, anc = unnormalized_conditional_pair(m, rho, labels)
        p = float(np.real(np.trace(sys)))
        probs.append(p)
        if p <= tol.eq_tol:
            continue
        sys_mix = sys_mix + sys
        anc_mix = anc_mix + p * anc / np.real(np.trace(anc))
        components.append(sys / p)
    overlap = 0.0
    for i, a in enumerate(components):
        for b in components[i + 1 :]:
            overlap = max(overlap, linalg.op_norm(a @ b))
    return {
        "system": linalg.op_distance(rho_f.rho, sys_mix),
        "apparatus": linalg.op_distance(sigma_f.rho, anc_mix),
        "overlap": overlap,
        "probabilities": probs,
    }


def mixture_decomposition_check(
    m: MeasurementScheme, rho, scale: ReadingScale | None = None, tol: Tolerances = DEFAULT_TOL
) -> MixtureCheck:
    """Do the final states decompose over the bins?

    ``system_mixture_holds``: ``rho^f = sum_i p_i rho^f(X_i)`` (always true).
    ``apparatus_mixture_holds``: ``sigma^f = sum_i p_i sigma^f(X_i)`` (may fail).
    ``components_orthogonal``: ``rho^f(X_i) rho^f(X_j) = 0`` for ``i != j``.
    """
    r = mixture_residuals(m, rho, scale, tol)
    return MixtureCheck(r["system"] <= tol.eq_tol, r["apparatus"] <= tol.eq_tol, r["overlap"] <= tol.eq_tol)


def value_correlation_probabilities(m: MeasurementScheme, rho, scale: ReadingScale | None = None):
    """Per bin: ``tr[U(rho (x) sigma)U^+ E(X) (x) Z(X)]``, ``p^Z_{sigma^f}(X)``, ``p^E_{rho^f}(X)``.

    Computed directly from the joint state (no instrument involved).
    Returns an array of shape ``(bins, 3)``.
    """
    scale = _scale_for(m, scale)
    joint = m.joint_state(rho)
    rho_f = linalg.partial_trace(joint, m.dims, over="B")
    sigma_f = linalg.partial_trace(joint, m.dims, over="A")
    rows = []
    for labels, e in zip(scale.bins, _coarse_effects(m, scale)):
        z = m.Z.effect_of(labels)
        rows.append(
            [
                np.real(np.trace(joint @ np.kron(e, z))),
                np.real(np.trace(sigma_f @ z)),
                np.real(np.trace(rho_f @ e)),
            ]
        )
    return np.array(rows)


def has_strong_value_correlation(
    m: MeasurementScheme, scale: ReadingScale | None = None, states=None, tol: Tolerances = DEFAULT_TOL
) -> bool:
    """The three probabilities of :func:`value_correlation_probabilities` agree
    on every state of ``states`` (a spanning set by default)."""
    if states is None:
        states = spanning_states(m.sys_dim)
    for st in states:
        table = value_correlation_probabilities(m, st, scale)
        if np.max(table.max(axis=1) - table.min(axis=1)) > tol.eq_tol:
            return False
    return True


def sequential_biobservable(
    m1: MeasurementScheme,
    scale1: ReadingScale | None,
    m2: MeasurementScheme,
    scale2: ReadingScale | None,
) -> BiObservable:
    """``E12(X, Y) = I1(X)^*(E2(Y))`` for the measurement ``m1`` followed by ``m2``."""
    if m1.sys_dim != m2.sys_dim:
        raise DimensionError(f"schemes act on dims {m1.sys_dim} and {m2.sys_dim}")
    scale1 = _scale_for(m1, scale1)
    scale2 = _scale_for(m2, scale2)
    inst1 = instrument_of(m1, scale1)
    inst2 = instrument_of(m2, scale2)
    grid = np.array(
        [[inst1.dual(x, inst2.effect(y)) for y in scale2.names] for x in scale1.names]
    )
    return BiObservable(scale1.names, scale2.names, grid)


def sequential_probabilities(m1, scale1, m2, scale2, rho):
    """``tr[I2(Y)(I1(X)(rho))]`` by composing the channels forward."""
    scale1 = _scale_for(m1, scale1)
    scale2 = _scale_for(m2, scale2)
    inst1 = instrument_of(m1, scale1)
    inst2 = instrument_of(m2, scale2)
    return np.array(
        [
            [np.real(np.trace(inst2.apply(y, inst1.apply(x, rho)))) for y in scale2.names]
            for x in scale1.names
        ]
    )
