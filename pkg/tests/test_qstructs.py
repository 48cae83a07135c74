import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relmeas.errors import (
    DimensionError,
    EffectRangeError,
    LabelError,
    NormalizationError,
    PositivityError,
    ProbabilityRangeError,
    ScaleError,
    TraceError,
)
from relmeas.qstructs import (
    DiscreteObservable,
    Effect,
    ReadingScale,
    State,
    coarse_grain,
    distribution,
    is_objective,
    probability,
    spanning_states,
    trace_probability,
)

from oracles import KET0, PLUS, proj, random_density, random_povm, trine

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def sigma_z():
    return DiscreteObservable(["+1", "-1"], [proj([1, 0]), proj([0, 1])])


def test_state_validation():
    with pytest.raises(TraceError):
        State(np.eye(2))
    with pytest.raises(PositivityError):
        State(np.diag([1.5, -0.5]))
    with pytest.raises(DimensionError):
        State(np.ones((2, 3)) / 2)
    s = State(np.diag([1.0, -1e-12]) + np.diag([0.0, 1e-12]))
    assert s.dim == 2


def test_state_is_read_only():
    s = State.maximally_mixed(3)
    with pytest.raises(ValueError):
        s.rho[0, 0] = 1.0


def test_purity():
    assert State.pure(PLUS).is_pure()
    assert not State.maximally_mixed(2).is_pure()
    assert abs(State.maximally_mixed(4).purity() - 0.25) <= 1e-12


def test_effect_validation():
    with pytest.raises(EffectRangeError):
        Effect(2 * np.eye(2))
    with pytest.raises(PositivityError):
        Effect(-np.eye(2))
    e = Effect(np.diag([0.3, 1.0]))
    assert np.allclose(e.complement().op, np.diag([0.7, 0.0]))
    assert not e.is_projection()
    assert Effect(proj(PLUS)).is_projection()


def test_observable_validation():
    with pytest.raises(NormalizationError):
        DiscreteObservable(["a", "b"], [proj([1, 0]), proj([1, 0])])
    with pytest.raises(LabelError):
        DiscreteObservable(["a", "a"], [proj([1, 0]), proj([0, 1])])
    with pytest.raises(DimensionError):
        DiscreteObservable(["a"], [np.eye(2), np.eye(3)])


def test_probability_eigenstate_and_superposition():
    z = sigma_z()
    assert probability(z, State.pure(KET0), ["+1"]) == 1.0
    assert abs(probability(z, State.pure(PLUS), ["+1"]) - 0.5) <= 1e-12
    assert abs(probability(z, State.pure(PLUS), "+1") - 0.5) <= 1e-12


def test_probability_trine_direct_trace():
    effects = trine()
    obs = DiscreteObservable(["t0", "t1", "t2"], effects)
    rho = State.maximally_mixed(2)
    for label, e in zip(obs.outcomes, effects):
        assert abs(probability(obs, rho, [label]) - np.trace(rho.rho @ e).real) <= 1e-12
        assert abs(probability(obs, rho, [label]) - 1 / 3) <= 1e-12


def test_probability_errors():
    z = sigma_z()
    with pytest.raises(LabelError):
        probability(z, State.pure(KET0), ["0"])
    with pytest.raises(DimensionError):
        probability(z, State.maximally_mixed(3), ["+1"])
    with pytest.raises(ProbabilityRangeError):
        trace_probability(np.eye(2), np.eye(2))


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(2, 6), st.integers(1, 6))
def test_probabilities_sum_to_one(seed, d, k):
    rng = np.random.default_rng(seed)
    obs = DiscreteObservable([f"o{i}" for i in range(k)], random_povm(rng, d, k))
    rho = State(random_density(rng, d))
    p = distribution(obs, rho)
    assert abs(p.sum() - 1.0) <= 1e-9
    assert np.all((p >= 0) & (p <= 1))


def test_reading_scale_validation():
    with pytest.raises(ScaleError):
        ReadingScale([["a"], ["a", "b"]])
    with pytest.raises(ScaleError):
        ReadingScale([[]])
    with pytest.raises(ScaleError):
        ReadingScale([["a"], ["b"]], names=["x", "x"])
    scale = ReadingScale([["a"], ["b", "c"]])
    assert scale.names == ("a", "{b,c}")
    with pytest.raises(ScaleError):
        scale.check_covers(sigma_z())


def test_coarse_grain_singletons_and_trivial():
    z = sigma_z()
    same = coarse_grain(z, ReadingScale.singletons(z))
    for label in z.outcomes:
        assert np.allclose(same.effect(label), z.effect(label))
    triv = coarse_grain(z, ReadingScale.trivial(z))
    assert triv.outcomes == ("Omega",)
    assert np.allclose(triv.effect("Omega"), np.eye(2))


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 5), st.integers(2, 6))
def test_coarse_grain_additivity(seed, d, k):
    rng = np.random.default_rng(seed)
    labels = [f"w{i}" for i in range(k)]
    obs = DiscreteObservable(labels, random_povm(rng, d, k))
    cut = int(rng.integers(1, k))
    scale = ReadingScale([labels[:cut], labels[cut:]], names=["lo", "hi"])
    rho = State(random_density(rng, d))
    coarse = coarse_grain(obs, scale)
    assert abs(probability(coarse, rho, ["lo"]) - probability(obs, rho, labels[:cut])) <= 1e-12
    direct = sum(np.trace(rho.rho @ obs.effect(x)).real for x in labels[cut:])
    assert abs(probability(coarse, rho, ["hi"]) - direct) <= 1e-9


def test_is_objective():
    assert is_objective(Effect(np.eye(2)), State.pure(PLUS))
    assert not is_objective(Effect(proj(KET0)), State.pure(PLUS))
    assert is_objective(Effect(proj(KET0)), State.pure(KET0))


def test_sharpness():
    assert sigma_z().is_sharp()
    assert not DiscreteObservable(["a", "b", "c"], trine()).is_sharp()


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_spanning_states_span_hermitian_space(d):
    states = spanning_states(d)
    assert len(states) == d * d
    vecs = np.array([s.rho.ravel() for s in states])
    assert np.linalg.matrix_rank(vecs) == d * d
