import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relmeas.correl import (
    Coupling,
    correlated_projection_pairs,
    correlation_coefficient,
    correlation_probabilities,
    coupling_from_joint_state,
    dependence_line,
    schmidt,
    strongly_correlated_effects,
    strongly_correlated_observables,
)
from relmeas.errors import DimensionError, NormError, SubspaceError
from relmeas.qstructs import DiscreteObservable, ReadingScale

from oracles import BELL, KET0, MINUS, PLUS, partial_trace_loops, proj, random_pure_vector

seeds = st.integers(min_value=0, max_value=2**32 - 1)
HAD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def sigma_z():
    return DiscreteObservable(["+1", "-1"], [proj([1, 0]), proj([0, 1])])


def sigma_x():
    return DiscreteObservable(["+", "-"], [proj(PLUS), proj(MINUS)])


# ------------------------------------------------------------------ couplings


def test_coupling_validation():
    with pytest.raises(DimensionError):
        Coupling([0, 1], [0], np.eye(2) / 2)
    with pytest.raises(ValueError):
        Coupling([0, 1], [0, 1], np.eye(2))
    with pytest.raises(ValueError):
        Coupling([0, 1], [0, 1], [[1.5, -0.5], [0, 0]])


def test_diagonal_and_antidiagonal_couplings():
    diag = Coupling([0, 1], [0, 1], np.eye(2) / 2)
    anti = Coupling([0, 1], [0, 1], np.fliplr(np.eye(2)) / 2)
    assert correlation_coefficient(diag, [0, 1], [0, 1]).coefficient == pytest.approx(1.0, abs=1e-12)
    assert correlation_coefficient(anti, [0, 1], [0, 1]).coefficient == pytest.approx(-1.0, abs=1e-12)
    a, b = dependence_line(diag, [0, 1], [5, 7])
    # x = a y + b on the support: 0 = 5a + b, 1 = 7a + b
    assert a == pytest.approx(0.5) and b == pytest.approx(-2.5)
    a, b = dependence_line(anti, [0, 1], [0, 1])
    assert a == pytest.approx(-1.0) and b == pytest.approx(1.0)


def test_product_coupling_is_uncorrelated():
    c = Coupling.product([0.3, 0.7], [0.6, 0.4])
    corr = correlation_coefficient(c, [1, -1], [2, 3])
    assert corr.coefficient == pytest.approx(0.0, abs=1e-12)
    assert dependence_line(c, [1, -1], [2, 3]) is None


def test_point_measure_marginal_is_undefined():
    c = Coupling([0, 1], [0, 1], [[0.5, 0.5], [0, 0]])
    corr = correlation_coefficient(c, [0, 1], [0, 1])
    assert not corr.defined and corr.covariance == 0.0
    assert dependence_line(c, [0, 1], [0, 1]) is None


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(2, 5), st.integers(2, 5))
def test_coefficient_matches_numpy_corrcoef_weights(seed, m, n):
    rng = np.random.default_rng(seed)
    g = rng.random((m, n))
    g /= g.sum()
    x, y = rng.normal(size=m), rng.normal(size=n)
    c = Coupling(range(m), range(n), g)
    # weighted Pearson by explicit double sums
    ex = sum(g[i, j] * x[i] for i in range(m) for j in range(n))
    ey = sum(g[i, j] * y[j] for i in range(m) for j in range(n))
    cov = sum(g[i, j] * (x[i] - ex) * (y[j] - ey) for i in range(m) for j in range(n))
    vx = sum(g[i, j] * (x[i] - ex) ** 2 for i in range(m) for j in range(n))
    vy = sum(g[i, j] * (y[j] - ey) ** 2 for i in range(m) for j in range(n))
    r = correlation_coefficient(c, x, y)
    assert r.coefficient == pytest.approx(cov / np.sqrt(vx * vy), abs=1e-9)
    assert -1.0 <= r.coefficient <= 1.0


def test_coupling_from_joint_state():
    bell = proj(BELL)
    c = coupling_from_joint_state(bell, proj([1, 0]), proj([1, 0]))
    assert np.allclose(c.gamma, np.eye(2) / 2)
    assert correlation_coefficient(c, [0, 1], [0, 1]).coefficient == pytest.approx(1.0)
    prod = np.kron(proj(PLUS), proj(KET0))
    c = coupling_from_joint_state(prod, proj([1, 0]), proj([1, 0]))
    assert np.allclose(c.gamma, [[0, 0.5], [0, 0.5]])
    with pytest.raises(DimensionError):
        coupling_from_joint_state(np.eye(3) / 3, proj([1, 0]), proj([1, 0]))


# ------------------------------------------------------------------ strong correlation


def test_strongly_correlated_effects_examples():
    bell = proj(BELL)
    assert strongly_correlated_effects(bell, proj([1, 0]), proj([1, 0]))
    assert not strongly_correlated_effects(bell, proj([1, 0]), proj([0, 1]))
    assert strongly_correlated_effects(bell, proj(PLUS), proj(PLUS))
    assert correlation_probabilities(bell, proj([1, 0]), proj([0, 1])) == pytest.approx((0.5, 0.5, 0.0))


def test_pairing_for_bell_state():
    bell = proj(BELL)
    z, x = sigma_z(), sigma_x()
    pz = strongly_correlated_observables(bell, z, ReadingScale.singletons(z), z, ReadingScale.singletons(z))
    assert pz == {"+1": "+1", "-1": "-1"}
    px = strongly_correlated_observables(bell, x, ReadingScale.singletons(x), x, ReadingScale.singletons(x))
    assert px == {"+": "+", "-": "-"}
    assert strongly_correlated_observables(bell, z, ReadingScale.singletons(z), x, ReadingScale.singletons(x)) is None


def test_pairing_for_product_state_is_none():
    prod = np.kron(proj(KET0), proj(PLUS))
    z = sigma_z()
    assert strongly_correlated_observables(prod, z, ReadingScale.singletons(z), z, ReadingScale.singletons(z)) is None


def test_pairing_prefers_lowest_index_on_ties():
    # both bins of B are certain to be "one", trivial A bin pairs with either
    joint = np.kron(np.eye(2) / 2, proj([1, 0]))
    a = DiscreteObservable(["all"], [np.eye(2)])
    b = DiscreteObservable(["p", "q"], [np.eye(2), np.zeros((2, 2))])
    scale_b = ReadingScale([["p"], ["q"]])
    assert strongly_correlated_observables(joint, a, ReadingScale.singletons(a), b, scale_b) == {"all": "p"}


# ------------------------------------------------------------------ Schmidt


def test_schmidt_product():
    v = np.kron(KET0, PLUS)
    sd = schmidt(v, (2, 2))
    assert sd.lambdas == pytest.approx((1.0,)) and sd.multiplicities == (1,)
    assert np.allclose(sd.P[0], proj(KET0)) and np.allclose(sd.R[0], proj(PLUS))


def test_schmidt_bell_is_one_degenerate_group():
    sd = schmidt(BELL, (2, 2))
    assert sd.lambdas == pytest.approx((1 / np.sqrt(2),))
    assert sd.multiplicities == (2,)
    assert np.allclose(sd.P[0], np.eye(2)) and np.allclose(sd.R[0], np.eye(2))
    assert np.allclose(sd.vector(), BELL)


def test_schmidt_unequal_weights():
    v = np.sqrt(0.8) * np.kron(KET0, KET0) + np.sqrt(0.2) * np.kron([0, 1], [0, 1])
    sd = schmidt(v, (2, 2))
    assert sd.lambdas == pytest.approx((np.sqrt(0.8), np.sqrt(0.2)), abs=1e-12)
    assert sd.multiplicities == (1, 1)
    assert np.allclose(sd.P[0], proj(KET0)) and np.allclose(sd.R[1], proj([0, 1]))


def test_schmidt_rejects_unnormalized():
    with pytest.raises(NormError):
        schmidt(np.array([1, 0, 0, 1.0]), (2, 2))


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_schmidt_reconstruction_and_weights(seed, da, db):
    rng = np.random.default_rng(seed)
    v = random_pure_vector(rng, da * db)
    sd = schmidt(v, (da, db))
    assert np.linalg.norm(sd.vector() - v) <= 1e-9
    assert sum(n * lam**2 for n, lam in zip(sd.multiplicities, sd.lambdas)) == pytest.approx(1.0, abs=1e-9)
    assert all(a > b for a, b in zip(sd.lambdas, sd.lambdas[1:]))
    rho = np.outer(v, v.conj())
    rho_a = partial_trace_loops(rho, da, db, "B")
    rho_b = partial_trace_loops(rho, da, db, "A")
    for i, (lam, n) in enumerate(zip(sd.lambdas, sd.multiplicities)):
        w = n * lam**2
        assert np.trace(rho_a @ sd.P[i]).real == pytest.approx(w, abs=1e-9)
        assert np.trace(rho_b @ sd.R[i]).real == pytest.approx(w, abs=1e-9)
        for j in range(len(sd.lambdas)):
            joint = np.trace(rho @ np.kron(sd.P[i], sd.R[j])).real
            assert joint == pytest.approx(w if i == j else 0.0, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 4))
def test_group_pairs_are_strongly_correlated(seed, d):
    rng = np.random.default_rng(seed)
    v = random_pure_vector(rng, d * d)
    rho = np.outer(v, v.conj())
    for p, r in correlated_projection_pairs(schmidt(v, (d, d))):
        assert strongly_correlated_effects(rho, p, r)


# ------------------------------------------------------------------ refinements


def test_identity_refinement_gives_basis_pairs():
    sd = schmidt(BELL, (2, 2))
    pairs = correlated_projection_pairs(sd, {0: np.eye(2)})
    assert len(pairs) == 3
    assert all(np.isclose(np.trace(p).real, 1) for p, _ in pairs[1:])


def test_hadamard_refinement_of_bell():
    sd = schmidt(BELL, (2, 2))
    rho = proj(BELL)
    pairs = correlated_projection_pairs(sd, {0: HAD})
    for p, r in pairs:
        assert strongly_correlated_effects(rho, p, r)
    projs = [p for p, _ in pairs[1:]]
    # the refined pair is diagonal in some basis whose vectors are Hadamard images
    assert np.allclose(sum(projs), np.eye(2))


def test_refinement_in_group_coordinates():
    a = 0.6
    b = np.sqrt(1 - 2 * a * a)
    v = a * (np.kron([1, 0, 0], [1, 0, 0]) + np.kron([0, 1, 0], [0, 1, 0])) + b * np.kron([0, 0, 1], [0, 0, 1])
    sd = schmidt(v, (3, 3))
    assert sd.multiplicities == (2, 1)
    rho = np.outer(v, v.conj())
    pairs = correlated_projection_pairs(sd, {0: HAD})
    assert len(pairs) == 4
    for p, r in pairs:
        assert strongly_correlated_effects(rho, p, r)


def test_refinement_errors():
    sd = schmidt(np.sqrt(0.8) * np.kron(KET0, KET0) + np.sqrt(0.2) * np.kron([0, 1], [0, 1]), (2, 2))
    with pytest.raises(SubspaceError):
        correlated_projection_pairs(sd, {0: HAD})  # mixes two Schmidt groups
    with pytest.raises(SubspaceError):
        correlated_projection_pairs(sd, {5: np.eye(1)})
    with pytest.raises(SubspaceError):
        correlated_projection_pairs(schmidt(BELL, (2, 2)), {0: 2 * np.eye(2)})
