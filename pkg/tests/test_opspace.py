import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conegroup.cones import (
    CapabilityError,
    Operator,
    Verdict,
    dual,
    ice_cream,
    member,
    orthant,
    sample,
)
from conegroup.gallery import cone_3_1, generator_3_1
from conegroup.linalg import expm, rank1
from conegroup.opspace import (
    Generators,
    OpFunctional,
    SProcedure,
    Sampling,
    dual_functional_combo,
    lift_left_mult,
    op_cone_interior,
    op_cone_margins,
    op_cone_member,
    phi_apply,
    unvec,
    vec,
)

TOL = 1e-9
K31 = cone_3_1()
A31 = generator_3_1()


def rank1_sum(base, count, seed):
    xs = sample(base, count, seed=seed, region="cone")
    ys = sample(dual(base), count, seed=seed + 1, region="cone")
    return sum(rank1(x, y) for x, y in zip(xs, ys))


# --- vectorisation --------------------------------------------------------------

def test_vec_is_column_stacking():
    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(vec(M), [1.0, 3.0, 2.0, 4.0])
    assert np.array_equal(unvec(vec(M)), M)


def test_unvec_rejects_non_square_length():
    with pytest.raises(ValueError):
        unvec(np.ones(5))


# --- membership -----------------------------------------------------------------

@pytest.mark.parametrize("base", [orthant(3), ice_cream(3), K31])
def test_identity_is_member(base):
    m = op_cone_member(np.eye(base.dim), base)
    assert m.verdict is not Verdict.OUTSIDE and m.margin >= 0


def test_exp_at_first_exit_time_is_outside():
    T = expm(A31, 0.25)
    m = op_cone_member(T, K31, SProcedure())
    assert m.verdict is Verdict.OUTSIDE
    x = np.array([1.0, 1.0, 0.0, 1.0])
    assert np.allclose(T @ x, [1.25, 1.0, 2.0, 0.0])
    z = T @ x
    assert 2 * z[0] * z[1] < z[1] ** 2 + z[2] ** 2 + z[3] ** 2


def test_rank_one_interior_pair_is_interior():
    x0 = np.array([1.0, 0.5, 0.0, 0.0])
    xp0 = np.array([1.0, 0.5, 0.0, 0.0])
    assert member(K31, x0, TOL).verdict is Verdict.INTERIOR
    assert member(dual(K31), xp0, TOL).verdict is Verdict.INTERIOR
    T = rank1(x0, xp0)
    assert op_cone_member(T, K31, SProcedure()).verdict is Verdict.INTERIOR
    assert op_cone_interior(T, K31).verdict is Verdict.INTERIOR


def test_method_base_mismatch():
    with pytest.raises(ValueError):
        op_cone_member(np.eye(3), ice_cream(3), Generators())
    with pytest.raises(ValueError):
        op_cone_member(np.eye(3), orthant(3), SProcedure())


def test_shape_mismatch():
    with pytest.raises(ValueError):
        op_cone_member(np.eye(2), orthant(3))


def test_generators_method_on_orthant():
    assert op_cone_member(np.array([[1.0, 2.0], [0.0, 1.0]]), orthant(2)).is_member
    m = op_cone_member(np.array([[1.0, -2.0], [0.0, 1.0]]), orthant(2))
    assert m.verdict is Verdict.OUTSIDE
    assert np.allclose(m.witness, [0.0, 1.0])


def test_sampling_outside_and_inconclusive():
    m = op_cone_member(expm(A31, 0.25), K31, Sampling(count=4000, seed=0))
    assert m.verdict is Verdict.OUTSIDE and not m.inconclusive
    m = op_cone_member(np.eye(4), K31, Sampling(count=200, seed=0))
    assert m.verdict is Verdict.BOUNDARY and m.inconclusive


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_generators_exact_vs_sampling(seed):
    rng = np.random.default_rng(seed)
    T = rng.normal(size=(3, 3)) + 1.5
    exact = op_cone_member(T, orthant(3))
    sampled = op_cone_member(T, orthant(3), Sampling(count=500, seed=seed))
    if exact.verdict is Verdict.OUTSIDE and exact.margin < -1e-3:
        # 500 points may miss a thin violating region, never the reverse
        assert sampled.verdict in (Verdict.OUTSIDE, Verdict.BOUNDARY)
    if exact.is_member:
        assert sampled.verdict is not Verdict.OUTSIDE


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.0, 0.5, 1.0]))
def test_sprocedure_consistent_with_sampling(seed, shift):
    rng = np.random.default_rng(seed)
    T = rng.normal(size=(4, 4)) * 0.3 + np.eye(4) * (1 + shift)
    m = op_cone_member(T, K31, SProcedure())
    if m.verdict is Verdict.OUTSIDE:
        x = m.witness
        assert member(K31, x, TOL).margin >= -1e-8
        assert member(K31, T @ x, TOL).margin < 0
    else:
        xs = np.array(sample(K31, 10_000, seed=seed, region="cone"))
        from conegroup.cones import batch_margins
        assert batch_margins(K31, xs @ T.T).min() >= -1e-8


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_exit_times_witness(n):
    m = op_cone_member(expm(A31, n - 0.75), K31, SProcedure())
    assert m.verdict is Verdict.OUTSIDE
    assert member(K31, expm(A31, n - 0.75) @ m.witness, TOL).verdict is Verdict.OUTSIDE


def test_margins_vectorised_agree():
    Ts = np.array([expm(A31, t) for t in np.linspace(0, 2, 9)])
    batch = op_cone_margins(Ts, K31)
    single = [op_cone_member(T, K31).margin for T in Ts]
    assert np.allclose(batch, single, atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_operator_cone_is_pointed(seed):
    base = [orthant(3), ice_cream(3)][seed % 2]
    T = rank1_sum(base, 3, seed)
    assert op_cone_member(T, base).is_member
    if op_cone_member(-T, base).is_member:
        assert np.linalg.norm(T, 2) <= 1e-10


def test_operator_cone_spec_delegates():
    cone = Operator(K31)
    assert member(cone, vec(np.eye(4)), TOL).is_member
    assert member(cone, expm(A31, 0.25), TOL).verdict is Verdict.OUTSIDE


# --- interior -------------------------------------------------------------------

def test_interior_identity_on_ice_is_boundary():
    assert op_cone_interior(np.eye(3), ice_cream(3)).verdict is Verdict.BOUNDARY


def test_interior_of_zero():
    assert op_cone_interior(np.zeros((3, 3)), ice_cream(3)).verdict is not Verdict.INTERIOR
    assert op_cone_member(np.zeros((3, 3)), ice_cream(3)).verdict is Verdict.BOUNDARY


def test_interior_budget_too_small():
    with pytest.raises(ValueError, match="budget"):
        op_cone_interior(np.eye(3), ice_cream(3), budget=5)


# --- functionals ----------------------------------------------------------------

def test_phi_apply_examples():
    e1, e2 = np.eye(2)
    assert phi_apply(OpFunctional(e1, e2), np.array([[0.0, 0.0], [1.0, 0.0]])) == 1.0
    assert phi_apply(OpFunctional(np.zeros(2), e2), np.ones((2, 2))) == 0.0
    x, xp = np.array([1.0, 2.0]), np.array([3.0, -1.0])
    assert phi_apply(OpFunctional(x, xp), np.eye(2)) == pytest.approx(xp @ x)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_phi_apply_is_trace(seed):
    rng = np.random.default_rng(seed)
    x, xp, M = rng.normal(size=3), rng.normal(size=3), rng.normal(size=(3, 3))
    f = OpFunctional(x, xp)
    val = phi_apply(f, M)
    assert val == pytest.approx(np.trace(M @ rank1(x, xp)), rel=1e-12, abs=1e-12)
    assert val == pytest.approx(f.vector() @ vec(M), rel=1e-12, abs=1e-12)


def test_phi_dimension_mismatch():
    with pytest.raises(ValueError):
        OpFunctional(np.ones(2), np.ones(3))
    with pytest.raises(ValueError):
        phi_apply(OpFunctional(np.ones(2), np.ones(2)), np.eye(3))


def test_lift_examples():
    assert np.array_equal(lift_left_mult(np.eye(3)), np.eye(9))
    out = unvec(lift_left_mult(np.diag([1.0, 2.0])) @ vec(np.eye(2)))
    assert np.array_equal(out, np.diag([1.0, 2.0]))
    E = expm(lift_left_mult(A31), 1.0) @ vec(np.eye(4))
    assert np.allclose(unvec(E), expm(A31, 1.0), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_lift_is_left_multiplication(seed):
    rng = np.random.default_rng(seed)
    A, M = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
    assert np.allclose(unvec(lift_left_mult(A) @ vec(M)), A @ M, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 10))
def test_adjoint_identity(seed, t):
    rng = np.random.default_rng(seed)
    (x,) = sample(K31, 1, seed=seed, region="cone")
    (xp,) = sample(dual(K31), 1, seed=seed + 1, region="cone")
    M = rng.normal(size=(4, 4))
    lhs = phi_apply(OpFunctional(x, xp), expm(A31, t) @ M)
    rhs = phi_apply(OpFunctional(x, expm(A31.T, t) @ xp), M)
    scale = 1 + np.linalg.norm(M, 2) * np.linalg.norm(x) * np.linalg.norm(xp) * np.exp(
        np.linalg.norm(A31, 2) * t)
    assert abs(lhs - rhs) <= 1e-8 * scale


def test_combo_examples():
    f = OpFunctional(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert dual_functional_combo([f], [1.0])(M) == phi_apply(f, M)
    assert dual_functional_combo([], [], dim=2)(M) == 0.0


def test_combo_nonnegative_on_operator_cone():
    xs = sample(K31, 10, seed=0, region="cone")
    ys = sample(dual(K31), 10, seed=1, region="cone")
    psi = dual_functional_combo([OpFunctional(x, y) for x, y in zip(xs, ys)],
                                np.linspace(0.1, 1.0, 10))
    for seed in range(20):
        M = rank1_sum(K31, 3, 100 + seed)
        assert psi(M) >= -1e-10


def test_combo_rejects_bad_weights():
    f = OpFunctional(np.ones(2), np.ones(2))
    with pytest.raises(ValueError, match="weight"):
        dual_functional_combo([f], [-1.0])
    with pytest.raises(ValueError):
        dual_functional_combo([f, f], [1.0])
    with pytest.raises(CapabilityError):
        dual_functional_combo([f] * 5, [1.0] * 5)
