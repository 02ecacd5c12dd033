import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conegroup.cones import Polyhedral, Verdict, dual, ice_cream, member, orthant
from conegroup.eventual import (
    CheckVerdict,
    Notion,
    check,
    classify_eventual_positivity,
    dualize_check,
    perron_data,
)
from conegroup.gallery import cone_3_1, generator_3_1
from conegroup.linalg import expm

TOL = 1e-9
K31 = cone_3_1()
A31 = generator_3_1()
HOLDS, VIOLATED, INCONCLUSIVE = CheckVerdict.HOLDS, CheckVerdict.VIOLATED, CheckVerdict.INCONCLUSIVE
SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


def rotation_generator():
    return np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -2 * np.pi], [0.0, 2 * np.pi, 0.0]])


# --- notions ------------------------------------------------------------------

@pytest.mark.parametrize("name, notion", [
    ("uniform-nonneg", Notion.UNIFORM_NONNEG), ("IndividualPos", Notion.INDIVIDUAL_POS),
    ("weak_pos", Notion.WEAK_POS), (Notion.WEAK_NONNEG, Notion.WEAK_NONNEG),
])
def test_notion_parse(name, notion):
    assert Notion.parse(name) is notion


def test_notion_parse_rejects_unknown():
    with pytest.raises(ValueError, match="unknown notion"):
        Notion.parse("strong-pos")


def test_notion_cli_names_round_trip():
    for n in Notion:
        assert Notion.parse(n.cli_name) is n


# --- classification ---------------------------------------------------------------

def test_classify_swap_is_positive():
    cert = classify_eventual_positivity(SWAP, orthant(2))
    assert cert.positive and cert.verdict == "Positive"
    assert cert.spectral_bound == pytest.approx(1.0)
    assert cert.dominance_gap == pytest.approx(2.0)
    assert (cert.geometric_mult, cert.algebraic_mult) == (1, 1)
    assert np.allclose(np.abs(cert.eigvec), np.ones(2) / np.sqrt(2))
    assert cert.eigvec_interior_margin > TOL and cert.dual_eigvec_interior_margin > TOL


def test_classify_rotation_not_positive():
    cert = classify_eventual_positivity(rotation_generator(), ice_cream(3))
    assert not cert.positive
    assert cert.dominance_gap <= TOL


def test_classify_example_generator_not_positive():
    cert = classify_eventual_positivity(A31, K31)
    assert not cert.positive
    assert cert.algebraic_mult == 2
    assert abs(cert.dominance_gap) <= 1e-8


def test_classify_spectral_bound_not_eigenvalue():
    A = np.array([[-1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
    cert = classify_eventual_positivity(A, orthant(3))
    assert not cert.positive
    assert cert.reason == "spectral bound not an eigenvalue"


def test_classify_eigenvector_not_interior():
    cert = classify_eventual_positivity(np.diag([1.0, 0.0]), orthant(2))
    assert not cert.positive
    assert "eigenvector not interior" in cert.reasons


def test_classify_marginal_dominance():
    # a complex pair trails the real bound by 1e-12
    A = np.zeros((3, 3))
    A[0, 0] = 1.0
    A[1:, 1:] = [[1.0 - 1e-12, 1.0], [-1.0, 1.0 - 1e-12]]
    cert = classify_eventual_positivity(A, orthant(3))
    assert not cert.positive
    assert "marginal dominance" in cert.reasons


def test_certificate_verdict_rule():
    rng = np.random.default_rng(2)
    for _ in range(30):
        A = rng.normal(size=(3, 3)) + rng.uniform(0, 2)
        c = classify_eventual_positivity(A, orthant(3))
        rule = (c.dominance_gap > TOL * max(1.0, np.linalg.norm(A, 2))
                and c.geometric_mult == 1 and c.algebraic_mult == 1
                and c.eigvec_interior_margin > TOL and c.dual_eigvec_interior_margin > TOL)
        assert c.positive == rule


@pytest.mark.parametrize("shift", [-2.0, 3.0])
@pytest.mark.parametrize("A, cone", [
    (SWAP, orthant(2)), (rotation_generator(), ice_cream(3)), (A31, K31),
    (np.array([[1.0, 2.0, 0.5], [0.3, 0.1, 1.0], [1.0, 0.2, 0.4]]), orthant(3)),
])
def test_shift_equivariance(A, cone, shift):
    a = classify_eventual_positivity(A, cone)
    b = classify_eventual_positivity(A + shift * np.eye(A.shape[0]), cone)
    assert b.spectral_bound == pytest.approx(a.spectral_bound + shift, abs=1e-9)
    assert a.positive == b.positive and a.reasons == b.reasons
    assert (a.geometric_mult, a.algebraic_mult) == (b.geometric_mult, b.algebraic_mult)
    for f in ("eigvec_interior_margin", "dual_eigvec_interior_margin"):
        assert getattr(b, f) == pytest.approx(getattr(a, f), abs=1e-8)


def test_classify_rejects_operator_cone():
    from conegroup.cones import Operator
    with pytest.raises(ValueError):
        classify_eventual_positivity(np.eye(4), Operator(orthant(2)))


# --- Perron data -----------------------------------------------------------------

def test_perron_example_generator():
    p = perron_data(A31, K31)
    assert p.spectral_bound == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(p.eigvec, [1, 0, 0, 0], atol=1e-9)
    assert np.allclose(p.dual_eigvec, [0, 1, 0, 0], atol=1e-9)
    assert p.pole_order == 2
    assert member(K31, p.eigvec, TOL).verdict is Verdict.BOUNDARY
    assert member(dual(K31), p.dual_eigvec, TOL).is_member
    assert p.residue_nonneg


@pytest.mark.parametrize("A, s, v, vp, k", [
    (np.diag([3.0, 1.0]), 3.0, [1, 0], [1, 0], 1),
    (SWAP, 1.0, np.ones(2) / np.sqrt(2), np.ones(2) / np.sqrt(2), 1),
])
def test_perron_examples(A, s, v, vp, k):
    p = perron_data(A, orthant(2))
    assert p.spectral_bound == pytest.approx(s)
    assert np.allclose(p.eigvec, v) and np.allclose(p.dual_eigvec, vp)
    assert p.pole_order == k


@pytest.mark.parametrize("A, cone", [(A31, K31), (SWAP, orthant(2)), (np.diag([3.0, 1.0]), orthant(2)),
                                     (np.array([[1.0, 1.0], [0.0, 1.0]]), orthant(2))])
def test_perron_residuals(A, cone):
    p = perron_data(A, cone)
    n = A.shape[0]
    s = p.spectral_bound
    scale = TOL * max(np.linalg.norm(A, 2), 1.0)
    assert np.linalg.norm((s * np.eye(n) - A) @ p.eigvec) <= scale * np.linalg.norm(p.eigvec)
    assert np.linalg.norm((s * np.eye(n) - A.T) @ p.dual_eigvec) <= scale * np.linalg.norm(p.dual_eigvec)
    assert p.eigvec_margin >= -TOL


def test_perron_rejects_complex_bound():
    with pytest.raises(ValueError):
        perron_data(np.array([[0.0, -1.0], [1.0, 0.0]]), orthant(2))


# --- check: examples --------------------------------------------------------------

def test_uniform_example_violated_with_quarter_witnesses():
    rep = check(Notion.UNIFORM_NONNEG, A31, K31, t_max=20)
    assert rep.verdict is VIOLATED
    times = [w["t"] for w in rep.witnesses]
    for n in range(1, 6):
        assert any(abs(t - (n - 0.75)) <= 0.05 for t in times)


def test_uniform_witnesses_reverify():
    rep = check(Notion.UNIFORM_NONNEG, A31, K31, t_max=5)
    for w in rep.witnesses:
        x = w["x"]
        assert member(K31, x, TOL).margin >= -1e-8
        assert member(K31, expm(A31, w["t"]) @ x, TOL).verdict is Verdict.OUTSIDE


def test_individual_example_holds():
    rep = check(Notion.INDIVIDUAL_NONNEG, A31, K31, samples=200, seed=0)
    assert rep.verdict is HOLDS
    assert all(t is not None for t in rep.t0_per_sample)
    assert rep.samples_used == 200


@pytest.mark.parametrize("cone", [orthant(3), ice_cream(3), K31])
def test_weak_zero_generator(cone):
    rep = check(Notion.WEAK_NONNEG, np.zeros((cone.dim, cone.dim)), cone, t_max=5, samples=20)
    assert rep.verdict is HOLDS and rep.t0_estimate == 0.0


def test_uniform_rotation_holds_from_zero():
    rep = check(Notion.UNIFORM_NONNEG, rotation_generator(), ice_cream(3), t_max=10)
    assert rep.verdict is HOLDS and rep.t0_estimate == 0.0


def test_weak_pos_rotation_not_certified():
    rep = check(Notion.WEAK_POS, rotation_generator(), ice_cream(3), t_max=10, samples=40)
    assert rep.verdict is VIOLATED or (rep.verdict is INCONCLUSIVE and "oscillatory" in rep.flags)


def test_uniform_pos_after_positive_classification():
    A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]) + 0.1
    assert classify_eventual_positivity(A, orthant(3)).positive
    rep = check(Notion.UNIFORM_POS, A, orthant(3), t_max=20)
    assert rep.verdict is HOLDS and rep.t0_estimate is not None


def test_uniform_nonneg_eventual_not_immediate():
    # starts outside the orthant but e^{tA} becomes positive
    A = np.ones((3, 3))
    A[0, 1] = -0.5
    rep = check(Notion.UNIFORM_NONNEG, A, orthant(3), t_max=20)
    assert rep.verdict is HOLDS
    assert rep.t0_estimate > 0


def test_check_overflow_is_inconclusive():
    big = np.zeros((4, 4))
    big[:3, 1:] = 500 * np.eye(3)
    rep = check(Notion.UNIFORM_NONNEG, big, orthant(4), t_max=100)
    assert rep.verdict is INCONCLUSIVE
    assert any("overflow" in d for d in rep.diagnostics)


@pytest.mark.parametrize("kwargs", [dict(t_max=0), dict(step=-1), dict(samples=0)])
def test_check_rejects_bad_grid(kwargs):
    with pytest.raises(ValueError):
        check(Notion.WEAK_NONNEG, np.eye(2), orthant(2), **kwargs)


def test_check_dimension_mismatch():
    with pytest.raises(ValueError):
        check(Notion.UNIFORM_NONNEG, np.eye(3), orthant(2))


def test_check_is_deterministic():
    a = check(Notion.INDIVIDUAL_NONNEG, A31, K31, t_max=10, samples=30, seed=4).to_dict()
    b = check(Notion.INDIVIDUAL_NONNEG, A31, K31, t_max=10, samples=30, seed=4).to_dict()
    assert json.dumps(a) == json.dumps(b)


def test_report_serialises():
    rep = check(Notion.UNIFORM_NONNEG, A31, K31, t_max=3)
    d = json.loads(json.dumps(rep.to_dict(), allow_nan=False))
    assert d["notion"] == "UniformNonneg" and d["verdict"] == "Violated"
    assert d["grid"] == {"t_max": 3.0, "step": 0.05}
    assert all(len(w["x"]) == 4 for w in d["witnesses"])


def test_certificate_serialises():
    d = classify_eventual_positivity(SWAP, orthant(2)).to_dict()
    assert json.loads(json.dumps(d, allow_nan=False))["verdict"] == "Positive"
    d = perron_data(A31, K31).to_dict()
    assert d["pole_order"] == 2


# --- dualization ------------------------------------------------------------------

def test_dualize_uniform_example_both_violated():
    a, b = dualize_check(Notion.UNIFORM_NONNEG, A31, K31, t_max=10)
    assert a.verdict is VIOLATED and b.verdict is VIOLATED


def test_dualize_nonnegative_matrix():
    a, b = dualize_check(Notion.UNIFORM_NONNEG, np.array([[1.0, 1.0], [0.0, 1.0]]), orthant(2),
                         t_max=10)
    assert a.verdict is HOLDS and b.verdict is HOLDS
    assert a.t0_estimate == 0.0 and b.t0_estimate == 0.0


def test_dualize_weak_example_both_hold():
    a, b = dualize_check(Notion.WEAK_NONNEG, A31, K31, samples=50)
    assert a.verdict is HOLDS and b.verdict is HOLDS


def test_dualize_rejects_individual():
    with pytest.raises(ValueError):
        dualize_check(Notion.INDIVIDUAL_NONNEG, A31, K31)


# --- properties ---------------------------------------------------------------------

RANK = {HOLDS: 2, INCONCLUSIVE: 1, VIOLATED: 0}


def _random_cone(seed):
    if seed % 3 == 0:
        return orthant(3)
    if seed % 3 == 1:
        return ice_cream(3)
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(5, 3))
    G[:, 0] = np.abs(G[:, 0]) + 0.5
    return Polyhedral(G)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.booleans())
def test_hierarchy(seed, strict):
    rng = np.random.default_rng(seed)
    cone = _random_cone(seed)
    A = rng.normal(size=(3, 3)) + rng.uniform(0, 1.5)
    kw = dict(t_max=10.0, step=0.1, samples=40, seed=seed)
    kinds = ("Uniform", "Individual", "Weak")
    verdicts = [check(k + ("Pos" if strict else "Nonneg"), A, cone, **kw).verdict for k in kinds]
    for stronger, weaker in zip(verdicts, verdicts[1:]):
        if stronger is HOLDS:
            assert weaker is HOLDS


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_polyhedral_collapse(seed):
    rng = np.random.default_rng(seed)
    cone = orthant(3) if seed % 2 else _random_cone(3 * seed + 2)
    A = rng.normal(size=(3, 3))
    A *= min(1.0, 3.0 / np.linalg.norm(A, 2))
    if seed % 4 < 2:
        A = A + np.abs(rng.normal(size=(3, 3)))
        A *= min(1.0, 3.0 / np.linalg.norm(A, 2))
    kw = dict(t_max=20.0, step=0.05, samples=60, seed=seed)
    u = check(Notion.UNIFORM_NONNEG, A, cone, **kw).verdict
    i = check(Notion.INDIVIDUAL_NONNEG, A, cone, **kw).verdict
    assert (u is HOLDS) == (i is HOLDS)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_positive_classification_roundtrip(seed):
    rng = np.random.default_rng(seed)
    A = np.abs(rng.normal(size=(3, 3))) + 0.05
    cert = classify_eventual_positivity(A, orthant(3))
    assert cert.positive
    assert check(Notion.UNIFORM_POS, A, orthant(3), t_max=10, step=0.1).verdict is HOLDS
