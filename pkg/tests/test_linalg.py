import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conegroup.linalg import (
    NearSpectrumError,
    SpectralBoundError,
    expm,
    kernel_basis,
    laplace_resolvent_quadrature,
    rank1,
    residue_at_spectral_bound,
    resolvent,
    spectral_bound,
    spectrum,
)

finite = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)


def small_matrices(n_max=5):
    return st.integers(1, n_max).flatmap(lambda n: arrays(np.float64, (n, n), elements=finite))


def scaled(A, bound):
    nrm = np.linalg.norm(A, 2)
    return A if nrm <= bound else A * (bound / nrm)


# --- expm -----------------------------------------------------------------

def test_expm_zero_matrix_is_identity():
    assert np.array_equal(expm(np.zeros((3, 3)), 5.0), np.eye(3))


def test_expm_example_generator_at_one(A31):
    E = expm(A31, 1.0)
    expected = np.eye(4)
    expected[0, 1] = 1.0
    assert np.allclose(E, expected, atol=1e-12)


def test_expm_diagonal():
    assert np.allclose(expm(np.diag([1.0, 2.0]), np.log(2.0)), np.diag([2.0, 4.0]))


def test_expm_negative_time_inverts():
    A = np.array([[0.3, 1.0], [-0.2, 0.1]])
    assert np.allclose(expm(A, -1.3) @ expm(A, 1.3), np.eye(2), atol=1e-12)


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.array([[np.nan]]), np.zeros(3)])
def test_expm_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        expm(bad, 1.0)


@settings(max_examples=40, deadline=None)
@given(small_matrices(), st.floats(0, 5), st.floats(0, 5))
def test_semigroup_law(A, s, t):
    A = scaled(A * 5, 5.0)
    full = expm(A, s + t)
    assert np.linalg.norm(full - expm(A, s) @ expm(A, t), 2) <= 1e-9 * (1 + np.linalg.norm(full, 2))


@settings(max_examples=30, deadline=None)
@given(small_matrices())
def test_expm_at_zero_is_identity(A):
    assert np.abs(expm(A, 0.0) - np.eye(A.shape[0])).max() <= 1e-14


def test_derivative_error_is_first_order():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(4, 4))
    t = 0.7
    errs = []
    for h in (1e-3, 1e-4):
        fd = (expm(A, t + h) - expm(A, t)) / h
        errs.append(np.linalg.norm(fd - A @ expm(A, t), 2))
    assert 8.0 <= errs[0] / errs[1] <= 12.0


# --- spectrum -------------------------------------------------------------

def test_spectrum_of_example_generator(A31):
    spec = spectrum(A31)
    by_value = {(round(e.value.real, 9), round(e.value.imag, 9)): e for e in spec.eigenvalues}
    zero = by_value[(0.0, 0.0)]
    assert (zero.algebraic, zero.geometric) == (2, 1)
    for im in (2 * np.pi, -2 * np.pi):
        e = by_value[(0.0, round(im, 9))]
        assert (e.algebraic, e.geometric) == (1, 1)


def test_spectrum_identity():
    spec = spectrum(np.eye(3))
    assert len(spec.eigenvalues) == 1
    assert (spec.eigenvalues[0].algebraic, spec.eigenvalues[0].geometric) == (3, 3)


def test_spectrum_swap():
    vals = sorted(e.value.real for e in spectrum(np.array([[0.0, 1.0], [1.0, 0.0]])).eigenvalues)
    assert np.allclose(vals, [-1.0, 1.0])


@settings(max_examples=40, deadline=None)
@given(small_matrices())
def test_spectrum_invariants(A):
    spec = spectrum(A)
    assert spec.dim == A.shape[0]
    for e in spec.eigenvalues:
        assert 1 <= e.geometric <= e.algebraic
        if e.value.imag != 0:
            conj, dist = spec.find(np.conj(e.value))
            assert dist <= spec.tol and conj.algebraic == e.algebraic


def test_spectral_bound_examples(A31):
    assert abs(spectral_bound(spectrum(A31))) <= 1e-12
    assert spectral_bound(np.diag([1.0, -1.0])) == pytest.approx(1.0)
    B = np.zeros((3, 3))
    B[0, 0] = -2.0
    B[1:, 1:] = [[-3.0, 4.0], [-4.0, -3.0]]
    assert spectral_bound(B) == pytest.approx(-2.0)


# --- resolvent and Laplace transform ---------------------------------------

def test_resolvent_examples(A31):
    assert np.allclose(resolvent(np.zeros((2, 2)), 1.0), np.eye(2))
    assert np.allclose(resolvent(np.diag([1.0, 2.0]), 3.0), np.diag([0.5, 1.0]))
    R = resolvent(A31, 1.0)
    assert R[0, 1] == pytest.approx(1.0)
    assert R[0, 0] == pytest.approx(1.0)


def test_resolvent_near_spectrum_reports_distance():
    with pytest.raises(NearSpectrumError) as info:
        resolvent(np.diag([1.0, 2.0]), 1.0 + 1e-12)
    assert info.value.distance < 1e-10


@settings(max_examples=30, deadline=None)
@given(small_matrices(), st.floats(-3, 3), st.floats(-3, 3))
def test_resolvent_identity(A, re, im):
    nu = complex(re, im)
    if np.min(np.abs(np.linalg.eigvals(A) - nu)) < 1e-2:
        return
    R = resolvent(A, nu)
    resid = (nu * np.eye(A.shape[0]) - A) @ R - np.eye(A.shape[0])
    assert np.linalg.norm(resid, 2) <= 1e-10 * max(1.0, np.linalg.norm(R, 2))


@pytest.mark.parametrize("A, nu, T, steps, expected", [
    (np.zeros((1, 1)), 1.0, 40.0, 4000, np.array([[1.0]])),
    (np.array([[-1.0]]), 0.5, 50.0, 5000, np.array([[1 / 1.5]])),
])
def test_laplace_scalar(A, nu, T, steps, expected):
    Z, _ = laplace_resolvent_quadrature(A, nu, T, steps)
    assert np.abs(Z - expected).max() <= 1e-9


def test_laplace_matches_resolvent_on_example(A31):
    Z, err = laplace_resolvent_quadrature(A31, 1.0, 60.0, 6000)
    assert np.linalg.norm(Z - resolvent(A31, 1.0), 2) <= 1e-6
    assert err <= 1e-6


def test_laplace_error_decreases_on_doubling():
    A = np.array([[-0.5, 2.0], [-2.0, -0.5]])
    R = resolvent(A, 0.3)
    errs = []
    for T, steps in [(5.0, 100), (10.0, 400), (20.0, 1600), (40.0, 6400)]:
        Z, _ = laplace_resolvent_quadrature(A, 0.3, T, steps)
        errs.append(np.linalg.norm(Z - R, 2))
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_laplace_diverges_below_spectral_bound():
    with pytest.raises(ValueError, match="diverges"):
        laplace_resolvent_quadrature(np.eye(2), 0.5, 10.0, 100)


# --- rank one -------------------------------------------------------------

def test_rank1_basic():
    assert np.array_equal(rank1([1.0, 0.0], [0.0, 1.0]), [[0.0, 1.0], [0.0, 0.0]])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(arrays(np.float64, n, elements=finite),
                                                     arrays(np.float64, n, elements=finite))))
def test_rank1_trace_and_norm(pair):
    x, xp = pair
    R = rank1(x, xp)
    assert np.trace(R) == pytest.approx(xp @ x, rel=1e-12, abs=1e-15)
    assert np.linalg.norm(R, 2) == pytest.approx(np.linalg.norm(x) * np.linalg.norm(xp),
                                                 rel=1e-12, abs=1e-15)


def test_rank1_dimension_mismatch():
    with pytest.raises(ValueError):
        rank1([1.0, 2.0], [1.0])


# --- kernels and residues -------------------------------------------------

def test_kernel_basis_examples(A31):
    (v,) = kernel_basis(A31)
    assert np.allclose(np.abs(v), [1, 0, 0, 0])
    assert kernel_basis(np.eye(3)) == []
    basis = kernel_basis(np.zeros((2, 2)))
    assert len(basis) == 2
    assert np.allclose(np.array(basis) @ np.array(basis).T, np.eye(2))


@pytest.mark.parametrize("A, k, Q", [
    (np.diag([0.0, -1.0]), 1, np.diag([1.0, 0.0])),
    (np.array([[0.0, 1.0], [1.0, 0.0]]), 1, 0.5 * np.ones((2, 2))),
])
def test_residue_examples(A, k, Q):
    order, R = residue_at_spectral_bound(A)
    assert order == k
    assert np.allclose(R, Q, atol=1e-10)


def test_residue_of_example_generator(A31):
    k, Q = residue_at_spectral_bound(A31)
    assert k == 2
    assert np.abs(Q - rank1(np.eye(4)[0], np.eye(4)[1])).max() <= 1e-8


def test_residue_matches_numerical_limit(A31):
    k, Q = residue_at_spectral_bound(A31)
    r = 1e-4
    approx = r**k * resolvent(A31, r).real
    assert np.abs(approx - Q).max() <= 1e-3


def test_residue_requires_real_bound():
    with pytest.raises(SpectralBoundError):
        residue_at_spectral_bound(np.array([[0.0, -1.0], [1.0, 0.0]]))


@settings(max_examples=30, deadline=None)
@given(small_matrices(4))
def test_residue_range_is_in_eigenspace(A):
    try:
        k, Q = residue_at_spectral_bound(A)
    except SpectralBoundError:
        return
    s = spectral_bound(A)
    n = A.shape[0]
    assert np.linalg.norm((s * np.eye(n) - A) @ Q, 2) <= 1e-8 * max(np.linalg.norm(Q, 2), 1.0)
