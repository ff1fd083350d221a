import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_hermitian, random_pair
from oracles import duhamel_remainder, frechet_exp_fd
from ssflab import (
    DimensionMismatch,
    PairMismatch,
    doi_divided_difference,
    eigendecompose,
    exponential,
    frechet_exp,
    frechet_poly,
    frechet_schwartz,
    gaussian,
    monomial,
    path_derivative_check,
    polynomial,
    schwartz,
    second_order_remainder_exp,
)
from ssflab.frechet import doi_trace, gauss_legendre, poly_matrix, remainder_trace
from ssflab.functions import FunctionSpec

seeds = st.integers(0, 2**32 - 1)


# -- function specs ------------------------------------------------------------------


def test_spec_requires_single_payload():
    with pytest.raises(ValueError):
        FunctionSpec("polynomial", coeffs=np.ones(2), t=1.0)
    with pytest.raises(ValueError):
        FunctionSpec("schwartz")
    with pytest.raises(ValueError):
        FunctionSpec("cosine", t=1.0)


def test_gaussian_synthesis_matches_closed_form():
    g = gaussian()
    x = np.linspace(-3, 3, 41)
    for order in range(3):
        assert np.max(np.abs(g.synthesize(x, order) - g.derivative_values(x, order))) <= 1e-12


def test_gaussian_fourier_tail_is_negligible():
    g = gaussian()
    ts, _, fh = g.fourier_samples
    assert abs(fh[0]) < 1e-12 and abs(fh[-1]) < 1e-12


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-3, 3))
def test_exponential_divided_difference(a, b, t):
    k = exponential(t).divided_difference([a], [b])[0, 0]
    if abs(a - b) < 1e-6:
        ref = 1j * t * np.exp(1j * t * a)
        assert abs(k - ref) <= 1e-5 * max(1, abs(t)) ** 2
    else:
        ref = (np.exp(1j * t * a) - np.exp(1j * t * b)) / (a - b)
        assert abs(k - ref) <= 1e-9 * max(1.0, abs(ref))


def test_confluent_kernel_exact():
    a = np.array([0.3, 0.3])
    K = exponential(2.0).divided_difference(a, a)
    assert np.allclose(K, 2j * np.exp(0.6j))


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=9), st.lists(st.floats(-3, 3), min_size=2, max_size=6))
def test_polynomial_divided_difference(coeffs, pts):
    p = polynomial(coeffs)
    a = np.array(pts)
    K = p.divided_difference(a, a)
    for i in range(a.size):
        for j in range(a.size):
            if abs(a[i] - a[j]) > 1e-3:
                ref = (p(a[i]) - p(a[j])) / (a[i] - a[j])
            else:
                ref = p.derivative_values(0.5 * (a[i] + a[j]), 1)
            assert abs(K[i, j] - ref) <= 1e-8 * max(1.0, abs(ref)) + 1e-6 * (abs(a[i] - a[j]) <= 1e-3)


def test_generic_kernel_uses_midpoint_derivative():
    g = gaussian()
    K = g.divided_difference([0.5, 0.5 + 1e-10], [0.5])
    assert np.allclose(K[:, 0], g.derivative_values(0.5, 1))


# -- polynomial derivative -----------------------------------------------------------


def test_frechet_poly_examples(rng):
    H0 = random_hermitian(rng, 5)
    V = random_hermitian(rng, 5)
    D = frechet_poly(H0, V, monomial(2))
    assert D.method == "power_sum" and D.quadrature_nodes == 0
    assert np.allclose(D.matrix, H0 @ V + V @ H0)
    assert np.allclose(frechet_poly([[2.0]], [[3.0]], monomial(3)).matrix, [[36.0]])
    assert np.allclose(frechet_poly(np.diag([1.0, 2.0]), np.diag([0.1, 0.2]), monomial(3)).matrix, np.diag([0.3, 2.4]))
    with pytest.raises(DimensionMismatch):
        frechet_poly(np.eye(2), np.eye(3), monomial(2))


@given(seeds, st.integers(1, 12), st.floats(-2, 2), st.floats(-2, 2))
def test_frechet_poly_linear(seed, n, a, b):
    rng = np.random.default_rng(seed)
    H0, V1, V2 = (random_hermitian(rng, n, 1.0) for _ in range(3))
    p = polynomial(rng.standard_normal(6))
    lhs = frechet_poly(H0, a * V1 + b * V2, p).matrix
    rhs = a * frechet_poly(H0, V1, p).matrix + b * frechet_poly(H0, V2, p).matrix
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1.0, np.linalg.norm(lhs))


def test_path_derivative_examples(rng):
    z = path_derivative_check(np.eye(3), np.zeros((3, 3)), monomial(3), 0.4, 1e-5)
    assert np.allclose(z["analytic"], 0) and np.allclose(z["finite_diff"], 0)
    r = path_derivative_check([[0.0]], [[1.0]], monomial(2), 0.5, 1e-5)
    assert np.allclose(r["analytic"], [[1.0]]) and r["err"] <= 1e-9
    H0, V = random_pair(3, 20)
    r = path_derivative_check(H0, V, monomial(5), 0.3, 1e-5)
    assert r["err"] <= 1e-8 * np.linalg.norm(V)
    with pytest.raises(ValueError):
        path_derivative_check(H0, V, monomial(2), 1.5, 1e-5)
    with pytest.raises(ValueError):
        path_derivative_check(H0, V, monomial(2), 0.5, 1e-3)


@given(seeds, st.integers(1, 15), st.integers(1, 8), st.floats(0, 1))
def test_trace_of_derivative(seed, n, r, s):
    H0, V = random_pair(seed, n)
    Hs = H0 + s * V
    lhs = np.trace(frechet_poly(Hs, V, monomial(r)).matrix)
    rhs = r * np.trace(V @ np.linalg.matrix_power(Hs, r - 1))
    assert abs(lhs - rhs) <= 1e-11 * max(1.0, abs(rhs), np.linalg.norm(V) * r * max(1.0, np.linalg.norm(Hs, 2)) ** (r - 1))


# -- double operator integrals -------------------------------------------------------


def test_doi_square(rng):
    H0 = random_hermitian(rng, 6)
    X = rng.standard_normal((6, 6))
    D = eigendecompose(H0)
    assert np.allclose(doi_divided_difference(D, D, monomial(2), X), H0 @ X + X @ H0, atol=1e-12)


@given(seeds, st.integers(1, 50), st.integers(0, 8))
def test_doi_matches_power_sum(seed, n, deg):
    H0, V = random_pair(seed, n)
    p = polynomial(np.random.default_rng(seed).standard_normal(deg + 1))
    D = eigendecompose(H0)
    doi = doi_divided_difference(D, D, p, V)
    ref = frechet_poly(H0, V, p).matrix
    assert np.linalg.norm(doi - ref) <= 1e-10 * max(1.0, np.linalg.norm(ref))


def test_doi_shape_check():
    D = eigendecompose(np.eye(2))
    with pytest.raises(DimensionMismatch):
        doi_divided_difference(D, D, monomial(2), np.eye(3))


def test_frechet_exp_examples():
    assert np.allclose(frechet_exp(np.eye(3), np.ones((3, 3)), 0.0).matrix, 0)
    assert np.allclose(frechet_exp([[0.0]], [[1.0]], 1.7).matrix, [[1.7j]])
    assert np.allclose(frechet_exp([[0.0]], [[1.0]], 1.7, "duhamel_quadrature").matrix, [[1.7j]])
    with pytest.raises(ValueError):
        frechet_exp([[0.0]], [[1.0]], 1.0, "simpson")


def test_frechet_exp_dual_path_t2(rng):
    H0, V = random_pair(9, 12)
    doi = frechet_exp(H0, V, 2.0).matrix
    quad = frechet_exp(H0, V, 2.0, "duhamel_quadrature", 64).matrix
    assert np.linalg.norm(doi - quad) <= 1e-10


def test_frechet_exp_matches_finite_difference():
    H0, V = random_pair(4, 8)
    doi = frechet_exp(H0, V, 1.5).matrix
    assert np.linalg.norm(doi - frechet_exp_fd(H0, V, 1.5)) <= 1e-7


@given(seeds, st.integers(1, 12), st.floats(-5, 5))
def test_frechet_exp_adjoint_symmetry(seed, n, t):
    H0, V = random_pair(seed, n, h0_op=2.0)
    D = frechet_exp(H0, V, t).matrix
    Dm = frechet_exp(H0, V, -t).matrix
    assert np.linalg.norm(D.conj().T - Dm) <= 1e-12 * max(1.0, np.linalg.norm(D))


def test_duhamel_quadrature_converges_fast():
    H0, V = random_pair(5, 10, h0_op=4.0)
    t = 5.0
    exact = frechet_exp(H0, V, t).matrix
    errs = [np.linalg.norm(frechet_exp(H0, V, t, "duhamel_quadrature", m).matrix - exact) for m in (4, 8, 16, 32)]
    for e_prev, e_next in zip(errs, errs[1:]):
        assert e_next <= max(e_prev / 4, 1e-12)


def test_second_order_remainder_examples():
    assert np.allclose(second_order_remainder_exp(np.eye(2), np.eye(2), np.zeros((2, 2)), 3.0), 0)
    R = second_order_remainder_exp([[1.0]], [[0.0]], [[1.0]], np.pi)
    assert abs(R[0, 0] - (-2 - 1j * np.pi)) <= 1e-12
    with pytest.raises(PairMismatch):
        second_order_remainder_exp(np.eye(2), np.eye(2), np.eye(2), 1.0)


@pytest.mark.parametrize("seed, n, t", [(1, 4, 1.0), (2, 6, 3.0), (3, 8, -2.0)])
def test_second_order_remainder_matches_double_integral(seed, n, t):
    H0, V = random_pair(seed, n, h0_op=1.0)
    R = second_order_remainder_exp(H0 + V, H0, V, t)
    assert np.linalg.norm(R - duhamel_remainder(H0, V, t)) <= 1e-10 * max(1.0, np.linalg.norm(R))


def test_frechet_schwartz_examples():
    ts = np.linspace(-1, 1, 5)
    zero = schwartz(ts, np.full(5, 0.5), np.zeros(5))
    assert np.allclose(frechet_schwartz(np.eye(2), np.ones((2, 2)), zero).matrix, 0)
    assert np.allclose(frechet_schwartz([[0.0]], [[1.0]], gaussian()).matrix, 0, atol=1e-14)


def test_frechet_schwartz_dual_path():
    H0, V = random_pair(8, 30, h0_op=3.0)
    g = gaussian()
    D = eigendecompose(H0)
    fourier = frechet_schwartz(H0, V, g).matrix
    direct = doi_divided_difference(D, D, g, V)
    assert np.linalg.norm(fourier - direct) <= 1e-6 * np.linalg.norm(V)


def test_fourier_path_is_sum_of_exponential_derivatives():
    H0, V = random_pair(2, 6)
    ts = np.array([-1.0, 0.5, 2.0])
    w = np.array([0.2, 0.3, 0.5])
    fh = np.array([1.0, -0.5j, 0.25])
    f = schwartz(ts, w, fh)
    ref = sum(wj * cj * frechet_exp(H0, V, tj).matrix for tj, wj, cj in zip(ts, w, fh))
    assert np.allclose(frechet_schwartz(H0, V, f).matrix, ref, atol=1e-12)


@given(seeds, st.integers(1, 20))
def test_trace_shortcuts(seed, n):
    H0, V = random_pair(seed, n)
    D0, DH = eigendecompose(H0), eigendecompose(H0 + V)
    f = exponential(1.3)
    assert abs(doi_trace(D0, f, V) - np.trace(frechet_exp(H0, V, 1.3).matrix)) <= 1e-11 * max(1.0, n)
    p = polynomial([0.5, -1.0, 2.0, 0.3])
    full = np.trace(poly_matrix(p, H0 + V) - poly_matrix(p, H0) - frechet_poly(H0, V, p).matrix)
    assert abs(remainder_trace(DH, D0, p, V) - full) <= 1e-10 * max(1.0, abs(full))


def test_gauss_legendre_rule():
    x, w = gauss_legendre(5, 0, 1)
    assert np.isclose(w.sum(), 1) and np.isclose(np.dot(w, x**9), 0.1)
    with pytest.raises(ValueError):
        gauss_legendre(0)
