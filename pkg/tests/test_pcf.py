import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, strategies as st

from ssflab import (
    PerturbationPair,
    PiecewiseConstantFunction,
    UnsupportedWeight,
    exponential,
    gaussian,
    integrate_pcf,
    koplienko_eta,
    l1_distance,
    polynomial,
)
from ssflab.functions import bounded_test

ONE = PiecewiseConstantFunction(np.array([0.0, 1.0]), np.array([1.0]), (0.0, 1.0))


@st.composite
def step_functions(draw, max_cells=8):
    m = draw(st.integers(1, max_cells))
    cuts = draw(st.lists(st.floats(-5, 5), min_size=m + 1, max_size=m + 1, unique=True))
    b = np.sort(np.array(cuts))
    if np.any(np.diff(b) < 1e-3):
        b = np.cumsum(np.concatenate([[b[0]], np.maximum(np.diff(b), 1e-3)]))
    v = np.array(draw(st.lists(st.floats(-3, 3), min_size=m, max_size=m)))
    return PiecewiseConstantFunction(b, v, (b[0], b[-1]))


def test_validation():
    with pytest.raises(ValueError):
        PiecewiseConstantFunction(np.array([0.0, 0.0]), np.array([1.0]), (0, 1))
    with pytest.raises(ValueError):
        PiecewiseConstantFunction(np.array([0.0, 1.0]), np.array([np.inf]), (0, 1))
    with pytest.raises(ValueError):
        PiecewiseConstantFunction(np.array([0.0, 1.0]), np.array([1.0, 2.0]), (0, 1))


def test_values_are_left_closed():
    f = PiecewiseConstantFunction(np.array([0.0, 1.0, 2.0]), np.array([3.0, 4.0]), (0, 2))
    assert list(f(np.array([-0.1, 0.0, 0.99, 1.0, 1.99, 2.0]))) == [0, 3, 3, 4, 4, 0]


def test_integrate_lambda_squared():
    assert integrate_pcf(ONE, polynomial([0, 0, 1])) == pytest.approx(1 / 3, abs=1e-15)


def test_integrate_full_period():
    assert abs(integrate_pcf(ONE, exponential(2 * np.pi))) < 1e-15


def test_staircase_against_p_second_derivative():
    # p = x^3, p'' = 6x; the hand value is integral 6x(1-x) = 1
    pair = PerturbationPair.from_operators(np.diag([0.0]), np.diag([1.0]))
    for K in (2, 3, 8, 32):
        eta = koplienko_eta(pair, K)
        assert abs(integrate_pcf(eta, polynomial([0, 6])) - 1) <= 1e-12


def test_unsupported_weight():
    with pytest.raises(UnsupportedWeight):
        integrate_pcf(ONE, lambda x: x)


@given(step_functions(), st.lists(st.floats(-2, 2), min_size=1, max_size=5))
def test_polynomial_integral_matches_quadrature(f, coeffs):
    p = polynomial(coeffs)
    ref = sum(
        scipy.integrate.quad(lambda x: np.polyval(coeffs[::-1], x), lo, hi)[0] * v
        for lo, hi, v in zip(f.breakpoints[:-1], f.breakpoints[1:], f.values)
    )
    assert abs(integrate_pcf(f, p) - ref) <= 1e-9 * max(1.0, abs(ref))


@given(step_functions(), st.floats(-20, 20, allow_subnormal=False))
def test_exponential_integral_matches_closed_form(f, t):
    lo, hi = f.breakpoints[:-1], f.breakpoints[1:]
    if t == 0:
        ref = np.dot(f.values, hi - lo)
    else:
        ref = np.dot(f.values, np.exp(1j * t * lo) * np.expm1(1j * t * (hi - lo)) / (1j * t))
    assert abs(integrate_pcf(f, exponential(t)) - ref) <= 1e-12 * max(1.0, f.l1_norm())


@given(step_functions())
def test_gaussian_integral_matches_quadrature(f):
    g = gaussian()
    ref = sum(
        scipy.integrate.quad(lambda x: np.exp(-x * x / 2), lo, hi)[0] * v
        for lo, hi, v in zip(f.breakpoints[:-1], f.breakpoints[1:], f.values)
    )
    assert abs(integrate_pcf(f, g) - ref) <= 1e-9 * max(1.0, abs(ref))


@given(step_functions(), step_functions())
def test_algebra_and_l1(f, g):
    s, d = f + g, f - g
    xs = np.linspace(-6, 6, 101)
    assert np.allclose(s(xs), f(xs) + g(xs))
    assert np.allclose(d(xs), f(xs) - g(xs))
    assert np.isclose(s.integral(), f.integral() + g.integral())
    assert l1_distance(f, g) >= 0 and l1_distance(f, f) == 0
    assert l1_distance(f, g) <= f.l1_norm() + g.l1_norm() + 1e-12
    assert np.isclose(f.scaled(2.5).integral(), 2.5 * f.integral())
    assert np.isclose(integrate_pcf(f, g), (f._combine(g, np.multiply)).integral())


def _cumulative_ref(f, x):
    lo, hi = f.breakpoints[:-1], f.breakpoints[1:]
    return np.sum(f.values * np.clip(np.asarray(x)[..., None] - lo, 0, hi - lo), axis=-1)


@given(step_functions())
def test_cumulatives_match_direct_sums(f):
    xs = np.linspace(f.breakpoints[0] - 1, f.breakpoints[-1] + 1, 13)
    assert np.allclose(f.cumulative(xs), _cumulative_ref(f, xs), atol=1e-12)
    for x in xs:
        # F is piecewise linear, so the trapezoid rule on a grid containing its kinks is exact
        grid = np.unique(np.concatenate([[f.breakpoints[0] - 2], f.breakpoints[f.breakpoints < x], [x]]))
        Fg = _cumulative_ref(f, grid)
        G_ref = np.sum(0.5 * (Fg[1:] + Fg[:-1]) * np.diff(grid))
        assert abs(f.second_cumulative(np.array([x]))[0] - G_ref) <= 1e-10


@given(step_functions(), step_functions())
def test_bounded_test_weight(f, dens):
    g = bounded_test(dens, anchor=-1.0)
    xs = np.unique(np.concatenate([f.breakpoints, dens.breakpoints, [f.breakpoints[0], f.breakpoints[-1]]]))
    xs = xs[(xs >= f.breakpoints[0]) & (xs <= f.breakpoints[-1])]
    lo, hi = xs[:-1], xs[1:]
    mid = 0.5 * (lo + hi)
    # g is quadratic on every cell of this grid, so Simpson is exact
    simpson = (g(lo) + 4 * g(mid) + g(hi)).real / 6 * (hi - lo)
    ref = np.dot(f(mid), simpson)
    assert abs(integrate_pcf(f, g) - ref) <= 1e-9 * max(1.0, abs(ref))
    assert np.allclose(g(np.array([-1.0])), 0)


@given(step_functions())
def test_table_round_trip(f):
    back = PiecewiseConstantFunction.from_table(f.to_table("eta"))
    assert np.array_equal(back.breakpoints, f.breakpoints)
    assert np.array_equal(back.values, f.values)


def test_table_format():
    text = ONE.to_table("eta")
    lines = text.splitlines()
    assert lines[0] == "# lambda eta"
    assert lines[1:] == ["0.0\t1.0", "1.0\t0.0"]
