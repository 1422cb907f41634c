"""Bump kernel: properties 1-6 analogues, coefficients, truncation scaling."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from cantorlab import bump


def make(n=10, center=0.3, a=0.15, b=0.3, theta=0.15):
    return bump.make_bump(bump.BumpSpec(n=n, center=center, a=a, b=b, theta=theta))


def quad_coefficient(f, l):
    """Adaptive-quadrature oracle for c_l, integrated piecewise."""
    pieces = sorted({0.0, 1.0, *f.junctions()})
    re = im = 0.0
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        re += quad(lambda x: f(x) * math.cos(2 * math.pi * l * x), lo, hi,
                   limit=400, epsabs=1e-14, epsrel=1e-13)[0]
        im += quad(lambda x: -f(x) * math.sin(2 * math.pi * l * x), lo, hi,
                   limit=400, epsabs=1e-14, epsrel=1e-13)[0]
    return complex(re, im)


def test_spec_validation():
    with pytest.raises(ValueError):
        bump.BumpSpec(n=0, center=0.0, a=0.1, b=0.2, theta=0.1)
    with pytest.raises(ValueError):
        bump.BumpSpec(n=1, center=0.0, a=0.2, b=0.1, theta=0.1)
    with pytest.raises(ValueError):
        bump.BumpSpec(n=1, center=0.0, a=0.1, b=0.2, theta=-0.5)


def test_degenerate_rejected():
    with pytest.raises(bump.DegenerateBumpError):
        make(n=1, a=0.3, b=0.5, theta=0.0)


def test_plateau_and_support():
    f = make()
    c = f.center
    assert f(c) == 1.0
    assert f((c + f.r_in * 0.999) % 1.0) == 1.0
    assert f((c - f.r_in * 0.999) % 1.0) == 1.0
    assert f((c + f.r_out + 1e-9) % 1.0) == 0.0
    assert f((c - f.r_out - 1e-9) % 1.0) == 0.0


def test_range_and_periodicity_on_grid():
    f = make()
    xs = np.arange(100001) / 100001.0
    vals = f(xs)
    assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
    # exact periodicity is asserted on a dyadic grid, where x+1 and x-3 are
    # exactly representable shifts of x
    xd = np.arange(2**17) / 2.0**17
    assert np.array_equal(f(xd), f(xd + 1.0))
    assert np.array_equal(f(xd), f(xd - 3.0))


@given(
    st.integers(min_value=1, max_value=10**4),
    st.floats(0, 1, exclude_max=True),
    st.floats(0.01, 0.2),
    st.floats(0.21, 0.45),
    st.floats(0, 0.9),
    st.integers(min_value=0, max_value=2**20 - 1),
)
@settings(max_examples=200, deadline=None)
def test_range_property(n, center, a, b, theta, k):
    f = bump.make_bump(bump.BumpSpec(n=n, center=center, a=a, b=b, theta=theta))
    x = k / 2.0**20  # dyadic: x +- integers are exactly representable
    v = f(x)
    assert 0.0 <= v <= 1.0
    assert f(x) == f(x + 1.0) == f(x - 2.0)


def test_smoothstep_endpoints():
    assert bump.smoothstep(0.0) == 0.0 and bump.smoothstep(1.0) == 1.0
    assert bump.smoothstep_d1(0.0) == 0.0 and bump.smoothstep_d1(1.0) == 0.0
    assert bump.smoothstep_d2(0.0) == 0.0 and bump.smoothstep_d2(1.0) == 0.0


def test_c2_gluing_one_sided():
    # analytic one-sided second derivatives agree at all four junctions
    f = make()
    for t_junction in (0.0, 1.0):
        assert abs(f.transition_second_derivative(t_junction) - 0.0) < 1e-10
    # and the interior values are continuous across the transition parameter
    ts = np.linspace(0, 1, 1001)
    d2 = bump.smoothstep_d2(ts) / f.w**2
    assert abs(d2[0]) < 1e-10 and abs(d2[-1]) < 1e-10


def test_derivative_sup_values():
    f = make()
    xs = np.arange(200001) / 200001.0
    assert np.max(np.abs(f.derivative(xs))) <= f.sup_first_derivative() + 1e-9
    assert np.max(np.abs(f.second_derivative(xs))) <= f.sup_second_derivative() + 1e-9
    assert abs(f.sup_first_derivative() - (15.0 / 8.0) / f.w) < 1e-12
    assert abs(f.sup_second_derivative() - (10.0 / math.sqrt(3)) / f.w**2) < 1e-12
    # suprema attained at the analytic arg-maxima
    x_mid = f.center + f.r_out - 0.5 * f.w
    assert abs(abs(f.derivative(x_mid)) - f.sup_first_derivative()) < 1e-9
    t_peak = (1 - 1 / math.sqrt(3)) / 2
    assert abs(abs(f.transition_second_derivative(t_peak)) - f.sup_second_derivative()) < 1e-9


def test_mean_value_closed_form():
    for n in (1, 10, 1000):
        f = bump.make_bump(bump.BumpSpec(n=n, center=0.7, a=0.2, b=0.35, theta=0.2))
        c0 = bump.fourier_coeff(f, 0)
        assert c0.value.imag == 0.0
        assert abs(c0.value.real - 0.55 * n**-0.2) < 1e-12


def test_coefficients_match_quadrature():
    for n in (1, 10, 1000):
        f = bump.make_bump(bump.BumpSpec(n=n, center=0.3, a=0.2, b=0.35, theta=0.3))
        for l in (0, 1, -1, 7, -7, 100, -100):
            closed = bump.fourier_coeff(f, l).value
            oracle = quad_coefficient(f, l)
            assert abs(closed - oracle) < 1e-12, (n, l)


def test_coefficient_magnitude_bounds():
    f = make()
    c0 = f.mean_value()
    sup_d2 = f.sup_second_derivative()
    for l in range(1, 400):
        cl = abs(bump.fourier_coeff(f, l).value)
        assert cl <= c0 + 1e-15
        assert cl <= min(c0, sup_d2 / (2 * math.pi * l) ** 2) + 1e-13


def test_coefficient_conjugate_symmetry():
    f = make(center=0.123)
    for l in (1, 3, 17):
        assert bump.fourier_coeff(f, -l).value == pytest.approx(
            bump.fourier_coeff(f, l).value.conjugate(), abs=1e-15
        )


def test_coefficient_table_matches_scalar():
    f = make(center=0.81)
    table = bump.coefficient_table(f, 50)
    for l in (0, 1, 7, 50):
        assert abs(table[l] - bump.fourier_coeff(f, l).value) < 1e-14


def test_partial_sum_error_decreases_and_slope():
    f = make()
    orders = [2**k for k in range(6, 13)]
    errs = [bump.partial_sum_error(f, L, 2 * L + 7) for L in orders]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    slope = float(np.polyfit(np.log(orders), np.log(errs), 1)[0])
    assert slope <= -1.8


def test_partial_sum_error_n_scaling():
    theta = 0.12
    L = 512
    errs = {}
    for n in (10, 100, 1000):
        f = bump.make_bump(bump.BumpSpec(n=n, center=0.3, a=0.15, b=0.3, theta=theta))
        errs[n] = bump.partial_sum_error(f, L, 2 * L + 7)
    normalized = [errs[n] / n ** (2 * theta) for n in errs]
    assert max(normalized) / min(normalized) <= 3.0


def test_parseval_inequality():
    f = make()
    int_f2 = quad(lambda x: f(x) ** 2, 0.0, 1.0, limit=400, epsabs=1e-13)[0]
    c0 = f.mean_value()
    assert int_f2 <= c0 + 1e-12
    prev_gap = None
    for L in (8, 64, 512):
        table = bump.coefficient_table(f, L)
        power = abs(table[0]) ** 2 + 2 * np.sum(np.abs(table[1:]) ** 2)
        assert power <= int_f2 + 1e-12
        gap = int_f2 - power
        if prev_gap is not None:
            assert gap <= prev_gap
        prev_gap = gap
    assert prev_gap < 1e-4


def test_sandwich_check():
    rep = bump.sandwich_check(n=1000, center=0.25, theta=0.3, eps=0.25)
    assert rep.ok
    assert abs(rep.upper_mean - (2 + 0.25) * 1000**-0.3) < 1e-12
    assert rep.upper_mean <= 2 * (1 + 0.25) * 1000**-0.3


def test_sandwich_eps_validation():
    with pytest.raises(ValueError):
        bump.sandwich_check(n=100, center=0.0, theta=0.3, eps=0.0)
