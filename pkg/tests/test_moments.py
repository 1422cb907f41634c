"""Moment estimates: oracle pairings, scaling laws, estimator edge cases."""

import math

import numpy as np
import pytest

from cantorlab import bump, moments
from cantorlab.counting import TargetSequence


def family(a=0.1, b=0.2, theta=0.3, targets=None):
    return moments.BumpFamily(a=a, b=b, theta=theta,
                              targets=targets or TargetSequence.zero())


def cylinder_expectation(n_max, fam, points):
    """Direct mu-quadrature of E[S_N] over level-k cylinder endpoints.

    With k = 22 levels the quadrature error of each term is below
    2^n 3^-22 sup|f_n'|, summed < 1e-6 for n_max <= 3.
    """
    centers = fam.targets.array(n_max)
    total = 0.0
    for n in range(1, n_max + 1):
        f = bump.make_bump(bump.BumpSpec(
            n=n, center=float(centers[n - 1]), a=fam.a, b=fam.b, theta=fam.theta))
        total += float(f(np.mod(2.0**n * points, 1.0)).mean())
    return total


def test_fourier_matches_cylinder_oracle_zero_targets(cylinder_points_22):
    fam = family()
    for n_max in (1, 3):
        est = moments.expectation_fourier(n_max, 400, fam)
        oracle = cylinder_expectation(n_max, fam, cylinder_points_22)
        assert abs(est.value - oracle) <= est.error_bar + 1e-6


def test_fourier_matches_cylinder_oracle_uniform_targets(cylinder_points_22):
    fam = family(targets=TargetSequence.iid_uniform(11))
    for n_max in (1, 3):
        est = moments.expectation_fourier(n_max, 400, fam)
        oracle = cylinder_expectation(n_max, fam, cylinder_points_22)
        assert abs(est.value - oracle) <= est.error_bar + 1e-6


def test_fourier_truncation_doubling_within_error_bar():
    fam = family()
    a = moments.expectation_fourier(50, 200, fam)
    b = moments.expectation_fourier(50, 400, fam)
    assert abs(b.value - a.value) <= a.error_bar


def test_leading_term_closed_form():
    fam = family(a=0.15, b=0.3, theta=0.25)
    est = moments.expectation_fourier(40, 64, fam)
    expect = 0.45 * float(np.sum(np.arange(1, 41, dtype=float) ** -0.25))
    assert est.components["leading"] == pytest.approx(expect, abs=1e-12)


def test_leading_term_shift_invariant():
    # shifting every target by a constant changes nothing in the l=0 terms
    fam0 = family(targets=TargetSequence.zero())
    fam1 = family(targets=TargetSequence.constant(0.37))
    e0 = moments.expectation_fourier(30, 64, fam0)
    e1 = moments.expectation_fourier(30, 64, fam1)
    assert e0.components["leading"] == e1.components["leading"]


def test_fourier_vs_mc_medium_scale():
    fam = family()
    ef = moments.expectation_fourier(300, 700, fam)
    em = moments.expectation_mc(300, 500, 2718, fam, workers=2)
    assert abs(ef.value - em.value) <= 3 * (ef.error_bar + em.error_bar)


def test_mc_error_bar_clt_scaling():
    fam = family()
    e1 = moments.expectation_mc(200, 300, 99, fam)
    e4 = moments.expectation_mc(200, 1200, 99, fam)
    shrink = e1.error_bar / e4.error_bar
    assert abs(shrink - 2.0) <= 0.6  # halves within 30%


def test_mc_workers_deterministic():
    fam = family()
    a = moments.expectation_mc(150, 60, 5, fam, workers=1)
    b = moments.expectation_mc(150, 60, 5, fam, workers=4)
    assert a.value == b.value and a.error_bar == b.error_bar


def test_near_degenerate_all_mass():
    # radii 0.498/0.499 leave a sub-percent notch: the mean locks near N
    fam = family(a=0.498, b=0.499, theta=0.0)
    n_max, m = 200, 60
    est = moments.expectation_mc(n_max, m, 31415, fam)
    assert 0.98 * n_max <= est.value <= n_max


def test_mc_requires_two_samples():
    with pytest.raises(ValueError):
        moments.expectation_mc(50, 1, 0, family())


def test_variance_scan_properties():
    fam = family()
    vs = moments.variance_mc([300, 1000, 3000], 120, 12345, fam, workers=2)
    assert np.all(vs.variances >= 0.0)
    assert np.all(np.diff(vs.relative) < 0.0)
    assert vs.growth_exponent < 2.0
    # moment inequalities: Var <= E[S^2] <= N * E[S] (population moments)
    table = moments._run_mc(fam, [3000], 120, 12345, 2, 64)[:, 0]
    mean_sq = float(np.mean(table**2))
    assert float(np.var(table)) <= mean_sq <= 3000 * float(np.mean(table))


def test_variance_two_sample_edge():
    vs = moments.variance_mc([50, 100], 2, 7, family())
    assert np.all(np.isfinite(vs.variances))


def test_variance_grid_validation():
    with pytest.raises(ValueError):
        moments.variance_mc([100, 100], 10, 0, family())
    with pytest.raises(ValueError):
        moments.variance_mc([100, 50], 10, 0, family())


def test_growth_check_exponents():
    for theta, grid in ((0.01, None), (0.5, None)):
        fit = moments.growth_check(theta, grid)
        assert abs(fit.exponent - (1.0 - theta)) <= 0.01
    flat = moments.growth_check(0.0, [10**3, 10**4, 10**5])
    assert abs(flat.exponent - 1.0) <= 1e-6


def test_growth_check_validation():
    with pytest.raises(ValueError):
        moments.growth_check(1.5)


def test_default_truncation_mirrors_window():
    assert moments.default_truncation(2000) == math.ceil(2000**0.03)
    assert moments.default_truncation(1) == 1


def test_family_validation():
    with pytest.raises(ValueError):
        moments.BumpFamily(a=0.2, b=0.1, theta=0.3, targets=TargetSequence.zero())
    with pytest.raises(ValueError):
        moments.BumpFamily(a=0.3, b=0.6, theta=0.3, targets=TargetSequence.zero())
