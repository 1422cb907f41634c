"""Hit-counting harness: engines, corollary experiments, ensembles, targets."""

import json
import math

import numpy as np
import pytest
from scipy.stats import mannwhitneyu

from cantorlab import counting, orbit
from cantorlab.counting import ApproxFunction, TargetSequence

PSI = ApproxFunction(c=0.05, theta=0.3)


def test_psi_validation():
    with pytest.raises(ValueError):
        ApproxFunction(c=0.0, theta=0.3)
    with pytest.raises(ValueError):
        ApproxFunction(c=0.1, theta=-0.1)


def test_mass_clamp():
    psi = ApproxFunction(c=3.0, theta=0.5)
    masses = psi.mass_array(100)
    assert masses.max() <= 1.0
    assert masses[0] == 1.0
    assert masses[99] == pytest.approx(min(1.0, 2 * 3.0 * 100**-0.5))


def test_zero_point_zero_targets_all_hits():
    p0 = orbit.from_ternary("0" * 300)
    curve = counting.count_hits(p0, 120, PSI, TargetSequence.zero())
    assert curve.final_hits == 120
    assert curve.final_ratio == pytest.approx(120 / float(np.sum(PSI.mass_array(120))))


def test_wide_ball_hits_everything():
    psi_all = ApproxFunction(c=0.5, theta=0.0)
    p = orbit.sample_cantor(3, 1, 400)
    curve = counting.count_hits(p, 150, psi_all, TargetSequence.iid_uniform(5))
    assert curve.final_hits == 150
    assert np.array_equal(curve.expected_cum, np.arange(1, 151, dtype=float))


def test_single_sample_tracks_prediction():
    # per-sample relative SD ~ (sum of masses)^-1/2 ~ 4.7%; 15% is ~3 sigma
    depth = orbit.required_depth(10**5)
    p = orbit.sample_cantor(1234, 0, depth)
    curve = counting.count_hits(p, 10**5, PSI, TargetSequence.zero())
    assert curve.final_expected == pytest.approx(451.665, abs=0.01)
    assert 0.85 <= curve.final_ratio <= 1.15


def test_count_monotone_in_radius_parameters():
    depth = orbit.required_depth(3000)
    p = orbit.sample_cantor(5150, 0, depth)
    hits_by_c = [
        counting.count_hits(p, 3000, ApproxFunction(c=c, theta=0.3),
                            TargetSequence.zero()).final_hits
        for c in (0.02, 0.05, 0.1, 0.25)
    ]
    assert all(b >= a for a, b in zip(hits_by_c, hits_by_c[1:]))
    hits_by_theta = [
        counting.count_hits(p, 3000, ApproxFunction(c=0.05, theta=t),
                            TargetSequence.zero()).final_hits
        for t in (0.1, 0.3, 0.6)
    ]
    assert all(b <= a for a, b in zip(hits_by_theta, hits_by_theta[1:]))


def test_dyadic_equals_count_rowwise():
    for s in range(10):
        depth = orbit.required_depth(2000)
        p = orbit.sample_cantor(777, s, depth)
        a = counting.count_hits(p, 2000, PSI, TargetSequence.zero())
        b = counting.dyadic_hits(p, 2000, PSI)
        assert np.array_equal(a.hit, b.hit), s
        assert np.array_equal(a.expected_cum, b.expected_cum)


def test_dyadic_quarter_exact():
    q = orbit.from_binary("01")
    psi = ApproxFunction(c=0.05, theta=0.3)
    curve = counting.dyadic_hits(q, 60, psi)
    # n = 1: frac(2x) = 1/2, distance 1/2 > psi(1); n >= 2: exact dyadic, 0
    assert curve.hit[0] == 0
    assert curve.hit[1:].all()


def test_nearest_dyadic_is_round():
    # |x - p/2^n| is minimized at p = round(2^n x)
    rng = np.random.default_rng(3)
    for x in rng.random(50):
        for n in (1, 3, 7):
            p_best = round(x * 2**n)
            d_best = abs(x - p_best / 2**n)
            for p in (p_best - 1, p_best + 1):
                assert d_best <= abs(x - p / 2**n) + 1e-15


def test_zero_runs_quarter():
    q = orbit.from_binary("01")
    for c_run in (0.5, 2.0, 5.0):
        rep = counting.zero_runs(q, 100, c_run)
        nontrivial = [n for n in range(3, 101)
                      if math.floor(c_run * math.log2(n)) >= 1]
        assert set(rep.positions) >= set(nontrivial)


def test_zero_runs_vacuous():
    q = orbit.from_binary("01")
    rep = counting.zero_runs(q, 50, 0.0)
    assert rep.trivial_count == 50 and rep.count == 0 and rep.positions == []


def test_zero_runs_sampled_nonempty():
    hits = 0
    for i in range(10):
        depth = counting.zero_run_depth(2 * 10**4, 0.5)
        p = orbit.sample_cantor(555, i, depth)
        rep = counting.zero_runs(p, 2 * 10**4, 0.5)
        hits += rep.count > 0
    assert hits >= 9


def test_zero_run_survey_deterministic():
    a = counting.zero_run_survey(8, 5000, 0.5, 42, workers=1)
    b = counting.zero_run_survey(8, 5000, 0.5, 42, workers=4)
    assert a == b


def test_dyadic_agreement_survey():
    rows = counting.dyadic_agreement_survey(6, 1500, PSI, 2024, workers=2)
    assert all(r[1] for r in rows)
    assert all(r[2] == r[3] for r in rows)


def test_ensemble_deterministic_across_workers():
    e1 = counting.ensemble(12, 1500, PSI, TargetSequence.zero(), "mu", 99, workers=1)
    e2 = counting.ensemble(12, 1500, PSI, TargetSequence.zero(), "mu", 99, workers=4)
    assert json.dumps(e1.payload(), sort_keys=True) == json.dumps(e2.payload(), sort_keys=True)


def test_ensemble_median_bands_quick():
    for sampler in ("mu", "lebesgue"):
        ens = counting.ensemble(50, 10**4, PSI, TargetSequence.zero(), sampler, 31,
                                workers=2)
        assert 0.8 <= ens.median_ratio <= 1.2, sampler


def test_lebesgue_mean_matches_prediction():
    # per-n hit probability is exactly min(2 psi, 1) under the uniform law
    m, n_max = 200, 10**4
    ens = counting.ensemble(m, n_max, PSI, TargetSequence.zero(), "lebesgue", 606,
                            workers=2)
    masses = PSI.mass_array(n_max)
    expect = float(np.sum(masses))
    sd = math.sqrt(float(np.sum(masses * (1 - masses))))
    assert abs(float(np.mean(ens.hits)) - expect) <= 3 * sd / math.sqrt(m)


def test_uniform_targets_indistinguishable_from_zero():
    m, n_max = 100, 10**4
    zero = counting.ensemble(m, n_max, PSI, TargetSequence.zero(), "mu", 12, workers=2)
    unif = counting.ensemble(m, n_max, PSI, TargetSequence.iid_uniform(12), "mu", 12,
                             workers=2)
    p = mannwhitneyu(zero.ratios, unif.ratios).pvalue
    assert p > 0.01


def test_ensemble_validation():
    with pytest.raises(ValueError):
        counting.ensemble(0, 10, PSI, TargetSequence.zero(), "mu", 1)
    with pytest.raises(ValueError):
        counting.ensemble(2, 10, PSI, TargetSequence.zero(), "poisson", 1)


def test_precision_error_names_max_safe():
    p = orbit.sample_cantor(1, 1, 120)
    with pytest.raises(orbit.PrecisionExhaustedError) as ei:
        counting.count_hits(p, 5000, PSI, TargetSequence.zero())
    assert ei.value.max_safe_step == p.max_safe_step()
    with pytest.raises(orbit.PrecisionExhaustedError):
        counting.dyadic_hits(p, 5000, PSI)


def test_convergence_sum_classification():
    assert not counting.convergence_sum(ApproxFunction(c=1.0, theta=2.0), 1000).divergent
    harmonic = counting.convergence_sum(ApproxFunction(c=1.0, theta=1.0), 10**5)
    assert harmonic.divergent
    assert abs(harmonic.sum_psi - (math.log(10**5) + 0.5772156649)) < 0.01
    cs = counting.convergence_sum(PSI, 10**5)
    assert cs.divergent and abs(cs.sum_mass - 451.665) < 0.01


def test_target_sequences():
    assert np.array_equal(TargetSequence.zero().array(5), np.zeros(5))
    assert np.array_equal(TargetSequence.constant(0.25).array(3), np.full(3, 0.25))
    with pytest.raises(ValueError):
        TargetSequence.constant(1.0)
    u1 = TargetSequence.iid_uniform(9).array(100)
    u2 = TargetSequence.iid_uniform(9).array(250)
    assert np.array_equal(u1, u2[:100])  # prefix-stable
    assert np.all((u1 >= 0) & (u1 < 1))


def test_target_file_roundtrip(tmp_path):
    path = tmp_path / "targets.txt"
    values = [0.1, 0.25, 0.9, 0.0]
    path.write_text("\n".join(str(v) for v in values) + "\n")
    ts = TargetSequence.from_file(path)
    assert np.array_equal(ts.array(4), np.array(values))
    with pytest.raises(ValueError):
        ts.array(5)
    bad = tmp_path / "bad.txt"
    bad.write_text("1.5\n")
    with pytest.raises(ValueError):
        TargetSequence.from_file(bad)


def test_ensemble_with_file_targets(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("\n".join(str((i * 0.37) % 1.0) for i in range(300)))
    ens = counting.ensemble(4, 300, PSI, TargetSequence.from_file(path), "mu", 5,
                            workers=2)
    assert len(ens.ratios) == 4
