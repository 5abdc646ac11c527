"""Verification experiments: verdicts, targets, determinism."""

import math
from dataclasses import replace

import numpy as np
import pytest

from eihlab import rng
from eihlab.experiments import (
    INCONCLUSIVE,
    PASS,
    ExperimentConfig,
    band_probability,
    capm_convergence_study,
    exact_capm_params,
    hedging_fidelity_study,
    lemma_crosscheck,
    mu_bis_boundary_params,
    one_sided_beat_probability,
    report_to_dict,
    verify_capm,
    verify_index_premium,
    verify_two_sided,
    wilson_ci,
)
from eihlab.market import Measure, reduce_dimension, simulate_terminal
from eihlab.normal import std_normal_cdf, upper_quantile
from eihlab.strategies import bound_check, build_two_sided, event_two_sided, strategy_fires


class TestWilsonCI:
    def test_basic_shape(self):
        low, high = wilson_ci(90, 100)
        assert 0.0 <= low < 0.9 < high <= 1.0

    def test_extreme_counts_stay_in_unit_interval(self):
        assert wilson_ci(0, 50)[0] == 0.0
        assert wilson_ci(50, 50)[1] == 1.0
        assert wilson_ci(0, 50)[1] < 0.1
        assert wilson_ci(50, 50)[0] > 0.9

    def test_empty_sample(self):
        assert wilson_ci(0, 0) == (0.0, 1.0)

    def test_coverage_on_synthetic_bernoulli(self):
        # 1000 repetitions of n=1000 draws at known p; the 95% interval
        # must cover p in at least 93% of them
        p_true = 0.3
        reps, n = 1000, 1000
        u = rng.uniform_pairs(8888, np.arange(reps * n // 2)).reshape(reps, n)
        covered = 0
        for k in range(reps):
            successes = int((u[k] < p_true).sum())
            low, high = wilson_ci(successes, n)
            covered += low <= p_true <= high
        assert covered / reps >= 0.93


class TestVerifyTwoSided:
    def test_exact_capm_passes_and_covers(self, set_a):
        config = ExperimentConfig(
            params=exact_capm_params(set_a), delta=0.05, n_paths=10**5, seed=42)
        report = verify_two_sided(config)
        assert report.verdict == PASS
        assert report.dichotomy_violations == 0
        low, high = report.wilson_ci_95
        assert low <= 0.95 <= high
        assert report.theoretical_target == pytest.approx(0.95, abs=1e-12)

    def test_biased_drift_matches_band_probability(self, set_a):
        config = ExperimentConfig(params=set_a, delta=0.05, n_paths=10**5, seed=144)
        report = verify_two_sided(config)
        assert report.dichotomy_violations == 0
        red = reduce_dimension(set_a)
        from eihlab.strategies import drift_gap
        target = band_probability(
            drift_gap(set_a), red.delta_norm, set_a.t, float(upper_quantile(0.025)))
        assert report.theoretical_target == pytest.approx(target, abs=1e-15)
        low, high = report.wilson_ci_95
        assert low <= target <= high

    def test_dichotomy_holds_under_risk_neutral_measure_too(self, set_a):
        # scope note: no event-probability claim is made off the
        # physical measure, but the payoff/event identity is measure-free
        strat = build_two_sided(set_a, 0.05)
        out = simulate_terminal(set_a, Measure.RISK_NEUTRAL, 50_000, 44)
        event = event_two_sided(set_a, 0.05, out.stock, out.index)
        fires = strategy_fires(strat, set_a, out.index, out.stock)
        assert int((event == fires).sum()) == 0

    def test_config_validation(self, set_a):
        with pytest.raises(ValueError):
            ExperimentConfig(params=set_a, delta=0.05, n_paths=999)
        with pytest.raises(ValueError):
            ExperimentConfig(params=set_a, delta=1.5)
        with pytest.raises(ValueError):
            ExperimentConfig(params=set_a, delta=0.05, eps=0.0)


class TestVerifyCapm:
    def test_bound_holding_is_inconclusive(self, set_a):
        config = ExperimentConfig(params=set_a, delta=0.05, eps=0.05,
                                  n_paths=10**4, seed=45)
        report = verify_capm(config)
        assert report.verdict == INCONCLUSIVE
        assert report.bound.holds
        assert report.empirical_probability is None

    def test_boundary_violation_covers_guarantee(self, set_a):
        params = mu_bis_boundary_params(set_a, 0.05, 0.05, margin=1.0)
        assert not bound_check(params, 0.05, 0.05, "mu_bis").holds
        config = ExperimentConfig(params=params, delta=0.05, eps=0.05,
                                  n_paths=10**5, seed=46)
        report = verify_capm(config)
        assert report.verdict == PASS
        assert report.dichotomy_violations == 0
        low, high = report.wilson_ci_95
        assert low <= 0.95 <= high
        assert report.theoretical_target == pytest.approx(0.95, abs=1e-9)

    def test_double_margin_clears_guarantee(self, set_a):
        params = mu_bis_boundary_params(set_a, 0.05, 0.05, margin=2.0)
        config = ExperimentConfig(params=params, delta=0.05, eps=0.05,
                                  n_paths=10**5, seed=47)
        report = verify_capm(config)
        assert report.verdict == PASS
        assert report.wilson_ci_95[0] > 0.95

    def test_mc_matches_closed_form_target(self, set_a):
        params = mu_bis_boundary_params(set_a, 0.05, 0.05, margin=1.5)
        n = 10**5
        config = ExperimentConfig(params=params, delta=0.05, eps=0.05,
                                  n_paths=n, seed=48)
        report = verify_capm(config)
        p = report.theoretical_target
        se = math.sqrt(p * (1.0 - p) / n)
        assert abs(report.empirical_probability - p) <= 4.0 * se

    def test_target_formula(self, set_a):
        # boundary margin m: beat probability is F(m (z_d + z_e) - z_d)
        z_d = float(upper_quantile(0.05))
        z_e = float(upper_quantile(0.05))
        for margin in (1.0, 1.5, 2.0):
            params = mu_bis_boundary_params(set_a, 0.05, 0.05, margin=margin)
            red = reduce_dimension(params)
            from eihlab.strategies import drift_gap
            got = one_sided_beat_probability(drift_gap(params), red.delta_norm,
                                             params.t, 0.05)
            expected = float(std_normal_cdf(margin * (z_d + z_e) - z_d))
            assert got == pytest.approx(expected, abs=1e-9)


class TestVerifyIndexPremium:
    def test_pinned_premium_reports_recover_band(self, set_a):
        norm_i_sq = float(set_a.sigma_i @ set_a.sigma_i)
        params = replace(set_a, mu_i=set_a.r + norm_i_sq)
        config = ExperimentConfig(params=params, delta=0.05, eps=0.05,
                                  n_paths=10**5, seed=49)
        report = verify_index_premium(config)
        assert report.bound.holds          # zero premium gap
        assert report.verdict == INCONCLUSIVE
        low = report.extras["recover_ci_low"]
        high = report.extras["recover_ci_high"]
        assert low <= 0.95 <= high
        assert report.extras["recover_target"] == pytest.approx(0.95, abs=1e-12)
        assert report.dichotomy_violations == 0

    def test_zero_premium_with_long_horizon_beats(self, set_a):
        norm_i = float(np.linalg.norm(set_a.sigma_i))
        z_sum = float(upper_quantile(0.05)) * 2.0
        horizon = (2.0 * z_sum / norm_i) ** 2
        params = replace(set_a, mu_i=set_a.r, t=horizon)
        assert not bound_check(params, 0.05, 0.05, "index").holds
        config = ExperimentConfig(params=params, delta=0.05, eps=0.05,
                                  n_paths=10**5, seed=50)
        report = verify_index_premium(config)
        assert report.verdict == PASS
        assert report.wilson_ci_95[0] >= 0.95

    def test_degenerate_half_masses_fail_bound_for_long_horizons(self, set_a):
        params = replace(set_a, t=5000.0)
        report = bound_check(params, 0.5, 0.5, "index")
        assert not report.holds  # z-sum is zero, any nonzero gap violates


class TestConvergenceStudy:
    def test_slopes_and_width_ratio(self, set_a):
        study = capm_convergence_study(set_a, 0.05, 0.05, [10.0, 40.0],
                                       n_paths=10**4, seed=51)
        for slope in study.slopes.values():
            assert slope == pytest.approx(-0.5, abs=1e-9)
        first, second = study.rows
        for name in ("width_mu_bis", "width_index", "width_capm1", "width_capm_final"):
            assert second[name] / first[name] == pytest.approx(0.5, abs=1e-12)

    def test_tpd_check_within_errors(self, set_a):
        study = capm_convergence_study(set_a, 0.05, 0.05, [10.0],
                                       n_paths=10**5, seed=52)
        row = study.rows[0]
        assert row["tpd_target"] == pytest.approx(-0.1625, abs=1e-12)
        assert abs(row["tpd_mc_mean"] - row["tpd_target"]) <= 4.0 * row["tpd_se"]

    def test_rejects_bad_grids(self, set_a):
        with pytest.raises(ValueError):
            capm_convergence_study(set_a, 0.05, 0.05, [])
        with pytest.raises(ValueError):
            capm_convergence_study(set_a, 0.05, 0.05, [10.0, 5.0])
        with pytest.raises(ValueError):
            capm_convergence_study(set_a, 0.05, 0.05, [-1.0, 5.0])


class TestLemmaCrosscheck:
    def test_quadrature_agreement(self):
        rows = lemma_crosscheck(25, seed=53, n_mc=2_000)
        assert max(row["abs_gap"] for row in rows) <= 1e-8

    def test_mc_agreement_large_sample(self):
        rows = lemma_crosscheck(1, seed=54, n_mc=10**7)
        (row,) = rows
        assert abs(row["mc_mean"] - row["closed_form"]) <= 4.0 * row["mc_se"]

    def test_zero_tilt_reduces_to_tail_probability(self):
        from eihlab.analytic import gaussian_halfspace_expectation
        value = gaussian_halfspace_expectation((0.0, 0.0), (0.3, 0.4), 0.25)
        assert value == pytest.approx(float(std_normal_cdf(-0.25 / 0.5)), abs=1e-15)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            lemma_crosscheck(0, seed=1)


class TestHedgingStudy:
    def test_smoke_and_nonnegativity(self, set_a):
        config = ExperimentConfig(params=set_a, delta=0.05, n_paths=1000, seed=55)
        rows = hedging_fidelity_study(config, step_counts=(32, 64))
        assert [row["n_steps"] for row in rows] == [32, 64]
        for row in rows:
            assert row["analytic_negative_count"] == 0
            assert row["rms_error"] > 0.0
        assert rows[1]["median_abs_error"] < rows[0]["median_abs_error"]


class TestDeterminism:
    def test_reports_identical_across_worker_counts(self, set_a):
        reports = []
        for workers in (1, 4, 8):
            config = ExperimentConfig(
                params=exact_capm_params(set_a), delta=0.05,
                n_paths=200_000, seed=56, n_workers=workers)
            reports.append(report_to_dict(config, verify_two_sided(config)))
        assert reports[0] == reports[1] == reports[2]

    def test_repeat_run_identical(self, set_a):
        config = ExperimentConfig(params=set_a, delta=0.05, n_paths=10**4, seed=57)
        a = report_to_dict(config, verify_two_sided(config))
        b = report_to_dict(config, verify_two_sided(config))
        assert a == b
