import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relscale import (
    FitError,
    RelativeFit,
    bootstrap_sign_test,
    crossover,
    fit_loglinear,
    fit_power_law,
    fit_relative,
    pairs_from_frontiers,
    pairs_from_runs,
    percent_per_decade,
    predict,
    slope_covariate_correlation,
)
from relscale.lawfit import fit_power_law_floored

SCALES_5 = [1e18, 3e18, 1e19, 3e19, 1e20]


class TestPowerLaw:
    def test_noiseless_recovery(self):
        points = [(f, 3.0 * f**-0.1) for f in SCALES_5]
        fit = fit_power_law(points)
        assert fit.alpha == pytest.approx(3.0, rel=1e-9)
        assert fit.beta == pytest.approx(0.1, rel=1e-9)
        assert fit.r2 == pytest.approx(1.0, abs=1e-12)

    def test_two_point_endpoints(self):
        # Independent oracle: the exact two-point solve.
        f1, e1, f2, e2 = 1e18, 2.45, 1e20, 1.56
        beta_expected = -math.log(e2 / e1) / math.log(f2 / f1)
        fit = fit_power_law([(f1, e1), (f2, e2)])
        assert fit.beta == pytest.approx(beta_expected, abs=1e-12)
        assert fit.beta == pytest.approx(0.0980, abs=1e-4)
        # Midpoint prediction is the geometric mean of the endpoints.
        assert fit.predict(1e19) == pytest.approx(math.sqrt(e1 * e2), rel=1e-12)

    def test_constant_series(self):
        fit = fit_power_law([(f, 1.7) for f in SCALES_5])
        assert fit.beta == pytest.approx(0.0, abs=1e-12)
        assert fit.alpha == pytest.approx(1.7, rel=1e-12)
        assert fit.r2 == 1.0

    def test_non_positive_error_rejected(self):
        with pytest.raises(FitError, match="non-positive"):
            fit_power_law([(1e18, 1.0), (1e19, 0.0)])

    def test_degenerate_scales_rejected(self):
        with pytest.raises(FitError, match="equal"):
            fit_power_law([(1e18, 1.0), (1e18, 2.0)])

    def test_needs_two_points(self):
        with pytest.raises(FitError):
            fit_power_law([(1e18, 1.0)])

    def test_predict_identity(self):
        fit = fit_power_law([(1.0, 1.0), (10.0, 1.0)])
        assert fit.predict(123.0) == 1.0

    def test_predict_direct(self):
        fit = fit_power_law([(f, 3.0 * f**-0.1) for f in SCALES_5])
        assert predict(fit, 1e10) == pytest.approx(0.3, rel=1e-9)

    def test_interpolation_consistency(self):
        points = [(f, 2.2 * f**-0.07) for f in SCALES_5]
        fit = fit_power_law(points)
        for f, e in points:
            assert fit.predict(f) == pytest.approx(e, rel=1e-9)

    def test_huber_matches_ols_on_clean_data(self):
        points = [(f, 3.0 * f**-0.1) for f in SCALES_5]
        fit = fit_power_law(points, estimator="huber")
        assert fit.beta == pytest.approx(0.1, rel=1e-6)

    def test_floored_extension_recovers_floor(self):
        points = [(f, 0.5 + 4.0 * f**-0.25) for f in np.geomspace(1e10, 1e20, 12)]
        fit = fit_power_law_floored(points)
        assert fit.floor == pytest.approx(0.5, rel=1e-4)
        assert fit.beta == pytest.approx(0.25, rel=1e-4)


class TestLogLinear:
    def test_flat(self):
        fit = fit_loglinear([(f, 0.42) for f in SCALES_5])
        assert fit.slope_per_decade == pytest.approx(0.0, abs=1e-15)

    def test_exact_line(self):
        points = [(f, 0.1 + 0.05 * math.log10(f / 1e18)) for f in SCALES_5[:4]]
        fit = fit_loglinear(points)
        assert fit.slope_per_decade == pytest.approx(0.05, abs=1e-12)
        assert fit.predict(1e18) == pytest.approx(0.1, abs=1e-12)

    def test_noisy_slope_against_normal_equations_oracle(self):
        rng = np.random.default_rng(42)
        true_slope = -0.0029
        scales = np.geomspace(1e18, 1e20, 12)
        x = np.log10(scales)
        y = 0.08 + true_slope * (x - 18.0) + rng.normal(0, 0.0005, size=len(x))
        fit = fit_loglinear(list(zip(scales, y)))
        # Oracle: solve the 2x2 normal equations directly.
        design = np.column_stack([np.ones_like(x), x])
        coef = np.linalg.solve(design.T @ design, design.T @ y)
        assert fit.slope_per_decade == pytest.approx(coef[1], abs=1e-9)
        residuals = y - design @ coef
        dof = len(x) - 2
        se = math.sqrt(
            float(residuals @ residuals) / dof / float(np.sum((x - x.mean()) ** 2))
        )
        assert abs(fit.slope_per_decade - true_slope) <= 3 * se

    def test_bounded_metrics_allowed(self):
        fit = fit_loglinear([(1e18, 0.0), (1e19, -0.3), (1e20, 0.1)])
        assert math.isfinite(fit.slope_per_decade)

    def test_intercept_at_geometric_mean(self):
        points = [(f, 1.0 + 0.2 * math.log10(f)) for f in SCALES_5]
        fit = fit_loglinear(points)
        log_ref = math.log10(fit.ref_scale)
        expected_ref = np.mean([math.log10(f) for f in SCALES_5])
        assert log_ref == pytest.approx(expected_ref, abs=1e-12)


class TestRelativeFit:
    def test_constant_ratio(self):
        pairs = [(f, 0.8 * (3.0 * f**-0.1), 3.0 * f**-0.1) for f in SCALES_5]
        fit = fit_relative(pairs, run_bootstrap=False)
        assert fit.gamma == pytest.approx(0.8, rel=1e-12)
        assert fit.delta_beta == pytest.approx(0.0, abs=1e-12)

    def test_two_point_ratio_endpoints(self):
        # Ratios 1.29 at 1e18 and 1.05 at 1e20; oracle is the closed form.
        pairs = [(1e18, 1.29 * 2.0, 2.0), (1e20, 1.05 * 1.5, 1.5)]
        expected = math.log(1.05 / 1.29) / math.log(1e20 / 1e18)
        fit = fit_relative(pairs, run_bootstrap=False)
        assert fit.delta_beta == pytest.approx(expected, abs=1e-12)
        assert fit.delta_beta == pytest.approx(-0.0447, abs=5e-4)
        # gamma solves G(1e18) = 1.29 exactly on two points.
        assert fit.gamma * 1e18**fit.delta_beta == pytest.approx(1.29, rel=1e-9)

    def test_identical_series(self):
        series = [(f, 2.0 * f**-0.08) for f in SCALES_5]
        pairs = [(f, e, e) for f, e in series]
        ratio = fit_relative(pairs, run_bootstrap=False)
        assert ratio.gamma == pytest.approx(1.0, rel=1e-12)
        assert ratio.delta_beta == pytest.approx(0.0, abs=1e-12)
        diff = fit_relative(pairs, mode="difference", run_bootstrap=False)
        assert diff.delta_beta == pytest.approx(0.0, abs=1e-12)

    def test_zero_baseline_rejected_in_ratio_mode(self):
        with pytest.raises(FitError, match="baseline"):
            fit_relative([(1e18, 1.0, 0.0), (1e19, 1.0, 1.0)], run_bootstrap=False)

    def test_difference_mode_slope(self):
        # Differences exactly linear in log10 F with slope -0.02/decade.
        pairs = [
            (f, 1.0 + 0.1 - 0.02 * math.log10(f / 1e18), 1.0) for f in SCALES_5
        ]
        fit = fit_relative(pairs, mode="difference", run_bootstrap=False)
        assert fit.delta_beta == pytest.approx(-0.02, abs=1e-12)

    def test_needs_two_pairs(self):
        with pytest.raises(FitError):
            fit_relative([(1e18, 1.0, 1.0)], run_bootstrap=False)

    @given(
        alpha_t=st.floats(min_value=0.5, max_value=5.0),
        alpha_b=st.floats(min_value=0.5, max_value=5.0),
        beta_t=st.floats(min_value=0.0, max_value=0.3),
        beta_b=st.floats(min_value=0.0, max_value=0.3),
    )
    def test_consistency_identity_noiseless(self, alpha_t, alpha_b, beta_t, beta_b):
        pairs = [
            (f, alpha_t * f**-beta_t, alpha_b * f**-beta_b) for f in SCALES_5
        ]
        fit_t = fit_power_law([(f, t) for f, t, _ in pairs])
        fit_b = fit_power_law([(f, b) for f, _, b in pairs])
        rel = fit_relative(pairs, run_bootstrap=False)
        assert abs(rel.delta_beta - (fit_b.beta - fit_t.beta)) <= 1e-9
        assert rel.gamma == pytest.approx(fit_t.alpha / fit_b.alpha, rel=1e-9)

    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_ratio_scale_invariance(self, seed):
        # Multiplying both sides of each pair by a per-run constant is a no-op.
        rng = np.random.default_rng(seed)
        base = [(f, 1.3 * f**-0.12, 1.0 * f**-0.1) for f in SCALES_5]
        constants = rng.uniform(0.5, 2.0, size=len(base))
        scaled = [(f, c * t, c * b) for (f, t, b), c in zip(base, constants)]
        fit_base = fit_relative(base, run_bootstrap=False)
        fit_scaled = fit_relative(scaled, run_bootstrap=False)
        assert fit_scaled.gamma == pytest.approx(fit_base.gamma, rel=1e-9)
        assert fit_scaled.delta_beta == pytest.approx(fit_base.delta_beta, abs=1e-9)

    @given(k=st.floats(min_value=0.01, max_value=100.0))
    def test_axis_rescaling(self, k):
        base = [(f, 1.3 * f**-0.12, 1.0 * f**-0.1) for f in SCALES_5]
        rescaled = [(k * f, t, b) for f, t, b in base]
        fit_base = fit_relative(base, run_bootstrap=False)
        fit_rescaled = fit_relative(rescaled, run_bootstrap=False)
        assert fit_rescaled.delta_beta == pytest.approx(fit_base.delta_beta, abs=1e-9)
        assert fit_rescaled.gamma == pytest.approx(
            fit_base.gamma * k**-fit_base.delta_beta, rel=1e-6
        )

    def test_antisymmetry(self):
        pairs = [(f, 1.3 * f**-0.12, 1.0 * f**-0.1) for f in SCALES_5]
        swapped = [(f, b, t) for f, t, b in pairs]
        for mode in ("ratio", "difference"):
            forward = fit_relative(pairs, mode=mode, run_bootstrap=False)
            backward = fit_relative(swapped, mode=mode, run_bootstrap=False)
            assert backward.delta_beta == pytest.approx(-forward.delta_beta, abs=1e-12)
            if mode == "ratio":
                assert backward.gamma == pytest.approx(1.0 / forward.gamma, rel=1e-9)


class TestBootstrap:
    def noisy_pairs(self, seed, n_scales=15, delta_beta=-0.02, sigma=0.01):
        rng = np.random.default_rng(seed)
        scales = np.geomspace(1e18, 1e20, n_scales)
        pairs = []
        for f in scales:
            base = 3.0 * f**-0.10
            treat = 3.0 * f ** -(0.10 - delta_beta)
            pairs.append(
                (
                    float(f),
                    float(treat * math.exp(rng.normal(0, sigma))),
                    float(base * math.exp(rng.normal(0, sigma))),
                )
            )
        return pairs

    def test_zero_variance_input_collapses_ci(self):
        pairs = [(f, 0.8 * (2.0 * f**-0.1), 2.0 * f**-0.1) for f in SCALES_5]
        p_sign, ci_low, ci_high = bootstrap_sign_test(pairs, resamples=500, seed=1)
        assert ci_high - ci_low <= 1e-9
        assert abs(ci_low) <= 1e-9 and abs(ci_high) <= 1e-9

    def test_deterministic_across_workers(self):
        pairs = self.noisy_pairs(seed=7)
        runs = [
            bootstrap_sign_test(pairs, resamples=400, seed=11, workers=w)
            for w in (1, 2, 4)
        ]
        assert runs[0] == runs[1] == runs[2]

    def test_needs_three_pairs(self):
        with pytest.raises(FitError, match="3"):
            bootstrap_sign_test([(1e18, 1.0, 1.0), (1e19, 1.0, 1.0)])

    def test_p_floor(self):
        pairs = self.noisy_pairs(seed=3)
        p_sign, _, _ = bootstrap_sign_test(pairs, resamples=100, seed=5)
        assert p_sign >= 2 / 100

    def test_strong_signal_is_significant(self):
        pairs = self.noisy_pairs(seed=9)
        fit = fit_relative(pairs, resamples=1000, seed=2)
        assert fit.p_sign is not None and fit.p_sign < 0.05
        assert fit.ci_low <= fit.delta_beta <= fit.ci_high
        assert fit.sign_significant

    def test_fit_relative_skips_bootstrap_below_three_pairs(self):
        fit = fit_relative([(1e18, 1.2, 1.0), (1e20, 1.1, 1.0)])
        assert fit.p_sign is None and fit.ci_low is None


class TestPercentPerDecade:
    def test_zero(self):
        assert percent_per_decade(0.0) == 0.0

    def test_one_decade(self):
        assert percent_per_decade(1.0) == pytest.approx(900.0, rel=1e-12)

    def test_small_negative(self):
        expected = (10**-0.01 - 1) * 100
        assert percent_per_decade(-0.01) == pytest.approx(expected, abs=1e-12)
        assert percent_per_decade(-0.01) == pytest.approx(-2.276, abs=1e-3)


def rel(gamma, delta_beta, mode="ratio"):
    return RelativeFit(
        gamma=gamma, delta_beta=delta_beta, mode=mode,
        p_sign=None, ci_low=None, ci_high=None, n_pairs=5,
    )


class TestCrossover:
    def test_closed_form(self):
        result = crossover(rel(0.9, 0.02), rel(0.8, 0.05), (1.0, 1e3))
        expected = (0.9 / 0.8) ** (1.0 / 0.03)
        assert result.f_star == pytest.approx(expected, rel=1e-12)
        assert result.f_star == pytest.approx(50.7, abs=0.1)
        assert result.in_range

    def test_equal_intercepts_cross_at_unit_scale(self):
        result = crossover(rel(0.8, 0.02), rel(0.8, 0.05), (1e18, 1e20))
        assert result.f_star == pytest.approx(1.0, rel=1e-12)
        assert not result.in_range

    def test_parallel_curves_error(self):
        with pytest.raises(FitError, match="parallel"):
            crossover(rel(0.9, 0.02), rel(0.8, 0.02), (1.0, 1e3))

    def test_antisymmetry(self):
        a, b = rel(0.9, 0.02), rel(0.8, 0.05)
        fwd = crossover(a, b, (1.0, 1e3))
        bwd = crossover(b, a, (1.0, 1e3))
        assert fwd.f_star == pytest.approx(bwd.f_star, rel=1e-12)

    def test_requires_ratio_mode(self):
        with pytest.raises(FitError, match="ratio"):
            crossover(rel(0.9, 0.02, mode="difference"), rel(0.8, 0.05), (1.0, 1e3))


def pearson_oracle(x, y):
    xc = x - x.mean()
    yc = y - y.mean()
    return float(xc @ yc) / math.sqrt(float(xc @ xc) * float(yc @ yc))


class TestCorrelation:
    def test_perfect_linear(self):
        covariate = [("a", 10.0), ("b", 100.0), ("c", 1000.0), ("d", 10000.0)]
        slopes = [(g, 0.5 + 0.3 * math.log10(v)) for g, v in covariate]
        result = slope_covariate_correlation(slopes, covariate, seed=0)
        assert result.pearson_r == pytest.approx(1.0, abs=1e-12)
        assert result.regression_slope == pytest.approx(0.3, abs=1e-12)

    def test_exhaustive_p_matches_hand_enumeration(self):
        covariate = [("a", 10.0), ("b", 100.0), ("c", 1000.0), ("d", 10000.0)]
        slopes = [("a", -0.5), ("b", -0.1), ("c", 0.2), ("d", 0.9)]
        result = slope_covariate_correlation(slopes, covariate)
        # Independent oracle: enumerate all 24 orderings by hand.
        x = np.log10([v for _, v in covariate])
        y = np.array([s for _, s in slopes])
        r_obs = pearson_oracle(x, y)
        hits = sum(
            1
            for perm in itertools.permutations(range(4))
            if abs(pearson_oracle(x, y[list(perm)])) >= abs(r_obs)
        )
        assert result.p_value == hits / math.factorial(4)
        assert result.p_value == pytest.approx(2 / 24)

    def test_monte_carlo_path(self):
        rng = np.random.default_rng(0)
        groups = [f"g{i}" for i in range(9)]
        covariate = [(g, float(10 ** (1 + i / 3))) for i, g in enumerate(groups)]
        slopes = [
            (g, 0.1 * math.log10(v) + rng.normal(0, 0.05)) for g, v in covariate
        ]
        result = slope_covariate_correlation(
            slopes, covariate, permutations=2000, seed=4
        )
        assert 1 / 2001 <= result.p_value <= 1.0
        assert result.n == 9

    def test_monte_carlo_deterministic_across_workers(self):
        rng = np.random.default_rng(1)
        groups = [f"g{i}" for i in range(10)]
        covariate = [(g, float(10 ** (1 + i / 4))) for i, g in enumerate(groups)]
        slopes = [(g, float(rng.normal())) for g in groups]
        results = [
            slope_covariate_correlation(
                slopes, covariate, permutations=999, seed=3, workers=w
            )
            for w in (1, 3)
        ]
        assert results[0] == results[1]

    def test_zero_variance_covariate(self):
        covariate = [("a", 5.0), ("b", 5.0), ("c", 5.0)]
        slopes = [("a", 0.1), ("b", 0.2), ("c", 0.3)]
        with pytest.raises(FitError, match="variance"):
            slope_covariate_correlation(slopes, covariate)

    def test_unmatched_group(self):
        with pytest.raises(FitError, match="missing"):
            slope_covariate_correlation(
                [("a", 0.1), ("b", 0.2), ("missing", 0.3)],
                [("a", 1.0), ("b", 2.0)],
            )

    def test_non_positive_covariate(self):
        with pytest.raises(FitError, match="positive"):
            slope_covariate_correlation(
                [("a", 0.1), ("b", 0.2), ("c", 0.3)],
                [("a", 1.0), ("b", -2.0), ("c", 3.0)],
            )

    @given(
        scale=st.floats(min_value=0.1, max_value=10.0),
        shift=st.floats(min_value=-5.0, max_value=5.0),
    )
    def test_pearson_invariant_under_affine_slope_transform(self, scale, shift):
        covariate = [("a", 10.0), ("b", 40.0), ("c", 200.0), ("d", 5000.0)]
        slopes = [("a", -0.4), ("b", 0.3), ("c", -0.1), ("d", 0.8)]
        transformed = [(g, scale * s + shift) for g, s in slopes]
        base = slope_covariate_correlation(slopes, covariate)
        moved = slope_covariate_correlation(transformed, covariate)
        assert moved.pearson_r == pytest.approx(base.pearson_r, abs=1e-9)


class TestPairing:
    def test_pairs_from_runs(self, constant_ratio_runs):
        pairs = pairs_from_runs(constant_ratio_runs, "bpb/treat", "bpb/base")
        assert len(pairs) == 5
        fit = fit_relative(pairs, run_bootstrap=False)
        assert fit.gamma == pytest.approx(0.8, rel=1e-12)

    def test_pairs_from_runs_unpaired(self, constant_ratio_runs):
        with pytest.raises(FitError, match="unpaired"):
            pairs_from_runs(constant_ratio_runs, "bpb/treat", "missing")

    def test_pairs_from_frontiers_alignment(self):
        from relscale import Subgroup, SyntheticSpec, extract_frontier, generate

        spec = SyntheticSpec(
            budgets=(1e18, 1e19, 1e20),
            subgroups=(Subgroup("t", 3.9, 0.12), Subgroup("b", 3.0, 0.10)),
            widths_per_budget=5,
        )
        runs = generate(spec)
        st_series = extract_frontier(runs, "t")
        sb_series = extract_frontier(runs, "b")
        pairs = pairs_from_frontiers(st_series, sb_series)
        assert len(pairs) == 3
        fit = fit_relative(pairs, run_bootstrap=False)
        assert fit.gamma == pytest.approx(1.3, rel=1e-6)
        assert fit.delta_beta == pytest.approx(-0.02, abs=1e-6)
