"""Absolute, log-linear, and relative scaling-law fits with inference.

The absolute law E(F) = alpha * F^-beta is fit by least squares of ln E on
ln F. The relative law G(F) = E_t(F)/E_b(F) = gamma * F^delta_beta is fit
on run-paired errors: in ratio mode by regressing ln(E_t/E_b) on ln F, in
difference mode by regressing E_t - E_b on log10 F. delta_beta < 0 means
the treatment improves faster than the baseline (the gap narrows);
delta_beta > 0 means it widens.

Inference is resampling-based: a pair-level bootstrap for the sign and CI
of the relative slope, and a permutation test for slope-covariate Pearson
correlations. Both use counter-based per-resample seed streams, so results
are reproducible under any degree of parallelism.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError
from .frontier import FrontierSeries
from .store import RunSet

RelativeMode = Literal["ratio", "difference"]

#: Curves whose exponents differ by less than this are treated as parallel.
PARALLEL_TOL = 1e-12

#: Maximum redraws of a degenerate bootstrap resample (all scales equal).
MAX_RESAMPLE_RETRIES = 100


@dataclass(frozen=True)
class PowerLawFit:
    """Absolute law E(F) = alpha * F^-beta on one scale axis."""

    alpha: float
    beta: float
    r2: float
    n: int
    scale_axis: str = "flops"

    def __post_init__(self):
        if self.alpha <= 0:
            raise FitError("alpha must be positive")
        if self.n < 2:
            raise FitError("a power-law fit needs at least 2 points")

    def predict(self, scale):
        """E(F) = alpha * F^-beta; accepts scalars or arrays."""
        return self.alpha * scale ** (-self.beta)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "r2": self.r2,
            "n": self.n,
            "scale_axis": self.scale_axis,
        }


@dataclass(frozen=True)
class PowerLawFloorFit:
    """Extension: three-parameter law E(F) = alpha * F^-beta + floor."""

    alpha: float
    beta: float
    floor: float
    r2: float
    n: int
    scale_axis: str = "flops"

    def predict(self, scale):
        return self.alpha * scale ** (-self.beta) + self.floor


@dataclass(frozen=True)
class LogLinearFit:
    """Linear trend of a bounded metric in log10 scale (e.g. pp per decade)."""

    slope_per_decade: float
    intercept_at_ref: float
    ref_scale: float
    r2: float

    def __post_init__(self):
        if self.ref_scale <= 0 or not math.isfinite(self.slope_per_decade):
            raise FitError("invalid log-linear fit parameters")

    def predict(self, scale):
        return self.intercept_at_ref + self.slope_per_decade * np.log10(
            np.asarray(scale, dtype=float) / self.ref_scale
        )

    def to_dict(self) -> dict:
        return {
            "slope_per_decade": self.slope_per_decade,
            "intercept_at_ref": self.intercept_at_ref,
            "ref_scale": self.ref_scale,
            "r2": self.r2,
        }


@dataclass(frozen=True)
class RelativeFit:
    """Relative law between a treatment and a baseline error series.

    Ratio mode: G(F) = gamma * F^delta_beta. Difference mode: delta_beta is
    the per-decade slope of E_t - E_b and gamma the intercept at unit scale.
    p_sign and the CI come from the pair bootstrap; None when fewer than
    3 pairs are available.
    """

    gamma: float
    delta_beta: float
    mode: RelativeMode
    p_sign: float | None
    ci_low: float | None
    ci_high: float | None
    n_pairs: int

    def __post_init__(self):
        if self.mode == "ratio" and self.gamma <= 0:
            raise FitError("gamma must be positive in ratio mode")
        if self.p_sign is not None and not 0.0 <= self.p_sign <= 1.0:
            raise FitError("p_sign must lie in [0, 1]")

    @property
    def sign_significant(self) -> bool:
        """Whether the slope sign may be interpreted (bootstrap p < 0.05)."""
        return self.p_sign is not None and self.p_sign < 0.05

    def predict(self, scale):
        """Fitted relative trend: ratio gamma*F^db, or gamma + db*log10(F)."""
        scale = np.asarray(scale, dtype=float)
        if self.mode == "ratio":
            return self.gamma * scale**self.delta_beta
        return self.gamma + self.delta_beta * np.log10(scale)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "delta_beta": self.delta_beta,
            "mode": self.mode,
            "p_sign": self.p_sign,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n_pairs": self.n_pairs,
        }


@dataclass(frozen=True)
class CrossoverResult:
    """Scale at which two relative curves intersect."""

    f_star: float
    in_range: bool

    def __post_init__(self):
        if self.f_star <= 0:
            raise FitError("crossover scale must be positive")

    def to_dict(self) -> dict:
        return {"f_star": self.f_star, "in_range": self.in_range}


@dataclass(frozen=True)
class CorrelationResult:
    """Pearson correlation of relative slopes against a log-scaled covariate."""

    pearson_r: float
    p_value: float
    regression_slope: float
    n: int

    def __post_init__(self):
        if abs(self.pearson_r) > 1.0 + 1e-12:
            raise FitError("|pearson_r| must not exceed 1")
        if not 0.0 <= self.p_value <= 1.0:
            raise FitError("p_value must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "pearson_r": self.pearson_r,
            "p_value": self.p_value,
            "regression_slope": self.regression_slope,
            "n": self.n,
        }


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Slope, intercept, and R^2 of y on x; errors on degenerate x."""
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise FitError("degenerate fit: all scale values are equal")
    slope = float(xc @ yc) / sxx
    intercept = float(y.mean() - slope * x.mean())
    residuals = y - (intercept + slope * x)
    ss_res = float(residuals @ residuals)
    ss_tot = float(yc @ yc)
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return slope, intercept, r2


def _huber_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Robust line fit (Huber loss) seeded from the OLS solution."""
    slope0, intercept0, _ = _ols(x, y)
    scale = max(float(np.std(y - (intercept0 + slope0 * x))), 1e-12)

    def residual(theta):
        return y - (theta[1] + theta[0] * x)

    result = least_squares(
        residual, x0=[slope0, intercept0], loss="huber", f_scale=scale
    )
    return float(result.x[0]), float(result.x[1])


def fit_power_law(
    points: Sequence[tuple[float, float]],
    scale_axis: str = "flops",
    estimator: Literal["ols", "huber"] = "ols",
) -> PowerLawFit:
    """Fit E(F) = alpha * F^-beta by regression of ln E on ln F.

    R^2 is computed in log space. The Huber estimator is available behind
    the flag; OLS is the contract.
    """
    scales = np.asarray([p[0] for p in points], dtype=float)
    errors = np.asarray([p[1] for p in points], dtype=float)
    if len(scales) < 2:
        raise FitError("a power-law fit needs at least 2 points")
    if np.any(scales <= 0):
        raise FitError("scale values must be positive")
    if np.any(errors <= 0):
        raise FitError("power law undefined for non-positive error values")
    x = np.log(scales)
    y = np.log(errors)
    if estimator == "huber":
        slope, intercept = _huber_line(x, y)
        _, _, r2 = _ols(x, y)
    elif estimator == "ols":
        slope, intercept, r2 = _ols(x, y)
    else:
        raise FitError(f"unknown estimator {estimator!r}")
    return PowerLawFit(
        alpha=float(np.exp(intercept)),
        beta=-slope,
        r2=r2,
        n=len(scales),
        scale_axis=scale_axis,
    )


def fit_power_law_floored(
    points: Sequence[tuple[float, float]], scale_axis: str = "flops"
) -> PowerLawFloorFit:
    """Extension flag: fit E(F) = alpha * F^-beta + floor.

    Not part of the default two-parameter contract; excluded from the
    acceptance surface.
    """
    scales = np.asarray([p[0] for p in points], dtype=float)
    errors = np.asarray([p[1] for p in points], dtype=float)
    if len(scales) < 3:
        raise FitError("the floored fit needs at least 3 points")
    if np.any(scales <= 0) or np.any(errors <= 0):
        raise FitError("scales and errors must be positive")
    base = fit_power_law(points, scale_axis=scale_axis)
    hi = float(errors.min()) * (1.0 - 1e-9)

    def residual(theta):
        log_alpha, beta, floor = theta
        pred = np.exp(log_alpha - beta * np.log(scales)) + floor
        return np.log(np.maximum(pred, 1e-300)) - np.log(errors)

    best = None
    for frac in (0.0, 0.5, 0.9, 0.99):
        start_floor = frac * hi
        reduced = [(f, max(e - start_floor, e * 1e-6)) for f, e in points]
        seed_fit = fit_power_law(reduced, scale_axis=scale_axis)
        result = least_squares(
            residual,
            x0=[math.log(seed_fit.alpha), seed_fit.beta, start_floor],
            bounds=([-np.inf, -np.inf, 0.0], [np.inf, np.inf, max(hi, 1e-300)]),
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
        )
        if math.isfinite(result.cost) and (best is None or result.cost < best.cost):
            best = result
    if best is None:
        raise FitError("floored fit failed to converge")
    log_alpha, beta, floor = best.x
    pred = np.exp(log_alpha - beta * np.log(scales)) + floor
    y = np.log(errors)
    ss_res = float(np.sum((y - np.log(pred)) ** 2))
    yc = y - y.mean()
    ss_tot = float(yc @ yc)
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return PowerLawFloorFit(
        alpha=float(np.exp(log_alpha)),
        beta=float(beta),
        floor=float(floor),
        r2=r2,
        n=len(scales),
        scale_axis=scale_axis,
    )


def predict(fit: PowerLawFit, scale):
    """Functional form of :meth:`PowerLawFit.predict`."""
    return fit.predict(scale)


def fit_loglinear(points: Sequence[tuple[float, float]]) -> LogLinearFit:
    """Linear regression of a metric on log10 scale.

    The metric may be any finite real (bounded metrics such as
    probabilities are fine). The intercept is reported at the geometric
    mean of the scales.
    """
    scales = np.asarray([p[0] for p in points], dtype=float)
    values = np.asarray([p[1] for p in points], dtype=float)
    if len(scales) < 2:
        raise FitError("a log-linear fit needs at least 2 points")
    if np.any(scales <= 0):
        raise FitError("scale values must be positive")
    if not np.all(np.isfinite(values)):
        raise FitError("metric values must be finite")
    x = np.log10(scales)
    slope, intercept, r2 = _ols(x, values)
    ref = 10.0 ** float(x.mean())
    return LogLinearFit(
        slope_per_decade=slope,
        intercept_at_ref=float(intercept + slope * x.mean()),
        ref_scale=ref,
        r2=r2,
    )


def _relative_xy(
    pairs: Sequence[tuple[float, float, float]], mode: RelativeMode
) -> tuple[np.ndarray, np.ndarray]:
    scales = np.asarray([p[0] for p in pairs], dtype=float)
    treatment = np.asarray([p[1] for p in pairs], dtype=float)
    baseline = np.asarray([p[2] for p in pairs], dtype=float)
    if np.any(scales <= 0):
        raise FitError("scale values must be positive")
    if mode == "ratio":
        if np.any(baseline <= 0):
            raise FitError("zero or negative baseline error in ratio mode")
        if np.any(treatment <= 0):
            raise FitError("zero or negative treatment error in ratio mode")
        return np.log(scales), np.log(treatment / baseline)
    if mode == "difference":
        return np.log10(scales), treatment - baseline
    raise FitError(f"unknown relative mode {mode!r}")


def fit_relative(
    pairs: Sequence[tuple[float, float, float]],
    mode: RelativeMode = "ratio",
    resamples: int = 2000,
    seed: int = 0,
    run_bootstrap: bool = True,
    workers: int = 1,
) -> RelativeFit:
    """Fit the relative law on (scale, treatment error, baseline error) pairs.

    Both errors must come from the same run at each scale (pair upstream
    with :func:`pairs_from_runs` or :func:`pairs_from_frontiers`). When at
    least 3 pairs are available and ``run_bootstrap`` is set, p_sign and the
    95% CI are filled by :func:`bootstrap_sign_test`.
    """
    if len(pairs) < 2:
        raise FitError("a relative fit needs at least 2 pairs")
    x, y = _relative_xy(pairs, mode)
    slope, intercept, _ = _ols(x, y)
    gamma = float(np.exp(intercept)) if mode == "ratio" else float(intercept)
    p_sign = ci_low = ci_high = None
    if run_bootstrap and len(pairs) >= 3:
        p_sign, ci_low, ci_high = bootstrap_sign_test(
            pairs, mode=mode, resamples=resamples, seed=seed, workers=workers
        )
        # Percentile intervals do not mathematically guarantee containing the
        # point estimate; widen so the type invariant always holds.
        ci_low = min(ci_low, slope)
        ci_high = max(ci_high, slope)
    return RelativeFit(
        gamma=gamma,
        delta_beta=float(slope),
        mode=mode,
        p_sign=p_sign,
        ci_low=ci_low,
        ci_high=ci_high,
        n_pairs=len(pairs),
    )


def _chunk_bounds(total: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(workers, total))
    size = (total + workers - 1) // workers
    return [(lo, min(lo + size, total)) for lo in range(0, total, size)]


def bootstrap_slopes(
    pairs: Sequence[tuple[float, float, float]],
    mode: RelativeMode = "ratio",
    resamples: int = 2000,
    seed: int = 0,
    workers: int = 1,
) -> np.ndarray:
    """Per-resample relative slopes from a pair-level bootstrap.

    Each resample draws pairs with replacement from its own
    counter-derived seed stream, so the vector is bit-identical for a
    given (input, seed, resamples) under any parallel schedule.
    Degenerate resamples (all scales equal) are redrawn from the same
    stream, up to a retry cap.
    """
    n = len(pairs)
    if n < 3:
        raise FitError("bootstrap needs at least 3 pairs to resample")
    if resamples < 2:
        raise FitError("resamples must be at least 2")
    x, y = _relative_xy(pairs, mode)
    children = np.random.SeedSequence(seed).spawn(resamples)
    slopes = np.empty(resamples, dtype=float)

    def run_chunk(bounds: tuple[int, int]) -> None:
        lo, hi = bounds
        for i in range(lo, hi):
            rng = np.random.default_rng(children[i])
            for attempt in range(MAX_RESAMPLE_RETRIES + 1):
                idx = rng.integers(0, n, size=n)
                xs = x[idx]
                xc = xs - xs.mean()
                sxx = float(xc @ xc)
                if sxx > 0.0:
                    ys = y[idx]
                    slopes[i] = float(xc @ (ys - ys.mean())) / sxx
                    break
            else:
                raise FitError(
                    f"resample {i} degenerate after {MAX_RESAMPLE_RETRIES} retries "
                    f"(all scales equal)"
                )

    bounds = _chunk_bounds(resamples, workers)
    if len(bounds) == 1:
        run_chunk(bounds[0])
    else:
        with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
            for _ in pool.map(run_chunk, bounds):
                pass
    return slopes


def bootstrap_sign_test(
    pairs: Sequence[tuple[float, float, float]],
    mode: RelativeMode = "ratio",
    resamples: int = 2000,
    seed: int = 0,
    workers: int = 1,
) -> tuple[float, float, float]:
    """Sign p-value and percentile CI for the relative slope.

    The two-sided sign p-value is
    2 * min(frac(slope <= 0), frac(slope >= 0)), floored at 2/resamples
    (an empirical bootstrap cannot certify smaller); the CI is the
    empirical 2.5/97.5 percentile interval of :func:`bootstrap_slopes`.
    """
    slopes = bootstrap_slopes(
        pairs, mode=mode, resamples=resamples, seed=seed, workers=workers
    )
    frac_le = float(np.mean(slopes <= 0.0))
    frac_ge = float(np.mean(slopes >= 0.0))
    p_sign = 2.0 * min(frac_le, frac_ge)
    p_sign = min(1.0, max(p_sign, 2.0 / resamples))
    ci_low, ci_high = np.percentile(slopes, [2.5, 97.5])
    return p_sign, float(ci_low), float(ci_high)


def percent_per_decade(delta_beta: float) -> float:
    """Relative-error change per 10x scale implied by the exponent."""
    if not math.isfinite(delta_beta):
        raise FitError("delta_beta must be finite")
    return (10.0**delta_beta - 1.0) * 100.0


def crossover(
    fit_a: RelativeFit,
    fit_b: RelativeFit,
    observed_span: tuple[float, float],
) -> CrossoverResult:
    """Scale F* where two ratio-mode relative curves intersect.

    F* = (gamma_a / gamma_b) ^ (1 / (delta_beta_b - delta_beta_a)).
    """
    if fit_a.mode != "ratio" or fit_b.mode != "ratio":
        raise FitError("crossover requires both fits in ratio mode")
    lo, hi = observed_span
    if lo <= 0 or hi < lo:
        raise FitError("observed span must satisfy 0 < F_min <= F_max")
    dd = fit_b.delta_beta - fit_a.delta_beta
    if abs(dd) < PARALLEL_TOL:
        raise FitError("parallel relative curves never cross")
    f_star = (fit_a.gamma / fit_b.gamma) ** (1.0 / dd)
    return CrossoverResult(f_star=float(f_star), in_range=bool(lo <= f_star <= hi))


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    return float(xc @ yc) / denom


def slope_covariate_correlation(
    slopes: Sequence[tuple[str, float]],
    covariate: Sequence[tuple[str, float]],
    permutations: int = 10_000,
    seed: int = 0,
    workers: int = 1,
) -> CorrelationResult:
    """Pearson R of relative slopes against log10 of a positive covariate.

    The p-value comes from a permutation test: exhaustive over all n!
    orderings when n <= 8, otherwise Monte Carlo with the add-one estimator
    (1 + hits) / (permutations + 1) over seeded draws.
    """
    cov = dict(covariate)
    groups = [g for g, _ in slopes]
    missing = [g for g in groups if g not in cov]
    if missing:
        raise FitError(f"no covariate value for group(s): {missing}")
    if len(groups) != len(set(groups)):
        raise FitError("duplicate group keys in slopes")
    n = len(groups)
    if n < 3:
        raise FitError("correlation needs at least 3 matched groups")
    values = np.asarray([cov[g] for g in groups], dtype=float)
    if np.any(values <= 0):
        raise FitError("covariate values must be positive (log10 is applied)")
    x = np.log10(values)
    y = np.asarray([s for _, s in slopes], dtype=float)
    if float(np.ptp(x)) == 0.0 or float(np.ptp(y)) == 0.0:
        raise FitError("zero variance in slopes or covariate")

    r_obs = _pearson(x, y)
    xc = x - x.mean()
    regression_slope = float(xc @ (y - y.mean())) / float(xc @ xc)

    if n <= 8:
        total = 0
        hits = 0
        for perm in itertools.permutations(range(n)):
            total += 1
            if abs(_pearson(x, y[list(perm)])) >= abs(r_obs):
                hits += 1
        p_value = hits / total
    else:
        children = np.random.SeedSequence(seed).spawn(permutations)
        flags = np.empty(permutations, dtype=bool)

        def run_chunk(bounds: tuple[int, int]) -> None:
            lo, hi = bounds
            for i in range(lo, hi):
                rng = np.random.default_rng(children[i])
                flags[i] = abs(_pearson(x, y[rng.permutation(n)])) >= abs(r_obs)

        bounds = _chunk_bounds(permutations, workers)
        if len(bounds) == 1:
            run_chunk(bounds[0])
        else:
            with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
                for _ in pool.map(run_chunk, bounds):
                    pass
        p_value = (1 + int(flags.sum())) / (permutations + 1)

    return CorrelationResult(
        pearson_r=r_obs,
        p_value=float(p_value),
        regression_slope=regression_slope,
        n=n,
    )


def pairs_from_runs(
    runs: RunSet,
    treatment_key: str,
    baseline_key: str,
    scale_axis: str = "flops",
) -> list[tuple[float, float, float]]:
    """Run-paired (scale, treatment, baseline) triples.

    Only runs carrying both metrics contribute; pairing by run guarantees
    both errors share every training condition.
    """
    if scale_axis not in ("flops", "tokens", "params"):
        raise FitError(f"unknown scale axis {scale_axis!r}")
    pairs = [
        (
            float(getattr(r, scale_axis)),
            r.metrics[treatment_key],
            r.metrics[baseline_key],
        )
        for r in runs
        if treatment_key in r.metrics and baseline_key in r.metrics
    ]
    if not pairs:
        raise FitError(
            f"unpaired inputs: no run carries both {treatment_key!r} and "
            f"{baseline_key!r}"
        )
    pairs.sort(key=lambda p: p[0])
    return pairs


def pairs_from_frontiers(
    treatment: FrontierSeries,
    baseline: FrontierSeries,
    budget_rtol: float = 1e-6,
) -> list[tuple[float, float, float]]:
    """Budget-matched pairs of compute-optimal metric values."""
    if len(treatment) != len(baseline):
        raise FitError(
            f"frontier lengths differ: {len(treatment)} vs {len(baseline)}"
        )
    pairs = []
    for pt, pb in zip(treatment.points, baseline.points):
        if abs(pt.budget - pb.budget) > budget_rtol * pb.budget:
            raise FitError(
                f"frontier budgets do not align: {pt.budget:g} vs {pb.budget:g}"
            )
        pairs.append((pb.budget, pt.optimal_metric, pb.optimal_metric))
    if not pairs:
        raise FitError("empty frontier series")
    return pairs


__all__ = [
    "PowerLawFit",
    "PowerLawFloorFit",
    "LogLinearFit",
    "RelativeFit",
    "CrossoverResult",
    "CorrelationResult",
    "fit_power_law",
    "fit_power_law_floored",
    "predict",
    "fit_loglinear",
    "fit_relative",
    "bootstrap_slopes",
    "bootstrap_sign_test",
    "percent_per_decade",
    "crossover",
    "slope_covariate_correlation",
    "pairs_from_runs",
    "pairs_from_frontiers",
]
