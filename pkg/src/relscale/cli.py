"""Command-line surface: machine-readable reports and static plot files.

Every command reads declared inputs, writes declared outputs atomically,
and exits 0 on success, 1 on validation/input errors (diagnostic on
stderr), 2 on usage errors. Reports embed content digests of every
consumed file plus the semantic command parameters, so any figure can be
reproduced from the logs. Execution knobs (``--workers``, output paths)
are deliberately excluded from reports: results are byte-identical across
parallelism settings.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from . import __version__, calibration, frontier, lawfit, planner, plotting, store, synthlab
from .errors import RelscaleError
from .ioutil import atomic_write_text, dump_json, sha256_file


@dataclass(frozen=True)
class AnalysisReport:
    """The envelope every analysis command writes."""

    tool_version: str
    command: str
    input_digests: list[dict] = field(default_factory=list)
    results: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "command": self.command,
            "input_digests": self.input_digests,
            "results": self.results,
            "warnings": self.warnings,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "AnalysisReport":
        return cls(
            tool_version=obj["tool_version"],
            command=obj["command"],
            input_digests=list(obj["input_digests"]),
            results=dict(obj["results"]),
            warnings=list(obj.get("warnings", [])),
        )


def _digests(paths: list[str | Path]) -> list[dict]:
    return [{"path": str(p), "sha256": sha256_file(p)} for p in paths]


def _write_report(report: AnalysisReport, output: str | Path) -> None:
    atomic_write_text(output, dump_json(report.to_dict()))


def _load_json(path: str | Path):
    path = Path(path)
    if not path.exists():
        raise RelscaleError(f"input file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise RelscaleError(f"{path}: not valid JSON ({exc.msg})") from exc


def _result(report_obj: dict, key: str, path) -> dict:
    try:
        return report_obj["results"][key]
    except (KeyError, TypeError):
        raise RelscaleError(f"{path}: not a report containing results[{key!r}]") from None


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise RelscaleError(f"{flag}: could not parse {text!r} as numbers") from exc
    if not values:
        raise RelscaleError(f"{flag}: no values given")
    return values


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (RelscaleError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
@click.version_option(__version__, prog_name="relscale")
def main():
    """Scaling-law analysis: sweep planning, frontier extraction, law fits,
    relative comparisons, calibration, and forecasting."""
    logging.basicConfig(level=logging.WARNING)


@main.command()
@click.option("--budgets", required=True, help="Comma-separated FLOP budgets.")
@click.option("--config", "config_path", default=None, help="Sweep policy JSON.")
@click.option("--output", "output_path", required=True, help="Plans JSONL out.")
@handle_errors
def plan(budgets, config_path, output_path):
    """Emit one training plan per (budget, width), as JSONL."""
    if config_path and not Path(config_path).exists():
        raise RelscaleError(f"input file not found: {config_path}")
    policy = (
        planner.SweepPolicy.from_file(config_path)
        if config_path
        else planner.SweepPolicy()
    )
    budget_values = _parse_floats(budgets, "--budgets")
    plans = planner.plan_sweep(budget_values, policy)
    text = "".join(json.dumps(p.to_dict(), sort_keys=True) + "\n" for p in plans)
    atomic_write_text(output_path, text)
    click.echo(f"wrote {len(plans)} plans to {output_path}")


@main.command()
@click.option("--spec", "spec_path", required=True, help="Synthetic spec JSON.")
@click.option("--output", "output_path", required=True, help="Runs JSONL out.")
@click.option("--truth", "truth_path", default=None, help="Ground-truth JSON out.")
@click.option("--seed", default=None, type=int, help="Override the generator seed.")
@click.option("--workers", default=1, type=int, help="Generation parallelism.")
@handle_errors
def simulate(spec_path, output_path, truth_path, seed, workers):
    """Generate a synthetic sweep with known ground truth."""
    obj = _load_json(spec_path)
    if not isinstance(obj, dict):
        raise RelscaleError(f"{spec_path}: synthetic spec must be a JSON object")
    if seed is not None:
        obj["seed"] = seed
    schedule = obj.pop("total_tokens_schedule", None)
    spec = synthlab.SyntheticSpec.from_dict(obj)
    if spec.is_mixture:
        if schedule is None:
            raise RelscaleError(
                "mixture specs need a 'total_tokens_schedule' array in the spec file"
            )
        runs, truth = synthlab.generate_mixture(spec, schedule)
    else:
        runs = synthlab.generate(spec, workers=workers)
        truth = synthlab.known_truth(spec)
    atomic_write_text(output_path, store.runs_to_jsonl(runs))
    if truth_path:
        atomic_write_text(truth_path, dump_json(truth.to_dict()))
    click.echo(f"wrote {len(runs)} runs to {output_path}")


@main.command()
@click.option("--input", "input_path", required=True, help="Run log to validate.")
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]), default=None)
@click.option("--grouping", "grouping_path", default=None,
              help="Grouping spec JSON; aggregates per-item metrics into groups.")
@click.option("--metric-prefix", default=None,
              help="Metric prefix selecting the items to aggregate.")
@click.option("--output", "output_path", required=True, help="Normalized JSONL out.")
@handle_errors
def ingest(input_path, fmt, grouping_path, metric_prefix, output_path):
    """Validate a run log and re-emit it normalized.

    With --grouping and --metric-prefix, per-item metrics are collapsed to
    per-group means before emission (e.g. behaviour probabilities into risk
    clusters).
    """
    runs = store.ingest_runs(input_path, fmt=fmt)
    if (grouping_path is None) != (metric_prefix is None):
        raise RelscaleError("--grouping and --metric-prefix must be given together")
    if grouping_path is not None:
        if not Path(grouping_path).exists():
            raise RelscaleError(f"input file not found: {grouping_path}")
        spec = store.GroupingSpec.from_file(grouping_path)
        runs = store.aggregate_by_group(runs, spec, metric_prefix)
    atomic_write_text(output_path, store.runs_to_jsonl(runs))
    click.echo(f"validated {len(runs)} runs -> {output_path}")


@main.command(name="frontier")
@click.option("--input", "input_path", required=True, help="Run log JSONL/CSV.")
@click.option("--metric", required=True, help="Metric key to extract.")
@click.option("--axis", type=click.Choice(["flops", "tokens", "params"]), default="flops")
@click.option("--tolerance", default=0.05, type=float, help="Budget bucketing rtol.")
@click.option("--fixed-value", default=None, type=float,
              help="Complementary axis value for tokens/params isolation series.")
@click.option("--optimum", type=click.Choice(["vertex", "observed"]), default="vertex")
@click.option("--output", "output_path", required=True, help="Report JSON out.")
@click.option("--csv", "csv_path", default=None, help="Optional frontier CSV out.")
@handle_errors
def frontier_cmd(input_path, metric, axis, tolerance, fixed_value, optimum,
                 output_path, csv_path):
    """Extract the compute-optimal frontier for one metric."""
    runs = store.ingest_runs(input_path)
    series = frontier.extract_frontier(
        runs,
        metric,
        scale_axis=axis,
        budget_tolerance=tolerance,
        fixed_axis_value=fixed_value,
        optimum=optimum,
    )
    report = AnalysisReport(
        tool_version=__version__,
        command=(
            f"frontier metric={metric} axis={axis} tolerance={tolerance} "
            f"fixed_value={fixed_value} optimum={optimum}"
        ),
        input_digests=_digests([input_path]),
        results={"frontier": series.to_dict()},
        warnings=list(series.warnings),
    )
    _write_report(report, output_path)
    if csv_path:
        lines = ["budget,optimal_tokens,optimal_metric\n"]
        for p in series.points:
            lines.append(f"{p.budget!r},{p.optimal_tokens!r},{p.optimal_metric!r}\n")
        atomic_write_text(csv_path, "".join(lines))
    click.echo(f"frontier with {len(series)} points -> {output_path}")


@main.command()
@click.option("--input", "input_path", required=True, help="Frontier report JSON.")
@click.option("--family", type=click.Choice(["power", "loglinear", "power-floor"]),
              default="power")
@click.option("--estimator", type=click.Choice(["ols", "huber"]), default="ols")
@click.option("--output", "output_path", required=True, help="Report JSON out.")
@handle_errors
def fit(input_path, family, estimator, output_path):
    """Fit an absolute scaling trend to a frontier series."""
    report_obj = _load_json(input_path)
    series = frontier.FrontierSeries.from_dict(
        _result(report_obj, "frontier", input_path)
    )
    points = series.law_points()
    if family == "power":
        fit_obj = lawfit.fit_power_law(points, scale_axis=series.scale_axis,
                                       estimator=estimator)
        payload = {"kind": "power_law", **fit_obj.to_dict()}
    elif family == "loglinear":
        fit_obj = lawfit.fit_loglinear(points)
        payload = {"kind": "loglinear", **fit_obj.to_dict()}
    else:
        fit_obj = lawfit.fit_power_law_floored(points, scale_axis=series.scale_axis)
        payload = {
            "kind": "power_law_floored",
            "alpha": fit_obj.alpha,
            "beta": fit_obj.beta,
            "floor": fit_obj.floor,
            "r2": fit_obj.r2,
            "n": fit_obj.n,
            "scale_axis": fit_obj.scale_axis,
        }
    payload["series"] = [[f, e] for f, e in points]
    payload["metric_key"] = series.metric_key
    report = AnalysisReport(
        tool_version=__version__,
        command=f"fit family={family} estimator={estimator} metric={series.metric_key}",
        input_digests=_digests([input_path]),
        results={"fit": payload},
    )
    _write_report(report, output_path)
    click.echo(f"fit ({family}) on {len(points)} points -> {output_path}")


@main.command()
@click.option("--input", "input_path", required=True, help="Run log JSONL/CSV.")
@click.option("--metric", required=True, help="Treatment metric key.")
@click.option("--baseline", required=True, help="Baseline metric key.")
@click.option("--mode", type=click.Choice(["ratio", "difference"]), default="ratio")
@click.option("--axis", type=click.Choice(["flops", "tokens", "params"]), default="flops")
@click.option("--resamples", default=2000, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--frontier", "use_frontier", is_flag=True,
              help="Pair compute-optimal frontier points instead of raw runs.")
@click.option("--tolerance", default=0.05, type=float, help="Budget bucketing rtol.")
@click.option("--workers", default=1, type=int)
@click.option("--slopes-csv", "slopes_csv", default=None,
              help="Also write the per-resample bootstrap slopes as CSV.")
@click.option("--output", "output_path", required=True, help="Report JSON out.")
@handle_errors
def relfit(input_path, metric, baseline, mode, axis, resamples, seed,
           use_frontier, tolerance, workers, slopes_csv, output_path):
    """Fit the relative law between a treatment and a baseline metric."""
    runs = store.ingest_runs(input_path)
    warnings: list[str] = []
    if use_frontier:
        series_t = frontier.extract_frontier(runs, metric, budget_tolerance=tolerance)
        series_b = frontier.extract_frontier(runs, baseline, budget_tolerance=tolerance)
        warnings = list(series_t.warnings) + list(series_b.warnings)
        pairs = lawfit.pairs_from_frontiers(series_t, series_b)
    else:
        pairs = lawfit.pairs_from_runs(runs, metric, baseline, scale_axis=axis)
    fit_obj = lawfit.fit_relative(
        pairs, mode=mode, resamples=resamples, seed=seed, workers=workers
    )
    if slopes_csv:
        if len(pairs) < 3:
            raise RelscaleError("--slopes-csv needs at least 3 pairs to bootstrap")
        slopes = lawfit.bootstrap_slopes(
            pairs, mode=mode, resamples=resamples, seed=seed, workers=workers
        )
        rows = ["resample,slope\n"]
        rows += [f"{i},{s!r}\n" for i, s in enumerate(slopes.tolist())]
        atomic_write_text(slopes_csv, "".join(rows))
    payload = {"kind": "relative_fit", **fit_obj.to_dict()}
    payload["sign_significant"] = fit_obj.sign_significant
    if mode == "ratio":
        payload["percent_per_decade"] = lawfit.percent_per_decade(fit_obj.delta_beta)
    payload["treatment"] = metric
    payload["baseline"] = baseline
    payload["pairs"] = [[f, t, b] for f, t, b in pairs]
    report = AnalysisReport(
        tool_version=__version__,
        command=(
            f"relfit metric={metric} baseline={baseline} mode={mode} axis={axis} "
            f"resamples={resamples} seed={seed} frontier={use_frontier}"
        ),
        input_digests=_digests([input_path]),
        results={"relative_fit": payload},
        warnings=warnings,
    )
    _write_report(report, output_path)
    click.echo(
        f"relative fit: gamma={fit_obj.gamma:.6g} delta_beta={fit_obj.delta_beta:.6g} "
        f"p_sign={fit_obj.p_sign} -> {output_path}"
    )


def _relative_fit_from_report(path: str) -> lawfit.RelativeFit:
    obj = _result(_load_json(path), "relative_fit", path)
    try:
        return lawfit.RelativeFit(
            gamma=obj["gamma"],
            delta_beta=obj["delta_beta"],
            mode=obj["mode"],
            p_sign=obj.get("p_sign"),
            ci_low=obj.get("ci_low"),
            ci_high=obj.get("ci_high"),
            n_pairs=obj["n_pairs"],
        )
    except (KeyError, TypeError) as exc:
        raise RelscaleError(f"{path}: malformed relative-fit report ({exc})") from exc


@main.command()
@click.option("--input", "input_path", required=True, help="Relative-fit report A.")
@click.option("--other", "other_path", required=True, help="Relative-fit report B.")
@click.option("--span", required=True, help="Observed scale span, e.g. '1e18,1e20'.")
@click.option("--output", "output_path", required=True, help="Report JSON out.")
@handle_errors
def crossover(input_path, other_path, span, output_path):
    """Scale at which two relative curves cross, and whether it was observed."""
    fit_a = _relative_fit_from_report(input_path)
    fit_b = _relative_fit_from_report(other_path)
    lo, hi = _parse_floats(span, "--span")[:2]
    result = lawfit.crossover(fit_a, fit_b, (lo, hi))
    report = AnalysisReport(
        tool_version=__version__,
        command=f"crossover span={lo:g},{hi:g}",
        input_digests=_digests([input_path, other_path]),
        results={
            "crossover": result.to_dict(),
            "curve_a": fit_a.to_dict(),
            "curve_b": fit_b.to_dict(),
        },
    )
    _write_report(report, output_path)
    click.echo(f"crossover at {result.f_star:.6g} (in range: {result.in_range})")


@main.command()
@click.option("--input", "slopes_path", required=True,
              help="JSON object mapping group -> relative slope.")
@click.option("--covariate", "covariate_path", required=True,
              help="JSON object mapping group -> positive covariate.")
@click.option("--permutations", default=10_000, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--workers", default=1, type=int)
@click.option("--output", "output_path", required=True, help="Report JSON out.")
@handle_errors
def correlate(slopes_path, covariate_path, permutations, seed, workers, output_path):
    """Correlate relative slopes with log10 of a per-group covariate."""
    slopes_obj = _load_json(slopes_path)
    covariate_obj = _load_json(covariate_path)
    if not isinstance(slopes_obj, dict) or not isinstance(covariate_obj, dict):
        raise RelscaleError("slopes and covariate files must be JSON objects")
    slopes = sorted(slopes_obj.items())
    covariate = sorted(covariate_obj.items())
    result = lawfit.slope_covariate_correlation(
        slopes, covariate, permutations=permutations, seed=seed, workers=workers
    )
    cov_map = dict(covariate)
    report = AnalysisReport(
        tool_version=__version__,
        command=f"correlate permutations={permutations} seed={seed}",
        input_digests=_digests([slopes_path, covariate_path]),
        results={
            "correlation": {
                **result.to_dict(),
                "groups": [[g, s, cov_map[g]] for g, s in slopes],
            }
        },
    )
    _write_report(report, output_path)
    click.echo(
        f"pearson_r={result.pearson_r:.4f} p={result.p_value:.4g} -> {output_path}"
    )


@main.command()
@click.option("--input", "input_path", required=True, help="Run log JSONL/CSV.")
@click.option("--metric", required=True, help="Loss metric key.")
@click.option("--accuracy-key", required=True, help="Accuracy metric key.")
@click.option("--floor", default="free",
              help="'free' or a fixed chance-level accuracy (e.g. 0.25).")
@click.option("--family", type=click.Choice(["sigmoid", "linear"]), default="sigmoid")
@click.option("--output", "output_path", required=True, help="Report JSON out.")
@handle_errors
def calibrate(input_path, metric, accuracy_key, floor, family, output_path):
    """Fit the loss-to-accuracy calibration from paired metrics."""
    runs = store.ingest_runs(input_path)
    points = [
        (r.metrics[metric], r.metrics[accuracy_key])
        for r in runs
        if metric in r.metrics and accuracy_key in r.metrics
    ]
    if not points:
        raise RelscaleError(
            f"no run carries both {metric!r} and {accuracy_key!r}"
        )
    if family == "sigmoid":
        floor_value = None if floor == "free" else float(floor)
        cal = calibration.fit_sigmoid(points, floor=floor_value)
        payload = {"kind": "sigmoid_calibration", **cal.to_dict()}
    else:
        cal = calibration.fit_linear_calibration(points)
        payload = {"kind": "linear_calibration", **cal.to_dict()}
    payload["points"] = [[l, a] for l, a in points]
    report = AnalysisReport(
        tool_version=__version__,
        command=(
            f"calibrate metric={metric} accuracy_key={accuracy_key} "
            f"floor={floor} family={family}"
        ),
        input_digests=_digests([input_path]),
        results={"calibration": payload},
    )
    _write_report(report, output_path)
    click.echo(f"calibration rmse={cal.rmse:.6g} -> {output_path}")


@main.command()
@click.option("--input", "law_path", required=True, help="Power-law fit report.")
@click.option("--calibration", "cal_path", required=True, help="Calibration report.")
@click.option("--scales", required=True, help="Comma-separated scales to forecast at.")
@click.option("--output", "output_path", required=True, help="Report JSON out.")
@handle_errors
def forecast(law_path, cal_path, scales, output_path):
    """Two-stage forecast: compute -> loss -> accuracy."""
    law_obj = _result(_load_json(law_path), "fit", law_path)
    if law_obj.get("kind") != "power_law":
        raise RelscaleError(f"{law_path}: forecasting needs a 'power_law' fit report")
    try:
        law = lawfit.PowerLawFit(
            alpha=law_obj["alpha"],
            beta=law_obj["beta"],
            r2=law_obj["r2"],
            n=law_obj["n"],
            scale_axis=law_obj.get("scale_axis", "flops"),
        )
        cal_obj = _result(_load_json(cal_path), "calibration", cal_path)
        if cal_obj.get("kind") != "sigmoid_calibration":
            raise RelscaleError(f"{cal_path}: forecasting needs a sigmoid calibration")
        cal = calibration.SigmoidCalibration.from_dict(cal_obj)
    except (KeyError, TypeError) as exc:
        raise RelscaleError(f"malformed fit or calibration report ({exc})") from exc
    scale_values = _parse_floats(scales, "--scales")
    predictions = []
    for scale in scale_values:
        loss, acc = calibration.forecast_accuracy(law, cal, scale)
        predictions.append([scale, loss, acc])
    report = AnalysisReport(
        tool_version=__version__,
        command=f"forecast scales={','.join(f'{s:g}' for s in scale_values)}",
        input_digests=_digests([law_path, cal_path]),
        results={
            "forecast": {
                "predictions": predictions,
                "law": law.to_dict(),
                "calibration": cal.to_dict(),
            }
        },
    )
    _write_report(report, output_path)
    click.echo(f"forecast at {len(scale_values)} scales -> {output_path}")


@main.command(name="report")
@click.option("--input", "input_paths", required=True, multiple=True,
              help="Report JSON (repeatable).")
@click.option("--output", "output_path", required=True, help="Bundled report out.")
@handle_errors
def report_cmd(input_paths, output_path):
    """Bundle several reports into one."""
    entries = []
    for path in input_paths:
        obj = _load_json(path)
        if "results" not in obj or "command" not in obj:
            raise RelscaleError(f"{path}: not an analysis report")
        entries.append({"command": obj["command"], "results": obj["results"]})
    report = AnalysisReport(
        tool_version=__version__,
        command=f"report n={len(entries)}",
        input_digests=_digests(list(input_paths)),
        results={"bundle": entries},
    )
    _write_report(report, output_path)
    click.echo(f"bundled {len(entries)} reports -> {output_path}")


def _plot_from_report(results: dict) -> plotting.PlotSeries:
    if "frontier" in results:
        series = frontier.FrontierSeries.from_dict(results["frontier"])
        axis_label = {
            "flops": "training FLOPs",
            "tokens": "training tokens",
            "params": "parameters",
        }[series.scale_axis]
        return plotting.PlotSeries(
            title=f"compute-optimal frontier: {series.metric_key}",
            x_label=axis_label,
            y_label=series.metric_key,
            x_scale="log10",
            series=(
                plotting.SeriesData(
                    label=series.metric_key,
                    points=tuple((p.budget, p.optimal_metric) for p in series.points),
                ),
            ),
        )
    if "fit" in results:
        obj = results["fit"]
        points = tuple((x, y) for x, y in obj["series"])
        xs = np.geomspace(points[0][0], points[-1][0], 64)
        if obj["kind"] == "power_law":
            ys = obj["alpha"] * xs ** (-obj["beta"])
        elif obj["kind"] == "power_law_floored":
            ys = obj["alpha"] * xs ** (-obj["beta"]) + obj["floor"]
        else:
            ys = obj["intercept_at_ref"] + obj["slope_per_decade"] * np.log10(
                xs / obj["ref_scale"]
            )
        return plotting.PlotSeries(
            title=f"absolute scaling: {obj.get('metric_key', '')}",
            x_label="scale",
            y_label=obj.get("metric_key", "metric"),
            x_scale="log10",
            series=(
                plotting.SeriesData(
                    label=obj.get("metric_key", "series"),
                    points=points,
                    curve=tuple(zip(xs.tolist(), ys.tolist())),
                ),
            ),
        )
    if "relative_fit" in results:
        obj = results["relative_fit"]
        mode = obj["mode"]
        pairs = obj["pairs"]
        if mode == "ratio":
            points = tuple((f, t / b) for f, t, b in pairs)
            ref = 1.0
        else:
            points = tuple((f, t - b) for f, t, b in pairs)
            ref = 0.0
        xs = np.geomspace(points[0][0], points[-1][0], 64)
        if mode == "ratio":
            ys = obj["gamma"] * xs ** obj["delta_beta"]
        else:
            ys = obj["gamma"] + obj["delta_beta"] * np.log10(xs)
        label = f"{obj.get('treatment', 'treatment')} vs {obj.get('baseline', 'baseline')}"
        return plotting.PlotSeries(
            title=f"relative scaling ({mode})",
            x_label="training FLOPs",
            y_label="error ratio" if mode == "ratio" else "error difference",
            x_scale="log10",
            series=(
                plotting.SeriesData(
                    label=label,
                    points=points,
                    curve=tuple(zip(xs.tolist(), ys.tolist())),
                ),
            ),
            ref_line_y=ref,
        )
    if "calibration" in results:
        obj = results["calibration"]
        points = tuple(sorted((l, a) for l, a in obj["points"]))
        xs = np.linspace(points[0][0], points[-1][0], 64)
        if obj["kind"] == "sigmoid_calibration":
            cal = calibration.SigmoidCalibration.from_dict(obj)
            ys = cal.predict(xs)
        else:
            ys = np.clip(obj["intercept"] + obj["slope"] * xs, 0.0, 1.0)
        return plotting.PlotSeries(
            title="loss-to-accuracy calibration",
            x_label="loss",
            y_label="accuracy",
            x_scale="linear",
            series=(
                plotting.SeriesData(
                    label="calibration",
                    points=points,
                    curve=tuple(zip(xs.tolist(), ys.tolist())),
                ),
            ),
        )
    if "forecast" in results:
        preds = results["forecast"]["predictions"]
        return plotting.PlotSeries(
            title="forecast accuracy",
            x_label="scale",
            y_label="accuracy",
            x_scale="log10",
            series=(
                plotting.SeriesData(
                    label="forecast",
                    points=tuple((f, acc) for f, _, acc in preds),
                ),
            ),
        )
    if "correlation" in results:
        groups = sorted(results["correlation"]["groups"], key=lambda g: g[2])
        points = tuple((cov, slope) for _, slope, cov in groups)
        x = np.log10([p[0] for p in points])
        y = np.asarray([p[1] for p in points])
        slope = results["correlation"]["regression_slope"]
        intercept = float(y.mean() - slope * x.mean())
        xs = np.geomspace(points[0][0], points[-1][0], 32)
        ys = intercept + slope * np.log10(xs)
        return plotting.PlotSeries(
            title="relative slope vs covariate",
            x_label="covariate",
            y_label="slope",
            x_scale="log10",
            series=(
                plotting.SeriesData(
                    label="groups",
                    points=points,
                    curve=tuple(zip(xs.tolist(), ys.tolist())),
                ),
            ),
        )
    raise RelscaleError(
        "report contains no plottable results "
        "(expected frontier/fit/relative_fit/calibration/forecast/correlation)"
    )


@main.command()
@click.option("--input", "input_path", required=True, help="Report JSON to plot.")
@click.option("--output", "output_path", required=True,
              help="Output base path (suffixes .svg/.csv are added).")
@click.option("--format", "formats", default="svg,csv",
              help="Comma-separated subset of svg,csv.")
@handle_errors
def plot(input_path, output_path, formats):
    """Render a report as a static SVG figure and/or CSV table."""
    report_obj = _load_json(input_path)
    if not isinstance(report_obj, dict) or "results" not in report_obj:
        raise RelscaleError(f"{input_path}: not an analysis report")
    try:
        series = _plot_from_report(report_obj["results"])
    except (KeyError, TypeError) as exc:
        raise RelscaleError(
            f"{input_path}: malformed report results ({exc})"
        ) from exc
    fmt_tuple = tuple(f.strip() for f in formats.split(",") if f.strip())
    written = plotting.emit_plot(series, output_path, formats=fmt_tuple)
    for kind, path in written.items():
        click.echo(f"wrote {kind}: {path}")


if __name__ == "__main__":
    main()
