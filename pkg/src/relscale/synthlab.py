"""Synthetic sweep generation with known ground-truth scaling parameters.

Every fitter in the toolkit is validated against data drawn from known
laws. The plain generator plants one power law per subgroup and bows each
IsoFLOP slice multiplicatively around its compute-optimal token count; the
mixture generator plants subgroup losses driven by each group's share of
the training data plus cross-group transfer. Generation is deterministic
per seed and independent of parallelism (per-budget derived seed streams,
canonical output ordering).
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .store import RunRecord, RunSet


@dataclass(frozen=True)
class Subgroup:
    """A subgroup whose error follows alpha * F^-beta exactly."""

    name: str
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.name:
            raise ValidationError("subgroup name must be non-empty")
        if self.alpha <= 0:
            raise ValidationError(f"subgroup {self.name!r}: alpha must be positive")


@dataclass(frozen=True)
class MixtureSubgroup:
    """A subgroup whose loss is a power law in effective data volume.

    E_g(n) = scale * (n_g + transfer * n_rest)^-exponent with
    n_g = data_share * n. Full transfer (1.0) makes all groups identical;
    zero transfer reduces each group to a pure power law in its own share.
    """

    name: str
    data_share: float
    transfer: float
    exponent: float
    scale: float

    def __post_init__(self):
        if not self.name:
            raise ValidationError("subgroup name must be non-empty")
        if not 0.0 < self.data_share < 1.0:
            raise ValidationError(
                f"subgroup {self.name!r}: data_share must lie in (0, 1)"
            )
        if not 0.0 <= self.transfer <= 1.0:
            raise ValidationError(
                f"subgroup {self.name!r}: transfer must lie in [0, 1]"
            )
        if self.scale <= 0:
            raise ValidationError(f"subgroup {self.name!r}: scale must be positive")

    @property
    def effective_share(self) -> float:
        return self.data_share + self.transfer * (1.0 - self.data_share)

    @property
    def effective_alpha(self) -> float:
        """Coefficient of the induced pure power law in total tokens."""
        return self.scale * self.effective_share ** (-self.exponent)

    @property
    def effective_beta(self) -> float:
        return self.exponent


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic IsoFLOP sweep.

    ``curvature`` bows each slice as metric = E * exp(curvature * dx^2)
    with dx the log10-token offset from the optimum. A least-squares
    parabola recovers the vertex location exactly on the symmetric grid but
    the vertex value only to O(curvature^2) relative error (about
    0.06 * curvature^2 on the default 7-point grid), so the default is kept
    small enough that noiseless roundtrips sit far inside 1e-6.
    """

    budgets: tuple[float, ...]
    subgroups: tuple[Subgroup, ...] | tuple[MixtureSubgroup, ...]
    widths_per_budget: int = 7
    noise_sigma: float = 0.0
    curvature: float = 0.002
    token_span_decades: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.budgets:
            raise ValidationError("budgets must be non-empty")
        if any(b <= 0 for b in self.budgets):
            raise ValidationError("budgets must be positive")
        if any(b2 <= b1 for b1, b2 in zip(self.budgets, self.budgets[1:])):
            raise ValidationError("budgets must be strictly increasing")
        if not self.subgroups:
            raise ValidationError("at least one subgroup is required")
        if self.widths_per_budget < 1:
            raise ValidationError("widths_per_budget must be at least 1")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be non-negative")
        if self.curvature <= 0:
            raise ValidationError("curvature must be positive")
        if self.token_span_decades <= 0:
            raise ValidationError("token_span_decades must be positive")
        names = [g.name for g in self.subgroups]
        if len(names) != len(set(names)):
            raise ValidationError("subgroup names must be unique")

    @property
    def is_mixture(self) -> bool:
        return isinstance(self.subgroups[0], MixtureSubgroup)

    @classmethod
    def from_dict(cls, obj: dict) -> "SyntheticSpec":
        if not isinstance(obj, dict):
            raise ValidationError("synthetic spec must be a JSON object")
        try:
            raw_groups = obj.get("subgroups", [])
            groups: list = []
            for g in raw_groups:
                if "data_share" in g:
                    groups.append(
                        MixtureSubgroup(
                            name=g["name"],
                            data_share=g["data_share"],
                            transfer=g["transfer"],
                            exponent=g["exponent"],
                            scale=g["scale"],
                        )
                    )
                else:
                    groups.append(
                        Subgroup(name=g["name"], alpha=g["alpha"], beta=g["beta"])
                    )
            kinds = {type(g) for g in groups}
            if len(kinds) > 1:
                raise ValidationError("subgroups must be all plain or all mixture form")
            return cls(
                budgets=tuple(float(b) for b in obj["budgets"]),
                subgroups=tuple(groups),
                widths_per_budget=int(obj.get("widths_per_budget", 7)),
                noise_sigma=float(obj.get("noise_sigma", 0.0)),
                curvature=float(obj.get("curvature", 0.002)),
                token_span_decades=float(obj.get("token_span_decades", 1.0)),
                seed=int(obj.get("seed", 0)),
            )
        except KeyError as exc:
            raise ValidationError(f"synthetic spec missing field {exc.args[0]!r}") from exc


@dataclass(frozen=True)
class PairTruth:
    """Exact relative-law parameters for one (treatment, baseline) pair."""

    treatment: str
    baseline: str
    gamma: float
    delta_beta: float


@dataclass(frozen=True)
class TruthReport:
    """Ground-truth absolute and relative parameters for a spec."""

    absolute: dict[str, tuple[float, float]]
    pairs: tuple[PairTruth, ...]

    def to_dict(self) -> dict:
        return {
            "absolute": {k: list(v) for k, v in self.absolute.items()},
            "pairs": [
                {
                    "treatment": p.treatment,
                    "baseline": p.baseline,
                    "gamma": p.gamma,
                    "delta_beta": p.delta_beta,
                }
                for p in self.pairs
            ],
        }


def optimal_tokens_for_budget(budget: float) -> float:
    """Compute-optimal token count used to center the synthetic grid.

    Balanced allocation under the 6NT identity: T = sqrt(F / 6).
    """
    return math.sqrt(budget / 6.0)


def _token_offsets(n: int, span: float) -> np.ndarray:
    if n == 1:
        return np.zeros(1)
    return np.linspace(-span, span, n)


def _abs_params(group) -> tuple[float, float]:
    if isinstance(group, MixtureSubgroup):
        return group.effective_alpha, group.effective_beta
    return group.alpha, group.beta


def generate(spec: SyntheticSpec, workers: int = 1) -> RunSet:
    """Emit an IsoFLOP sweep drawn from the spec's planted laws.

    For each budget F, ``widths_per_budget`` runs are placed at token
    counts spanning +-token_span_decades around the compute-optimal point.
    Each subgroup metric is
    alpha_g * F^-beta_g * exp(curvature * dx^2) * exp(eps),
    eps ~ Normal(0, noise_sigma^2), drawn independently per (run, subgroup).
    """
    if spec.is_mixture:
        raise ValidationError(
            "spec holds mixture subgroups; use generate_mixture with a "
            "token schedule"
        )
    children = np.random.SeedSequence(spec.seed).spawn(len(spec.budgets))
    offsets = _token_offsets(spec.widths_per_budget, spec.token_span_decades)

    def build_budget(b_idx: int) -> list[RunRecord]:
        budget = spec.budgets[b_idx]
        rng = np.random.default_rng(children[b_idx])
        t_opt = optimal_tokens_for_budget(budget)
        x_opt = math.log10(t_opt)
        records = []
        for t_idx, offset in enumerate(offsets):
            tokens = max(1, round(t_opt * 10.0**offset))
            params = max(1, round(budget / (6.0 * tokens)))
            dx = math.log10(tokens) - x_opt
            bow = math.exp(spec.curvature * dx * dx)
            metrics = {}
            for group in spec.subgroups:
                value = group.alpha * budget ** (-group.beta) * bow
                if spec.noise_sigma > 0:
                    value *= math.exp(rng.normal(0.0, spec.noise_sigma))
                metrics[group.name] = value
            records.append(
                RunRecord(
                    run_id=f"sim-{b_idx:03d}-{t_idx:03d}",
                    source="internal",
                    dataset="synthetic",
                    flops=float(budget),
                    params=params,
                    tokens=tokens,
                    metrics=metrics,
                )
            )
        return records

    indices = range(len(spec.budgets))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(build_budget, indices))
    else:
        blocks = [build_budget(i) for i in indices]
    records = [r for block in blocks for r in block]
    return RunSet(tuple(records), provenance=f"synthlab:seed={spec.seed}")


def generate_mixture(
    spec: SyntheticSpec,
    total_tokens_schedule: Sequence[float],
    fixed_params: int = 40_000_000,
) -> tuple[RunSet, TruthReport]:
    """Emit token-scaling runs under the mixture subgroup law.

    Runs hold the architecture fixed (``fixed_params``) and scale total
    tokens over the schedule; each subgroup loss is
    scale * ((q + tau*(1-q)) * n)^-exponent * exp(eps). The returned truth
    report carries the induced effective (alpha, beta) per subgroup for
    oracle comparisons.
    """
    if not spec.is_mixture:
        raise ValidationError("spec subgroups are not in mixture form")
    groups: tuple[MixtureSubgroup, ...] = spec.subgroups  # type: ignore[assignment]
    total_share = sum(g.data_share for g in groups)
    if total_share > 1.0 + 1e-9:
        raise ValidationError(
            f"data shares sum to {total_share:g}; must not exceed 1"
        )
    schedule = sorted(float(n) for n in total_tokens_schedule)
    if not schedule or schedule[0] <= 0:
        raise ValidationError("token schedule must be non-empty and positive")
    children = np.random.SeedSequence(spec.seed).spawn(len(schedule))
    records = []
    for idx, n in enumerate(schedule):
        rng = np.random.default_rng(children[idx])
        tokens = max(1, round(n))
        metrics = {}
        for group in groups:
            effective = group.effective_share * tokens
            value = group.scale * effective ** (-group.exponent)
            if spec.noise_sigma > 0:
                value *= math.exp(rng.normal(0.0, spec.noise_sigma))
            metrics[group.name] = value
        records.append(
            RunRecord(
                run_id=f"mix-{idx:03d}",
                source="internal",
                dataset="synthetic-mixture",
                flops=float(6 * fixed_params * tokens),
                params=fixed_params,
                tokens=tokens,
                metrics=metrics,
            )
        )
    runs = RunSet(tuple(records), provenance=f"synthlab-mixture:seed={spec.seed}")
    return runs, known_truth(spec)


def known_truth(spec: SyntheticSpec) -> TruthReport:
    """Exact (alpha, beta) per subgroup and (gamma, delta_beta) per pair.

    gamma = alpha_t / alpha_b and delta_beta = beta_b - beta_t for every
    ordered (treatment, baseline) pair. Mixture subgroups contribute their
    induced effective parameters.
    """
    absolute = {g.name: _abs_params(g) for g in spec.subgroups}
    pairs = []
    for treatment in spec.subgroups:
        for baseline in spec.subgroups:
            if treatment.name == baseline.name:
                continue
            a_t, b_t = absolute[treatment.name]
            a_b, b_b = absolute[baseline.name]
            pairs.append(
                PairTruth(
                    treatment=treatment.name,
                    baseline=baseline.name,
                    gamma=a_t / a_b,
                    delta_beta=b_b - b_t,
                )
            )
    return TruthReport(absolute=absolute, pairs=tuple(pairs))


def parabola_slice(
    curvature: float,
    vertex_x: float,
    vertex_metric: float,
    xs: Sequence[float],
) -> list[tuple[float, float]]:
    """An exact quadratic slice in log10-token space.

    Returns (tokens, metric) points with
    metric = vertex_metric + curvature * (x - vertex_x)^2 at tokens = 10^x.
    Useful as a noiseless oracle for the slice fitter at any curvature.
    """
    if curvature <= 0:
        raise ValidationError("curvature must be positive")
    return [
        (10.0**x, vertex_metric + curvature * (x - vertex_x) ** 2) for x in xs
    ]


__all__ = [
    "Subgroup",
    "MixtureSubgroup",
    "SyntheticSpec",
    "PairTruth",
    "TruthReport",
    "optimal_tokens_for_budget",
    "generate",
    "generate_mixture",
    "known_truth",
    "parabola_slice",
]
