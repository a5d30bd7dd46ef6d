"""Data model, ingestion, and grouping of experiment logs.

Run logs arrive as JSONL (one object per line) or CSV (one column per metric
key). Records are validated on construction: positive compute/size fields,
finite metrics, and, for internal sweep runs, consistency of the reported
FLOPs with the 6·params·tokens accounting rule.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

from .errors import IngestError, ValidationError

Source = Literal["internal", "external"]

#: FLOPs spent per parameter per training token (forward + backward).
FLOPS_PER_PARAM_TOKEN = 6

#: Relative tolerance for the internal-run FLOP consistency check. Absorbs
#: rounding introduced by batch/step quantization in the planner.
FLOPS_CONSISTENCY_RTOL = 0.01

_CORE_FIELDS = ("run_id", "source", "dataset", "flops", "params", "tokens")


@dataclass(frozen=True)
class RunRecord:
    """One trained-model evaluation point.

    ``metrics`` maps metric keys (e.g. ``"bpb/wiki"``, ``"acc/task"``) to
    finite values. Treat instances as immutable; the metrics dict is never
    mutated by the toolkit.
    """

    run_id: str
    source: Source
    dataset: str
    flops: float
    params: int
    tokens: int
    metrics: dict[str, float]

    def __post_init__(self):
        if not self.run_id:
            raise ValidationError("run_id must be non-empty", field="run_id")
        if self.source not in ("internal", "external"):
            raise ValidationError(
                f"source must be 'internal' or 'external', got {self.source!r}",
                field="source",
            )
        for name in ("flops", "params", "tokens"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValidationError(f"{name} must be strictly positive", field=name)
        for key, value in self.metrics.items():
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValidationError(
                    f"metric {key!r} must be finite, got {value!r}", field=key
                )
        if self.source == "internal":
            expected = FLOPS_PER_PARAM_TOKEN * self.params * self.tokens
            if abs(self.flops - expected) > FLOPS_CONSISTENCY_RTOL * self.flops:
                raise ValidationError(
                    f"flops={self.flops:g} inconsistent with "
                    f"6*params*tokens={expected:g} "
                    f"(off by {abs(self.flops - expected) / self.flops:.1%}, "
                    f"tolerance {FLOPS_CONSISTENCY_RTOL:.0%})",
                    field="flops",
                )


@dataclass(frozen=True)
class RunSet:
    """An immutable, ordered collection of runs with a provenance tag."""

    records: tuple[RunRecord, ...]
    provenance: str = ""

    def __post_init__(self):
        seen: set[str] = set()
        for record in self.records:
            if record.run_id in seen:
                raise ValidationError(
                    f"duplicate run_id {record.run_id!r}", field="run_id"
                )
            seen.add(record.run_id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def filter(self, predicate: Callable[[RunRecord], bool]) -> "RunSet":
        """A new RunSet keeping only records for which ``predicate`` is true."""
        return RunSet(tuple(r for r in self.records if predicate(r)), self.provenance)

    def metric_keys(self) -> list[str]:
        """All metric keys present on any record, in first-seen order."""
        keys: dict[str, None] = {}
        for record in self.records:
            for key in record.metrics:
                keys.setdefault(key)
        return list(keys)


@dataclass(frozen=True)
class GroupingSpec:
    """A mapping from low-level item keys to group labels.

    Every item key maps to exactly one group; the mapping must be non-empty.
    """

    name: str
    mapping: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.mapping:
            raise ValidationError("grouping mapping must be non-empty", field="mapping")
        for item, label in self.mapping.items():
            if not item or not label:
                raise ValidationError(
                    f"empty item key or group label in mapping: {item!r} -> {label!r}",
                    field="mapping",
                )

    def group_labels(self) -> list[str]:
        """Group labels in first-appearance order."""
        labels: dict[str, None] = {}
        for label in self.mapping.values():
            labels.setdefault(label)
        return list(labels)

    @classmethod
    def from_file(cls, path: str | Path) -> "GroupingSpec":
        with open(path, encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: not valid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict) or "mapping" not in obj:
            raise ValidationError(f"{path}: expected an object with a 'mapping' key")
        return cls(name=str(obj.get("name", Path(path).stem)), mapping=dict(obj["mapping"]))


def _coerce_int(value, name: str) -> int:
    if isinstance(value, bool):
        raise ValidationError(f"{name} must be an integer", field=name)
    if isinstance(value, int):
        return value
    if isinstance(value, float) and math.isfinite(value) and value == int(value):
        return int(value)
    raise ValidationError(f"{name} must be an integer, got {value!r}", field=name)


def _coerce_float(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{name} must be a number, got {value!r}", field=name)
    return float(value)


def _record_from_obj(obj: dict, line: int) -> RunRecord:
    if not isinstance(obj, dict):
        raise IngestError("row is not an object", line=line)
    missing = [k for k in _CORE_FIELDS if k not in obj]
    if missing:
        raise IngestError(f"missing field {missing[0]!r}", line=line, field=missing[0])
    metrics_obj = obj.get("metrics", {})
    if not isinstance(metrics_obj, dict):
        raise IngestError("'metrics' must be an object", line=line, field="metrics")
    try:
        metrics = {
            str(k): _coerce_float(v, f"metrics[{k!r}]") for k, v in metrics_obj.items()
        }
        return RunRecord(
            run_id=str(obj["run_id"]),
            source=obj["source"],
            dataset=str(obj["dataset"]),
            flops=_coerce_float(obj["flops"], "flops"),
            params=_coerce_int(obj["params"], "params"),
            tokens=_coerce_int(obj["tokens"], "tokens"),
            metrics=metrics,
        )
    except ValidationError as exc:
        raise IngestError(str(exc), line=line, field=exc.field) from exc


def _iter_jsonl(path: Path) -> Iterable[RunRecord]:
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"malformed JSON ({exc.msg})", line=line_no) from exc
            yield _record_from_obj(obj, line_no)


def _parse_csv_cell(raw: str, name: str, line: int) -> float:
    try:
        value = float(raw)
    except ValueError as exc:
        raise IngestError(
            f"{name} must be a number, got {raw!r}", line=line, field=name
        ) from exc
    return value


def _iter_csv(path: Path) -> Iterable[RunRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("empty CSV file", line=1) from None
        missing = [k for k in _CORE_FIELDS if k not in header]
        if missing:
            raise IngestError(
                f"missing column {missing[0]!r}", line=1, field=missing[0]
            )
        metric_cols = [(i, name) for i, name in enumerate(header) if name not in _CORE_FIELDS]
        index = {name: header.index(name) for name in _CORE_FIELDS}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise IngestError(
                    f"expected {len(header)} columns, got {len(row)}", line=line_no
                )
            metrics = {}
            for i, name in metric_cols:
                if row[i] == "":
                    continue
                metrics[name] = _parse_csv_cell(row[i], f"metrics[{name!r}]", line_no)
            obj = {
                "run_id": row[index["run_id"]],
                "source": row[index["source"]],
                "dataset": row[index["dataset"]],
                "flops": _parse_csv_cell(row[index["flops"]], "flops", line_no),
                "params": _parse_csv_cell(row[index["params"]], "params", line_no),
                "tokens": _parse_csv_cell(row[index["tokens"]], "tokens", line_no),
                "metrics": metrics,
            }
            yield _record_from_obj(obj, line_no)


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("jsonl", "csv"):
            raise ValidationError(f"unknown format {fmt!r} (expected 'jsonl' or 'csv')")
        return fmt
    suffix = path.suffix.lower()
    if suffix in (".jsonl", ".ndjson", ".json"):
        return "jsonl"
    if suffix == ".csv":
        return "csv"
    raise ValidationError(f"cannot infer format from {path.name!r}; pass fmt explicitly")


def ingest_runs(path: str | Path, fmt: Literal["jsonl", "csv"] | None = None) -> RunSet:
    """Read and validate a run log.

    Rows violating record invariants raise :class:`IngestError` naming the
    line number and offending field. Duplicate run_ids are rejected by the
    RunSet constructor.

    Args:
        path: File to read.
        fmt: ``"jsonl"`` or ``"csv"``; inferred from the suffix when None.

    Returns:
        A validated RunSet whose provenance is the source path.
    """
    path = Path(path)
    if not path.exists():
        raise IngestError(f"input file not found: {path}")
    kind = _infer_format(path, fmt)
    rows = _iter_jsonl(path) if kind == "jsonl" else _iter_csv(path)
    return RunSet(tuple(rows), provenance=str(path))


def _record_to_obj(record: RunRecord) -> dict:
    return {
        "run_id": record.run_id,
        "source": record.source,
        "dataset": record.dataset,
        "flops": record.flops,
        "params": record.params,
        "tokens": record.tokens,
        "metrics": dict(record.metrics),
    }


def runs_to_jsonl(runs: RunSet) -> str:
    """The RunSet as JSONL text, floats at full shortest-round-trip precision."""
    return "".join(json.dumps(_record_to_obj(r)) + "\n" for r in runs)


def runs_to_csv(runs: RunSet) -> str:
    """The RunSet as CSV text with one column per metric key (sorted)."""
    metric_keys = sorted({k for r in runs for k in r.metrics})
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(list(_CORE_FIELDS) + metric_keys)
    for r in runs:
        row = [r.run_id, r.source, r.dataset, repr(r.flops), r.params, r.tokens]
        row += [repr(r.metrics[k]) if k in r.metrics else "" for k in metric_keys]
        writer.writerow(row)
    return buffer.getvalue()


def emit_runs(runs: RunSet, path: str | Path, fmt: Literal["jsonl", "csv"] | None = None) -> None:
    """Write a RunSet back to disk, losslessly and atomically.

    Floats are printed at full (shortest round-trip) precision, so
    ``ingest_runs`` on the emitted file reproduces every numeric field
    exactly.
    """
    from .ioutil import atomic_write_text

    path = Path(path)
    kind = _infer_format(path, fmt)
    text = runs_to_jsonl(runs) if kind == "jsonl" else runs_to_csv(runs)
    atomic_write_text(path, text)


def aggregate_by_group(
    runs: RunSet,
    spec: GroupingSpec,
    metric_prefix: str,
    reducer: Literal["mean"] = "mean",
) -> RunSet:
    """Collapse per-item metrics into per-group metrics.

    Every metric key starting with ``metric_prefix`` is stripped of the
    prefix and looked up in ``spec.mapping``; the group value is the
    unweighted mean over member items present on that run. Each output
    record carries exactly one metric per group label.

    Raises:
        ValidationError: an item key is missing from the mapping, or some
            group has zero present members on a run.
    """
    if reducer != "mean":
        raise ValidationError(f"unknown reducer {reducer!r} (only 'mean' is supported)")
    labels = spec.group_labels()
    out: list[RunRecord] = []
    for record in runs:
        sums = {label: 0.0 for label in labels}
        counts = {label: 0 for label in labels}
        for key, value in record.metrics.items():
            if not key.startswith(metric_prefix):
                continue
            item = key[len(metric_prefix):]
            if item not in spec.mapping:
                raise ValidationError(
                    f"unmapped item key {item!r} (metric {key!r}) "
                    f"in grouping {spec.name!r}",
                    field=key,
                )
            label = spec.mapping[item]
            sums[label] += value
            counts[label] += 1
        for label in labels:
            if counts[label] == 0:
                raise ValidationError(
                    f"group {label!r} has zero present members on run "
                    f"{record.run_id!r}",
                    field=label,
                )
        grouped = {label: sums[label] / counts[label] for label in labels}
        out.append(
            RunRecord(
                run_id=record.run_id,
                source=record.source,
                dataset=record.dataset,
                flops=record.flops,
                params=record.params,
                tokens=record.tokens,
                metrics=grouped,
            )
        )
    return RunSet(tuple(out), provenance=f"{runs.provenance}|grouped:{spec.name}")
