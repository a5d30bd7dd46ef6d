import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from relscale import (
    GroupingSpec,
    IngestError,
    RunRecord,
    RunSet,
    ValidationError,
    aggregate_by_group,
    emit_runs,
    ingest_runs,
)
from tests.conftest import make_run


def row(run_id="a", source="internal", flops=6e17, params=100_000_000,
        tokens=1_000_000_000, metrics=None):
    return {
        "run_id": run_id,
        "source": source,
        "dataset": "web",
        "flops": flops,
        "params": params,
        "tokens": tokens,
        "metrics": metrics if metrics is not None else {"bpb/c4": 1.25},
    }


class TestRunRecord:
    def test_valid_internal(self):
        record = make_run("x", 6e17, 1_000_000_000, {"m": 0.5})
        assert record.params == 100_000_000

    def test_positive_fields_enforced(self):
        for field_name, bad in [("flops", 0.0), ("params", 0), ("tokens", -1)]:
            kwargs = dict(run_id="x", source="external", dataset="d",
                          flops=1e18, params=10, tokens=10, metrics={})
            kwargs[field_name] = bad
            with pytest.raises(ValidationError) as err:
                RunRecord(**kwargs)
            assert field_name in str(err.value)

    def test_internal_flops_consistency(self):
        # 6NT = 6e17 but declared flops 1e18: off by 40%, well past 1%.
        with pytest.raises(ValidationError) as err:
            RunRecord(run_id="x", source="internal", dataset="d", flops=1e18,
                      params=100_000_000, tokens=10**9, metrics={})
        assert "flops" in str(err.value)
        assert "40" in str(err.value)

    def test_external_exempt_from_consistency(self):
        RunRecord(run_id="x", source="external", dataset="d", flops=1e18,
                  params=100_000_000, tokens=10**9, metrics={})

    def test_consistency_tolerance_boundary(self):
        # 0.9% off passes, 1.1% off fails.
        base = 6 * 100 * 1000
        RunRecord(run_id="x", source="internal", dataset="d",
                  flops=base * 1.009, params=100, tokens=1000, metrics={})
        with pytest.raises(ValidationError):
            RunRecord(run_id="x", source="internal", dataset="d",
                      flops=base * 1.012, params=100, tokens=1000, metrics={})

    def test_non_finite_metric(self):
        with pytest.raises(ValidationError):
            make_run("x", 6e17, 10**9, {"m": float("nan")})

    def test_duplicate_run_ids_rejected(self):
        a = make_run("same", 6e17, 10**9, {})
        with pytest.raises(ValidationError):
            RunSet((a, a))


class TestIngest:
    def test_three_valid_rows(self, write_jsonl):
        path = write_jsonl([row(run_id=f"r{i}") for i in range(3)])
        runs = ingest_runs(path)
        assert len(runs) == 3

    def test_zero_flops_names_field_and_line(self, write_jsonl):
        path = write_jsonl([row(run_id="ok"), row(run_id="bad", flops=0.0)])
        with pytest.raises(IngestError) as err:
            ingest_runs(path)
        message = str(err.value)
        assert "flops" in message and "line 2" in message

    def test_inconsistent_internal_row(self, write_jsonl):
        path = write_jsonl([row(flops=1e18, params=100_000_000, tokens=10**9)])
        with pytest.raises(IngestError) as err:
            ingest_runs(path)
        assert "6*params*tokens" in str(err.value)

    def test_duplicate_run_id(self, write_jsonl):
        path = write_jsonl([row(run_id="dup"), row(run_id="dup")])
        with pytest.raises(ValidationError, match="dup"):
            ingest_runs(path)

    def test_non_finite_metric_in_file(self, write_jsonl, tmp_path):
        path = tmp_path / "runs.jsonl"
        bad = row()
        text = json.dumps(bad).replace("1.25", "NaN")
        path.write_text(text + "\n")
        with pytest.raises(IngestError, match="line 1"):
            ingest_runs(path)

    def test_malformed_json_line(self, tmp_path):
        path = tmp_path / "runs.jsonl"
        path.write_text(json.dumps(row()) + "\n{not json\n")
        with pytest.raises(IngestError, match="line 2"):
            ingest_runs(path)

    def test_missing_field(self, write_jsonl):
        obj = row()
        del obj["tokens"]
        path = write_jsonl([obj])
        with pytest.raises(IngestError, match="tokens"):
            ingest_runs(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestError, match="nope.jsonl"):
            ingest_runs(tmp_path / "nope.jsonl")

    def test_csv_roundtrip_matches_jsonl(self, write_jsonl, tmp_path):
        rows = [
            row(run_id="a", metrics={"bpb/x": 1.5, "acc/y": 0.25}),
            row(run_id="b", metrics={"bpb/x": 1.25}),
        ]
        jsonl_path = write_jsonl(rows)
        from_jsonl = ingest_runs(jsonl_path)
        csv_path = tmp_path / "runs.csv"
        emit_runs(from_jsonl, csv_path)
        from_csv = ingest_runs(csv_path)
        assert from_csv.records == from_jsonl.records

    def test_csv_bad_number_names_line(self, tmp_path):
        path = tmp_path / "runs.csv"
        path.write_text(
            "run_id,source,dataset,flops,params,tokens,m\n"
            "a,internal,d,6e17,100000000,1000000000,oops\n"
        )
        with pytest.raises(IngestError, match="line 2"):
            ingest_runs(path)


class TestEmitLossless:
    def test_jsonl_roundtrip_bit_identical(self, tmp_path):
        records = (
            make_run("a", 6e17 * 1.0000001, 10**9, {"bpb/x": 0.1 + 0.2}),
            make_run("b", 5.4321e18, 7_654_321, {"m1": 1e-17, "m2": -3.25}),
        )
        runs = RunSet(records, provenance="mem")
        path = tmp_path / "out.jsonl"
        emit_runs(runs, path)
        back = ingest_runs(path)
        for orig, new in zip(runs, back):
            assert new.flops == orig.flops
            assert new.params == orig.params
            assert new.tokens == orig.tokens
            assert new.metrics == orig.metrics

    @given(
        flops_scale=st.floats(min_value=0.995, max_value=1.005),
        tokens=st.integers(min_value=1, max_value=10**12),
        value=st.floats(allow_nan=False, allow_infinity=False, width=64),
    )
    def test_roundtrip_property(self, tmp_path_factory, flops_scale, tokens, value):
        params = 1000
        flops = 6.0 * params * tokens * flops_scale
        runs = RunSet((make_run("r", flops, tokens, {"m": value}, params=params),))
        path = tmp_path_factory.mktemp("rt") / "runs.jsonl"
        emit_runs(runs, path)
        back = ingest_runs(path)
        assert back.records[0].flops == runs.records[0].flops
        assert back.records[0].metrics["m"] == value


SCHEMING_SLUGS = [
    "okay_with_deceiving_a_user_to_help_them",
    "desire_for_being_rated_HHH_over_actually_being_HHH",
    "acts_like_it_wants_to_help_humans_but_does_not_care_about_that",
    "being_helpful_to_subtly_achieve_goals_against_human_values",
    "ends_justify_means",
    "desire_for_discreetly_acquiring_power",
]


class TestAggregate:
    def spec(self):
        return GroupingSpec(name="pair", mapping={"i1": "g", "i2": "g", "solo": "s"})

    def runs(self, metrics):
        return RunSet((make_run("r0", 6e17, 10**9, metrics),))

    def test_mean_of_two(self):
        runs = self.runs({"p/i1": 0.4, "p/i2": 0.6, "p/solo": 0.9})
        out = aggregate_by_group(runs, self.spec(), "p/")
        assert out.records[0].metrics["g"] == pytest.approx(0.5, abs=1e-15)

    def test_singleton_identity(self):
        runs = self.runs({"p/i1": 0.4, "p/i2": 0.6, "p/solo": 0.9})
        out = aggregate_by_group(runs, self.spec(), "p/")
        assert out.records[0].metrics["s"] == 0.9

    def test_cluster_mean_matches_hand_computation(self):
        # Six behaviour slugs in one risk cluster; oracle is the direct mean.
        values = [0.31, 0.44, 0.52, 0.27, 0.61, 0.38]
        mapping = {slug: "scheming" for slug in SCHEMING_SLUGS}
        mapping["no_shut_down"] = "incorrigibility"
        spec = GroupingSpec(name="risk", mapping=mapping)
        metrics = {f"prob/{slug}": v for slug, v in zip(SCHEMING_SLUGS, values)}
        metrics["prob/no_shut_down"] = 0.05
        out = aggregate_by_group(self.runs(metrics), spec, "prob/")
        expected = sum(values) / len(values)
        assert out.records[0].metrics["scheming"] == pytest.approx(expected, rel=1e-15)
        assert set(out.records[0].metrics) == {"scheming", "incorrigibility"}

    def test_unmapped_item_key(self):
        runs = self.runs({"p/i1": 0.4, "p/unknown": 0.1, "p/solo": 0.9, "p/i2": 0.5})
        with pytest.raises(ValidationError, match="unknown"):
            aggregate_by_group(runs, self.spec(), "p/")

    def test_empty_group_on_run(self):
        runs = self.runs({"p/i1": 0.4, "p/i2": 0.6})  # nothing maps to "s"
        with pytest.raises(ValidationError, match="'s'"):
            aggregate_by_group(runs, self.spec(), "p/")

    def test_non_prefix_metrics_ignored(self):
        runs = self.runs({"p/i1": 0.4, "p/i2": 0.6, "p/solo": 0.9, "bpb/x": 2.0})
        out = aggregate_by_group(runs, self.spec(), "p/")
        assert "bpb/x" not in out.records[0].metrics

    def test_commutes_with_run_subsetting(self):
        records = tuple(
            make_run(f"r{i}", 6e17, 10**9,
                     {"p/i1": 0.1 * i, "p/i2": 0.2 + 0.1 * i, "p/solo": 0.5})
            for i in range(1, 6)
        )
        runs = RunSet(records)
        spec = self.spec()
        keep = lambda r: int(r.run_id[1:]) % 2 == 1
        agg_then_filter = aggregate_by_group(runs, spec, "p/").filter(keep)
        filter_then_agg = aggregate_by_group(runs.filter(keep), spec, "p/")
        assert agg_then_filter.records == filter_then_agg.records

    @given(
        st.dictionaries(
            st.sampled_from(["a", "b", "c", "d"]),
            st.floats(min_value=-10, max_value=10, allow_nan=False),
            min_size=4,
            max_size=4,
        )
    )
    def test_grouping_totality(self, values):
        spec = GroupingSpec(name="t", mapping={"a": "g1", "b": "g1", "c": "g2", "d": "g2"})
        runs = RunSet((make_run("r", 6e17, 10**9,
                                {f"x/{k}": v for k, v in values.items()}),))
        out = aggregate_by_group(runs, spec, "x/")
        assert set(out.records[0].metrics) == set(spec.group_labels())


class TestGroupingSpec:
    def test_empty_mapping_rejected(self):
        with pytest.raises(ValidationError):
            GroupingSpec(name="empty", mapping={})

    def test_from_file(self, tmp_path):
        path = tmp_path / "groups.json"
        path.write_text(json.dumps({"name": "risk", "mapping": {"a": "g"}}))
        spec = GroupingSpec.from_file(path)
        assert spec.name == "risk"
        assert spec.mapping == {"a": "g"}

    def test_filter_preserves_immutability(self):
        runs = RunSet((make_run("r", 6e17, 10**9, {"m": 1.0}),))
        filtered = runs.filter(lambda r: False)
        assert len(filtered) == 0 and len(runs) == 1

    def test_flops_consistency_evaluates_6nt(self):
        # Direct evaluation: 6 * 1e8 * 1e9 = 6e17 exactly.
        assert 6 * 100_000_000 * 1_000_000_000 == 6 * 10**17
        assert not math.isclose(1e18, 6e17, rel_tol=0.01)
