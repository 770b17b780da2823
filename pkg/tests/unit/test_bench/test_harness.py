"""
Unit tests for the inference timing harness.
"""

import itertools
import json

import numpy as np
import pandas as pd
import pytest

from actbench.bench import harness
from actbench.bench.harness import (
    AGGREGATE_COLUMNS,
    RECORD_COLUMNS,
    BenchPlan,
    TimingRecord,
    aggregate,
    frame_to_records,
    read_records_csv,
    report_to_json,
    run_inference_bench,
    timed_forward,
    timed_streamed_forward,
    write_records_csv,
)
from actbench.core.activations import ActivationKind
from actbench.core.network import NetworkConfig, init_network
from actbench.core.workload import Workload, generate, load_workload, workload_file_name
from actbench.utils.error_handling import SchemaError, ValidationError


@pytest.fixture
def small_network():
    return NetworkConfig.benchmark(input_dim=8, hidden_width=4, hidden_layers=1, output_dim=2)


def stepping_clock(start=0.0, step=1.0):
    counter = itertools.count()
    return lambda: start + step * next(counter)


def plan_for(**overrides):
    settings = dict(
        functions=["ReLU", "Tanh"], exponents=[1, 0], runs=3, platform_label="test-host",
        device="cpu",
    )
    settings.update(overrides)
    return BenchPlan(**settings)


class TestBenchPlan:
    """Plan normalisation and validation."""

    def test_normalises_functions_and_exponents(self):
        plan = plan_for(functions=["relu", "ReLU", "tanh"], exponents=[2, 0, 2])
        assert plan.functions == (ActivationKind.RELU, ActivationKind.TANH)
        assert plan.exponents == (0, 2)
        assert plan.expected_records == 2 * 2 * 3

    @pytest.mark.parametrize("overrides", [
        {"functions": []},
        {"exponents": [9]},
        {"runs": 0},
        {"time_budget_seconds": 0},
        {"pretrain_epochs": -1},
        {"batch_size": 0},
    ])
    def test_invalid_plans(self, overrides):
        with pytest.raises(ValidationError):
            plan_for(**overrides)

    def test_unknown_function(self):
        with pytest.raises(ValidationError):
            plan_for(functions=["swish"])


class TestTimedForward:
    """The measured section."""

    def test_reads_clock_exactly_twice(self, small_network, counting_clock):
        net = init_network(small_network)
        elapsed = timed_forward(net, np.zeros((10, 8), dtype=np.float32), counting_clock)
        assert counting_clock.reads == 2
        assert elapsed == pytest.approx(0.5)

    def test_batched_forward_still_two_reads(self, small_network, counting_clock):
        net = init_network(small_network)
        timed_forward(net, np.zeros((10, 8), dtype=np.float32), counting_clock, batch_size=3)
        assert counting_clock.reads == 2

    def test_streamed_forward_reads_twice_per_chunk(self, small_network, counting_clock):
        """Ten rows in chunks of three: four chunks, eight reads, chunk times summed."""
        net = init_network(small_network)
        elapsed = timed_streamed_forward(net, Workload(1, 8), counting_clock, batch_size=3)
        assert counting_clock.reads == 8
        assert elapsed == pytest.approx(2.0)


class TestRunInferenceBench:
    """Sweeps, budgets and skip markers."""

    def test_full_sweep(self, small_network, counting_clock):
        """Two functions, two sizes, three runs: twelve records, clock read twice each."""
        report = run_inference_bench(plan_for(), small_network, clock=counting_clock)
        assert report.complete
        assert len(report.records) == 12
        assert counting_clock.reads == 24
        first = report.records[0]
        assert (first.function, first.size_exponent, first.run_index) == (ActivationKind.RELU, 0, 0)
        assert all(r.elapsed_seconds == pytest.approx(0.5) for r in report.records)
        tens = [r for r in report.records if r.size_exponent == 1]
        assert all(r.per_instance_seconds == pytest.approx(0.05) for r in tens)
        assert {r.platform_label for r in report.records} == {"test-host"}

    def test_progress_callback(self, small_network, counting_clock, mocker):
        callback = mocker.Mock()
        run_inference_bench(plan_for(), small_network, clock=counting_clock,
                            progress_callback=callback)
        assert callback.call_count == 4
        callback.assert_called_with(4, 4, "Tanh n=1")

    def test_budget_expiry_skips_remaining_sizes(self, small_network, counting_clock):
        """Each unmeasured (function, n, run) gets a marker; nothing is silently dropped."""
        plan = plan_for(time_budget_seconds=5)
        report = run_inference_bench(plan, small_network, clock=counting_clock,
                                     budget_clock=stepping_clock())
        assert not report.complete
        assert len(report.records) == 3
        assert len(report.records) + len(report.skipped) == plan.expected_records
        assert {(s.function, s.size_exponent) for s in report.skipped} == {
            (ActivationKind.RELU, 1), (ActivationKind.TANH, 0), (ActivationKind.TANH, 1),
        }
        assert all(s.reason == "time budget expired" for s in report.skipped)

    def test_expired_before_start(self, small_network, counting_clock):
        clock_values = itertools.chain([0.0], itertools.repeat(100.0))
        report = run_inference_bench(plan_for(time_budget_seconds=1), small_network,
                                     clock=counting_clock, budget_clock=lambda: next(clock_values))
        assert report.records == []
        assert len(report.skipped) == 12
        assert counting_clock.reads == 0

    def test_memory_cap_skips_larger_sizes(self, small_network, counting_clock):
        plan = plan_for(memory_cap_bytes=8 * 4 * 5)
        report = run_inference_bench(plan, small_network, clock=counting_clock)
        assert {r.size_exponent for r in report.records} == {0}
        assert len(report.skipped) == 6
        assert all(s.reason.startswith("allocation failed") for s in report.skipped)

    def test_batch_size_streams_workloads_over_the_cap(self, small_network, counting_clock, mocker):
        """n=3 needs 32000 bytes; under a 16000-byte cap it is streamed in batches of 100."""
        spy = mocker.spy(harness, "forward")
        plan = plan_for(functions=["ReLU"], exponents=[2, 3], runs=2, batch_size=100,
                        memory_cap_bytes=16000)
        report = run_inference_bench(plan, small_network, clock=counting_clock)

        assert report.complete
        assert len(report.records) == 4
        streamed = [r for r in report.records if r.size_exponent == 3]
        # ten chunks per run, 0.5 s between the two reads around each
        assert all(r.elapsed_seconds == pytest.approx(5.0) for r in streamed)
        assert counting_clock.reads == 2 * 2 + 2 * 2 * 10
        rows_seen = [call.args[1].shape[0] for call in spy.call_args_list]
        # materialised n=2: warm-up plus two runs; streamed n=3: one warm-up batch plus 2 x 1000 rows
        assert sum(rows_seen) == 3 * 100 + 100 + 2 * 1000

    def test_streaming_needs_one_batch_under_the_cap(self, small_network, counting_clock):
        plan = plan_for(functions=["ReLU"], exponents=[3], batch_size=1000, memory_cap_bytes=16000)
        report = run_inference_bench(plan, small_network, clock=counting_clock)
        assert report.records == []
        assert len(report.skipped) == 3
        assert "batch of 1000 rows" in report.skipped[0].reason

    def test_dropout_runs_in_eval_mode(self, small_network, counting_clock):
        report = run_inference_bench(plan_for(functions=["Dropout", "AlphaDropout"]),
                                     small_network, clock=counting_clock)
        assert report.complete

    @pytest.mark.slow
    def test_pretraining_then_benchmark(self, small_network, counting_clock):
        report = run_inference_bench(plan_for(pretrain_epochs=20, exponents=[2]), small_network,
                                     clock=counting_clock)
        assert len(report.records) == 6


class TestAggregation:
    """Means and sample standard deviations."""

    def make_records(self):
        return [
            TimingRecord("ReLU", "host", "cpu", 2, run, value)
            for run, value in enumerate([1.0, 2.0, 3.0])
        ] + [TimingRecord("Tanh", "host", "cpu", 2, 0, 4.0)]

    def test_mean_and_sd(self):
        summary = aggregate(self.make_records())
        assert list(summary.columns) == AGGREGATE_COLUMNS
        relu = summary[summary["function"] == "ReLU"].iloc[0]
        assert relu["runs"] == 3
        assert relu["mean_elapsed_s"] == pytest.approx(2.0)
        assert relu["sd_elapsed_s"] == pytest.approx(1.0)
        assert relu["mean_per_instance_s"] == pytest.approx(0.02)

    def test_single_run_sd_is_zero(self):
        summary = aggregate(self.make_records())
        tanh = summary[summary["function"] == "Tanh"].iloc[0]
        assert tanh["sd_elapsed_s"] == 0.0
        assert tanh["group"] == "Activation"

    def test_identical_values_give_exact_mean(self):
        value = 0.1 + 0.2
        records = [TimingRecord("ReLU", "h", "cpu", 0, r, value) for r in range(7)]
        assert aggregate(records)["mean_elapsed_s"].iloc[0] == value

    def test_empty(self):
        assert aggregate([]).empty


class TestPersistence:
    """CSV and JSON outputs."""

    def test_csv_round_trip_is_exact(self, tmp_path):
        records = [TimingRecord("GELU", "host", "cpu", 3, 0, 0.1234567890123)]
        path = write_records_csv(records, tmp_path / "timings.csv")
        assert list(pd.read_csv(path).columns) == RECORD_COLUMNS
        loaded = read_records_csv(path)
        assert loaded[0].elapsed_seconds == records[0].elapsed_seconds
        assert loaded[0].per_instance_seconds == records[0].per_instance_seconds
        assert loaded[0].function is ActivationKind.GELU

    def test_missing_columns(self):
        with pytest.raises(SchemaError) as exc_info:
            frame_to_records(pd.DataFrame({"function": ["ReLU"], "n": [0]}))
        assert "elapsed_s" in exc_info.value.missing_columns

    def test_report_json(self, small_network, counting_clock):
        report = run_inference_bench(plan_for(exponents=[0]), small_network, clock=counting_clock)
        payload = json.loads(json.dumps(report_to_json(report), default=str))
        assert payload["complete"] is True
        assert payload["plan"]["functions"] == ["ReLU", "Tanh"]
        assert len(payload["aggregate"]) == 2
        assert len(payload["records"]) == 6
        assert payload["skipped"] == []


class TestWorkloadReuse:
    """Persisted workloads shared across functions and runs."""

    def test_saved_once_then_reused(self, small_network, counting_clock, tmp_path, mocker):
        save_spy = mocker.spy(harness, "save_workload")
        load_spy = mocker.spy(harness, "load_workload")
        plan = plan_for(exponents=[1], workload_dir=tmp_path / "workloads")
        report = run_inference_bench(plan, small_network, clock=counting_clock)

        assert report.complete
        assert save_spy.call_count == 1
        assert load_spy.call_count == 1
        path = tmp_path / "workloads" / workload_file_name(Workload(1, 8))
        np.testing.assert_array_equal(load_workload(path), generate(Workload(1, 8)))

    def test_existing_file_is_used(self, small_network, counting_clock, tmp_path, mocker):
        """A second sweep reads every size from disk and generates nothing."""
        plan = plan_for(functions=["ReLU"], workload_dir=tmp_path)
        run_inference_bench(plan, small_network, clock=counting_clock)
        generate_spy = mocker.spy(harness, "generate")
        report = run_inference_bench(plan, small_network, clock=counting_clock)
        assert report.complete
        assert generate_spy.call_count == 0

    def test_plan_records_directory(self, tmp_path):
        assert plan_for(workload_dir=str(tmp_path)).to_dict()["workload_dir"] == str(tmp_path)


@pytest.mark.slow
class TestLiveSweep:
    """
    A real-clock sweep on a narrowed benchmark network.

    The network keeps the preset 64 inputs and 16 outputs but has one hidden
    layer of width 64 instead of four of width 1024, so the 10^6 workload
    finishes in seconds. Per-instance amortisation and the Identity floor
    hold for both shapes; absolute timings of the full preset are not checked.
    """

    def test_amortisation_and_identity_floor(self):
        plan = BenchPlan(
            functions=["Identity", "ReLU", "Tanh", "Softsign", "Dropout"],
            exponents=range(7), runs=3, platform_label="test-host", device="cpu",
        )
        report = run_inference_bench(plan, NetworkConfig.benchmark(hidden_width=64, hidden_layers=1))
        assert len(report.records) == 5 * 7 * 3

        summary = aggregate(report.records).set_index(["function", "n"])["mean_per_instance_s"]
        for name in ("Identity", "ReLU", "Tanh", "Softsign", "Dropout"):
            assert summary[(name, 0)] > summary[(name, 6)], name
        assert summary[("Identity", 6)] <= summary[("Tanh", 6)]
        assert summary[("Identity", 6)] <= summary[("Softsign", 6)]
