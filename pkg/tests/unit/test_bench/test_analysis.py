"""
Unit tests for timing-table analysis against the shipped tables.
"""

import pandas as pd
import pytest

from actbench.bench.analysis import (
    TimingTable,
    compare_platforms,
    emit_table,
    group_spread,
    identity_relative_series,
    load_fixture,
    load_timings,
    parse_table,
    per_instance_curve,
    relative_to_identity,
    slowest_functions,
    spread_series,
    write_curve_csv,
    write_spread_csv,
)
from actbench.bench.harness import TimingRecord, write_records_csv
from actbench.core.activations import ActivationKind, FunctionGroup
from actbench.utils.error_handling import (
    MissingBaselineError,
    NoDataError,
    SchemaError,
    UndefinedSpreadError,
    ValidationError,
)


@pytest.fixture(scope="module")
def tables():
    return {name: load_fixture(name) for name in ("table1", "table2", "table3", "table4")}


class TestFixtures:
    """The shipped tables load completely."""

    def test_all_functions_and_sizes(self, tables):
        for table in tables.values():
            assert len(table.functions) == 26
            assert table.exponents == tuple(range(9))

    def test_known_cells(self, tables):
        assert tables["table1"].mean("RReLU", 4) == pytest.approx(2.532e-03)
        assert tables["table2"].mean("Identity", 1) == pytest.approx(8.792e-05)
        assert tables["table4"].mean("Softsign", 8) == pytest.approx(1.089e03)

    def test_absent_cells(self, tables):
        """The largest consumer-CPU size was never measured."""
        assert tables["table3"].mean("ReLU", 8) is None
        assert tables["table3"].mean("ReLU", 7) is not None

    def test_platform_metadata(self, tables):
        assert tables["table4"].platform == "Xeon E5-2660"
        assert tables["table1"].device == "gpu"

    def test_unknown_fixture(self):
        with pytest.raises(ValidationError):
            load_fixture("table9")


class TestGroupSpread:
    """Slowest over fastest within a group."""

    def test_consumer_gpu_n4(self, tables):
        summary = group_spread(tables["table1"].column(4), FunctionGroup.ACTIVATION, 4)
        assert summary.argmax is ActivationKind.RRELU
        assert summary.argmin is ActivationKind.GELU
        assert f"{summary.ratio:.2f}" == "10.90"

    def test_datacentre_gpu_n5(self, tables):
        summary = group_spread(tables["table2"].column(5), FunctionGroup.ACTIVATION, 5)
        assert summary.argmax is ActivationKind.SOFTSIGN
        assert summary.argmin is ActivationKind.SOFTSHRINK
        assert f"{summary.ratio:.2f}" == "6.90"

    def test_datacentre_cpu_n8(self, tables):
        summary = group_spread(tables["table4"].column(8), FunctionGroup.ACTIVATION, 8)
        assert summary.argmax is ActivationKind.SOFTSIGN
        assert summary.argmin is ActivationKind.PRELU
        assert f"{summary.ratio:.2f}" == "2.12"

    def test_dropout_group(self, tables):
        summary = group_spread(tables["table1"].column(4), FunctionGroup.DROPOUT, 4)
        assert summary.argmax is ActivationKind.ALPHA_DROPOUT
        assert summary.argmin is ActivationKind.DROPOUT3D
        assert summary.ratio == pytest.approx(2.967e-04 / 1.531e-04)

    def test_ties_resolve_to_row_order(self):
        means = {"ReLU": 1.0, "ELU": 1.0, "Tanh": 2.0, "CELU": 2.0}
        summary = group_spread(means, FunctionGroup.ACTIVATION, 0)
        assert summary.argmin is ActivationKind.ELU
        assert summary.argmax is ActivationKind.CELU

    def test_ratio_at_least_one(self, tables):
        for table in tables.values():
            for summary in spread_series(table):
                assert summary.ratio >= 1.0

    def test_needs_two_members(self):
        with pytest.raises(UndefinedSpreadError):
            group_spread({"ReLU": 1.0, "Dropout": 1.0}, FunctionGroup.ACTIVATION, 0)

    def test_identity_group_is_undefined(self, tables):
        with pytest.raises(UndefinedSpreadError):
            group_spread(tables["table1"].column(0), FunctionGroup.IDENTITY, 0)

    def test_absent_size_skipped_in_series(self, tables):
        sizes = [s.size_exponent for s in spread_series(tables["table3"])]
        assert sizes == list(range(8))


class TestRelativeToIdentity:
    """Activation means over the identity baseline."""

    def test_softsign_datacentre_cpu(self, tables):
        summary = relative_to_identity(tables["table4"].column(8), 8)
        assert f"{summary.ratios[ActivationKind.SOFTSIGN]:.2f}" == "4.56"
        assert ActivationKind.DROPOUT not in summary.ratios
        assert ActivationKind.IDENTITY not in summary.ratios
        assert len(summary.ratios) == 21

    def test_mean_and_sd(self):
        summary = relative_to_identity({"Identity": 2.0, "ReLU": 2.0, "Tanh": 6.0}, 0)
        assert summary.mean_ratio == pytest.approx(2.0)
        assert summary.sd_ratio == pytest.approx(2 ** 0.5)

    def test_missing_baseline(self):
        with pytest.raises(MissingBaselineError):
            relative_to_identity({"ReLU": 1.0}, 3)
        with pytest.raises(MissingBaselineError):
            relative_to_identity({"ReLU": 1.0, "Identity": 0.0}, 3)

    def test_series_skips_absent_sizes(self, tables):
        assert len(identity_relative_series(tables["table3"])) == 8

    def test_slowest_functions(self, tables):
        slowest = slowest_functions(tables["table4"].column(8), k=3)
        assert [kind for kind, _ in slowest] == [
            ActivationKind.SOFTSIGN, ActivationKind.LOG_SIGMOID, ActivationKind.TANHSHRINK,
        ]


class TestCurveAndPlatforms:
    """Per-instance curves and cross-platform spread."""

    def test_per_instance_curve(self, tables):
        curve = per_instance_curve(tables["table4"])
        points = curve[ActivationKind.SOFTSIGN]
        assert [p.size_exponent for p in points] == list(range(9))
        assert points[8].per_instance_s == pytest.approx(1.089e03 / 1e8)

    def test_absent_points_stay_absent(self, tables):
        points = per_instance_curve(tables["table3"])[ActivationKind.RELU]
        assert points[8].absent
        assert not points[0].absent

    def test_compare_platforms(self, tables):
        frame = compare_platforms([tables["table1"], tables["table4"]])
        assert set(frame["table"]) == {"table1", "table4"}
        row = frame[(frame["table"] == "table1") & (frame["n"] == 4)].iloc[0]
        assert row["argmax"] == "RReLU"


class TestTableText:
    """The monospace grid."""

    def test_layout(self, tables):
        text = emit_table(tables["table1"])
        lines = text.splitlines()
        assert lines[0].startswith("Function")
        assert "n=8" in lines[0]
        assert set(lines[1]) == {"-"}
        assert lines[-1] == lines[1]
        # one rule after the header, one between each of the three groups, one at the end
        assert sum(1 for line in lines if set(line) == {"-"}) == 4

    def test_marks_group_minima(self, tables):
        text = emit_table(tables["table1"])
        gelu = next(line for line in text.splitlines() if line.startswith("GELU "))
        assert "2.322e-04*" in gelu
        identity = next(line for line in text.splitlines() if line.startswith("Identity"))
        assert identity.count("*") == 9

    def test_no_marking(self, tables):
        assert "*" not in emit_table(tables["table1"], marking=False)

    def test_absent_cells(self, tables):
        text = emit_table(tables["table3"])
        assert "n/a" in text

    @pytest.mark.parametrize("name", ["table1", "table2", "table3", "table4"])
    def test_reads_back_exactly(self, tables, name):
        """Every cell survives emit then parse bit for bit; absent cells stay absent."""
        table = tables[name]
        parsed = parse_table(emit_table(table), name)
        assert parsed.exponents == table.exponents
        assert parsed.functions == table.functions
        for kind in table.functions:
            for n in table.exponents:
                assert parsed.mean(kind, n) == table.mean(kind, n)

    def test_parse_rejects_malformed(self):
        with pytest.raises(ValidationError):
            parse_table("Function n=0\nReLU 1.0 2.0\n")
        with pytest.raises(NoDataError):
            parse_table("")


class TestLoadTimings:
    """Loading user CSVs in either schema."""

    def test_fixture_schema(self, tmp_path):
        path = tmp_path / "mine.csv"
        path.write_text("function,n,mean_s\nReLU,0,1.0\nTanh,0,3.0\nIdentity,0,0.5\n")
        table = load_timings(path)
        assert table.name == "mine"
        assert group_spread(table.column(0), FunctionGroup.ACTIVATION, 0).ratio == 3.0

    def test_harness_schema_is_aggregated(self, tmp_path):
        records = [TimingRecord("ReLU", "host", "cpu", 1, r, v) for r, v in enumerate([1.0, 3.0])]
        records.append(TimingRecord("Identity", "host", "cpu", 1, 0, 0.5))
        path = write_records_csv(records, tmp_path / "timings.csv")
        table = load_timings(path)
        assert table.platform == "host"
        assert table.mean("ReLU", 1) == pytest.approx(2.0)
        assert relative_to_identity(table.column(1), 1).ratios[ActivationKind.RELU] == 4.0

    def test_mixed_platforms_rejected(self, tmp_path):
        records = [TimingRecord("ReLU", "a", "cpu", 0, 0, 1.0),
                   TimingRecord("ReLU", "b", "cpu", 0, 0, 1.0)]
        path = write_records_csv(records, tmp_path / "timings.csv")
        with pytest.raises(ValidationError):
            load_timings(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(NoDataError):
            load_timings(path)

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("function,size\nReLU,1\n")
        with pytest.raises(SchemaError):
            load_timings(path)


class TestWriters:
    def test_curve_and_spread_csv(self, tables, tmp_path):
        curve_path = write_curve_csv(per_instance_curve(tables["table2"]), tmp_path / "curve.csv")
        curve = pd.read_csv(curve_path)
        assert list(curve.columns) == ["function", "n", "per_instance_s"]
        assert len(curve) == 26 * 9

        spread_path = write_spread_csv(spread_series(tables["table2"]), tmp_path / "spread.csv")
        spread = pd.read_csv(spread_path)
        assert spread.loc[spread["n"] == 5, "argmax"].iloc[0] == "Softsign"

    def test_table_round_trip_through_frame(self, tables):
        frame = tables["table1"].to_frame()
        rebuilt = TimingTable.from_frame(frame, "copy")
        assert rebuilt.mean("GELU", 4) == tables["table1"].mean("GELU", 4)
