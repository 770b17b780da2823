"""
Unit tests for listing parsing and micro-op tallies.
"""

import pytest

from actbench.costmodel.listing import (
    CostClass,
    classify,
    load_listings,
    parse_instruction,
    parse_listing,
    parse_listings,
)
from actbench.costmodel.tally import CostTable, cost_report, micro_op_total
from actbench.fixtures import read_listing
from actbench.utils.error_handling import (
    CycleDetectedError,
    FileProcessingError,
    ListingParseError,
    MissingSymbolError,
    UnknownMnemonicError,
    ValidationError,
)


@pytest.fixture
def relu():
    return parse_listing(read_listing("relu"), "relu.lst")


@pytest.fixture
def tanh_routines():
    return parse_listings(read_listing("tanh"), "tanh.lst")


class TestParsing:
    """Labels, instructions and operands."""

    def test_shipped_relu(self, relu):
        assert relu.label == "relu"
        assert len(relu) == 7
        assert relu.mnemonics() == ["push", "rol", "xor", "and", "pop", "imul", "ret"]

    def test_shipped_tanh_has_two_routines(self, tanh_routines):
        assert list(tanh_routines) == ["tanh", "exp"]
        assert len(tanh_routines["tanh"]) == 14
        assert tanh_routines["tanh"].call_targets() == ["exp", "exp"]
        assert len(tanh_routines["exp"]) == 12

    def test_operands(self):
        instruction = parse_instruction("fst dword [tmp1 + 4]", 3)
        assert instruction.mnemonic == "fst"
        assert instruction.operands == ("dword", "[tmp1 + 4]")
        assert instruction.line_number == 3
        assert parse_instruction("FMULP st1, st0", 1).operands == ("st1", "st0")

    def test_comments_and_blank_lines_ignored(self):
        listing = parse_listing("; header\n\nf:  ret ; done\n")
        assert listing.mnemonics() == ["ret"]

    def test_cost_classes(self):
        assert classify("xor") is CostClass.ONE_MICRO_OP
        assert classify("fprem") is CostClass.HEAVY
        assert classify("push") is CostClass.TABLE_LOOKUP

    def test_concatenation(self, relu):
        combined = relu + relu
        assert len(combined) == 14
        assert combined.label == "relu+relu"

    @pytest.mark.parametrize("text, reason", [
        ("", "no labelled listing"),
        ("ret\n", "before any label"),
        ("f:\n", "empty body"),
        ("f: ret\nf: ret\n", "duplicate label"),
        ("f: 123 eax\n", "mnemonic"),
    ])
    def test_parse_errors_name_line(self, text, reason):
        with pytest.raises(ListingParseError) as exc_info:
            parse_listings(text, "bad.lst")
        assert reason in exc_info.value.message
        assert exc_info.value.error_code == "PARSE_ERROR"

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "id.lst"
        path.write_text("identity: ret\n")
        assert load_listings(path)["identity"].mnemonics() == ["ret"]
        with pytest.raises(FileProcessingError):
            load_listings(tmp_path / "missing.lst")


class TestTally:
    """Micro-op totals."""

    def test_relu_total(self, relu):
        assert micro_op_total(relu) == 7

    def test_tanh_total_follows_calls(self, tanh_routines):
        """Each call site adds the callee's total."""
        assert micro_op_total(tanh_routines["tanh"], follow_calls=tanh_routines) == 126
        assert micro_op_total(tanh_routines["exp"]) == 55

    def test_ratio_about_eighteen(self, relu, tanh_routines):
        report = cost_report({"relu": relu, "tanh": tanh_routines["tanh"]},
                             follow_calls=tanh_routines)
        assert report.totals == {"relu": 7, "tanh": 126}
        assert report.ratios[("tanh", "relu")] == pytest.approx(18.0)
        assert report.ratios[("relu", "tanh")] == pytest.approx(7 / 126)
        assert "tanh / relu: 18.00" in report.lines()

    def test_uniform_costs_count_instructions(self, relu, tanh_routines):
        table = CostTable.uniform(1)
        assert micro_op_total(relu, table) == 7
        assert micro_op_total(tanh_routines["tanh"], table, tanh_routines) == 38

    def test_unknown_mnemonic(self):
        with pytest.raises(UnknownMnemonicError):
            micro_op_total(parse_listing("f: vfmadd231ps ymm0, ymm1, ymm2\n"))

    def test_missing_callee(self, tanh_routines):
        with pytest.raises(MissingSymbolError):
            micro_op_total(tanh_routines["tanh"])

    def test_cycle_detected(self):
        routines = parse_listings("a: call b\nret\nb: call a\nret\n")
        with pytest.raises(CycleDetectedError):
            micro_op_total(routines["a"], follow_calls=routines)

    def test_self_recursion_detected(self):
        routines = parse_listings("a: call a\nret\n")
        with pytest.raises(CycleDetectedError):
            micro_op_total(routines["a"], follow_calls=routines)


class TestCostTable:
    """Default, uniform and CSV-supplied tables."""

    def test_heavy_default(self):
        table = CostTable.default()
        assert table.cost_of("f2xm1") == 15
        assert table.cost_of("xor") == 1

    def test_csv_overrides_merge(self, tmp_path, relu):
        path = tmp_path / "costs.csv"
        path.write_text("mnemonic,count\nIMUL,3\nvpxor,1\n")
        table = CostTable.from_csv(path)
        assert table.cost_of("imul") == 3
        assert table.cost_of("vpxor") == 1
        assert table.cost_of("push") == 1
        assert micro_op_total(relu, table) == 9

    def test_csv_missing_column(self, tmp_path):
        path = tmp_path / "costs.csv"
        path.write_text("name,uops\nxor,1\n")
        with pytest.raises(ValidationError):
            CostTable.from_csv(path)

    @pytest.mark.parametrize("count", [0, -2, 1.5])
    def test_counts_must_be_positive_integers(self, count):
        with pytest.raises(ValidationError):
            CostTable({"xor": count})
