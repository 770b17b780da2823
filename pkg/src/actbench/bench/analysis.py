"""
Derived timing statistics and monospace timing tables.

Works on a TimingTable: mean seconds per (function, n), absent entries kept
as None. Tables come from the shipped fixtures, from harness CSV output
(aggregated on load) or from the monospace text format written by
``emit_table``.
"""

import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd

from ..core.activations import ActivationKind, FunctionGroup, ordered_kinds
from ..fixtures import FIXTURE_TABLES, read_fixture_table
from ..utils.error_handling import (
    FILE_ERROR_MAPPING,
    MissingBaselineError,
    NoDataError,
    SchemaError,
    UndefinedSpreadError,
    ValidationError,
    handle_errors,
)
from ..utils.logging_config import get_logger
from ..utils.stats import sample_sd, shifted_mean
from .harness import RECORD_COLUMNS, aggregate, frame_to_records

logger = get_logger(__name__)

FIXTURE_COLUMNS = ["function", "n", "mean_s"]
CURVE_COLUMNS = ["function", "n", "per_instance_s"]
SPREAD_COLUMNS = ["n", "group", "ratio", "argmax", "argmin"]
RELATIVE_COLUMNS = ["n", "mean_ratio", "sd_ratio"]

ABSENT = "n/a"
MIN_MARK = "*"

Means = Mapping[ActivationKind, Optional[float]]


def _usable(value: Optional[float]) -> bool:
    return value is not None and not (isinstance(value, float) and math.isnan(value))


@dataclass
class TimingTable:
    """Mean absolute prediction times, function x size exponent."""

    name: str
    platform: str
    exponents: Tuple[int, ...]
    means: Dict[ActivationKind, Dict[int, Optional[float]]]
    device: str = ""

    @property
    def functions(self) -> List[ActivationKind]:
        """Functions present, in table row order."""
        return [kind for kind in ordered_kinds() if kind in self.means]

    def mean(self, function: ActivationKind, n: int) -> Optional[float]:
        return self.means.get(ActivationKind.parse(function), {}).get(n)

    def column(self, n: int) -> Dict[ActivationKind, Optional[float]]:
        """Mean per function at size exponent ``n``."""
        return {kind: self.means[kind].get(n) for kind in self.functions}

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"function": kind.value, "n": n, "mean_s": self.means[kind].get(n)}
            for kind in self.functions
            for n in self.exponents
        ]
        return pd.DataFrame(rows, columns=FIXTURE_COLUMNS)

    @classmethod
    def from_frame(
        cls, frame: pd.DataFrame, name: str, platform: str = "", device: str = ""
    ) -> "TimingTable":
        """Build from a long ``function,n,mean_s`` frame; NaN means absent."""
        means: Dict[ActivationKind, Dict[int, Optional[float]]] = {}
        exponents = set()
        for row in frame.to_dict("records"):
            kind = ActivationKind.parse(row["function"])
            n = int(row["n"])
            value = row["mean_s"]
            exponents.add(n)
            means.setdefault(kind, {})[n] = None if pd.isna(value) else float(value)
        return cls(name, platform, tuple(sorted(exponents)), means, device)


@dataclass
class SpreadSummary:
    """Slowest over fastest mean within one group at one size."""

    size_exponent: int
    group: FunctionGroup
    max_mean_s: float
    min_mean_s: float
    ratio: float
    argmax: ActivationKind
    argmin: ActivationKind

    def to_dict(self) -> Dict[str, object]:
        return {
            "n": self.size_exponent,
            "group": self.group.value,
            "ratio": self.ratio,
            "argmax": self.argmax.value,
            "argmin": self.argmin.value,
        }


@dataclass
class IdentityRelativeSummary:
    """Activation means relative to the identity baseline at one size."""

    size_exponent: int
    mean_ratio: float
    sd_ratio: float
    ratios: Dict[ActivationKind, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return {"n": self.size_exponent, "mean_ratio": self.mean_ratio, "sd_ratio": self.sd_ratio}


@dataclass
class CurvePoint:
    size_exponent: int
    per_instance_s: Optional[float]

    @property
    def absent(self) -> bool:
        return self.per_instance_s is None


def _normalise_means(means: Mapping) -> Dict[ActivationKind, Optional[float]]:
    return {ActivationKind.parse(k): v for k, v in means.items()}


def group_spread(means: Mapping, group: FunctionGroup, n: int) -> SpreadSummary:
    """
    Ratio of the slowest to the fastest mean among ``group`` members at ``n``.

    Ties resolve to the first function in table row order.
    """
    group = FunctionGroup(group)
    means = _normalise_means(means)
    members = [
        (kind, float(means[kind]))
        for kind in ordered_kinds()
        if kind.group is group and kind in means and _usable(means[kind])
    ]
    if len(members) < 2:
        raise UndefinedSpreadError(group.value, n, [k.value for k, _ in members])

    argmax, max_mean = members[0]
    argmin, min_mean = members[0]
    for kind, value in members[1:]:
        if value > max_mean:
            argmax, max_mean = kind, value
        if value < min_mean:
            argmin, min_mean = kind, value

    if min_mean <= 0:
        raise UndefinedSpreadError(
            group.value, n, [k.value for k, _ in members], reason="minimum mean is not positive"
        )
    return SpreadSummary(n, group, max_mean, min_mean, max_mean / min_mean, argmax, argmin)


def relative_to_identity(means: Mapping, n: int) -> IdentityRelativeSummary:
    """
    Per-activation ratio to the Identity mean, with their mean and sample sd.

    Only the Activation group counts; dropouts are excluded.
    """
    means = _normalise_means(means)
    baseline = means.get(ActivationKind.IDENTITY)
    if not _usable(baseline) or float(baseline) <= 0:
        raise MissingBaselineError(n)

    ratios = {
        kind: float(means[kind]) / float(baseline)
        for kind in ordered_kinds()
        if kind.group is FunctionGroup.ACTIVATION and kind in means and _usable(means[kind])
    }
    if not ratios:
        raise NoDataError(f"activation means at n={n}")
    values = list(ratios.values())
    return IdentityRelativeSummary(n, shifted_mean(values), sample_sd(values), ratios)


def spread_series(table: TimingTable, group: FunctionGroup = FunctionGroup.ACTIVATION
                  ) -> List[SpreadSummary]:
    """Group spread at every size where it is defined."""
    series = []
    for n in table.exponents:
        try:
            series.append(group_spread(table.column(n), group, n))
        except UndefinedSpreadError as e:
            logger.debug(e.message)
    return series


def identity_relative_series(table: TimingTable) -> List[IdentityRelativeSummary]:
    series = []
    for n in table.exponents:
        try:
            series.append(relative_to_identity(table.column(n), n))
        except (MissingBaselineError, NoDataError) as e:
            logger.debug(e.message)
    return series


def slowest_functions(
    means: Mapping, group: FunctionGroup = FunctionGroup.ACTIVATION, k: int = 3
) -> List[Tuple[ActivationKind, float]]:
    """The ``k`` slowest group members, slowest first."""
    means = _normalise_means(means)
    members = [
        (kind, float(means[kind]))
        for kind in ordered_kinds()
        if kind.group is FunctionGroup(group) and kind in means and _usable(means[kind])
    ]
    return sorted(members, key=lambda item: -item[1])[:k]


def compare_platforms(
    tables: Sequence[TimingTable], group: FunctionGroup = FunctionGroup.ACTIVATION
) -> pd.DataFrame:
    """Group spread per table and size, one row per (platform, n)."""
    rows = []
    for table in tables:
        for summary in spread_series(table, group):
            row = summary.to_dict()
            row["table"] = table.name
            row["platform"] = table.platform
            rows.append(row)
    return pd.DataFrame(rows, columns=["table", "platform"] + SPREAD_COLUMNS)


def per_instance_curve(table: TimingTable) -> Dict[ActivationKind, List[CurvePoint]]:
    """Per-instance mean (mean / 10**n) per function, sorted by n; absent kept absent."""
    curve: Dict[ActivationKind, List[CurvePoint]] = {}
    for kind in table.functions:
        points = []
        for n in sorted(table.exponents):
            value = table.means[kind].get(n)
            points.append(CurvePoint(n, float(value) / 10 ** n if _usable(value) else None))
        curve[kind] = points
    return curve


def curve_to_frame(curve: Mapping[ActivationKind, List[CurvePoint]]) -> pd.DataFrame:
    rows = [
        {"function": kind.value, "n": p.size_exponent, "per_instance_s": p.per_instance_s}
        for kind, points in curve.items()
        for p in points
    ]
    return pd.DataFrame(rows, columns=CURVE_COLUMNS)


# Loading ------------------------------------------------------------------

def load_fixture(name: str) -> TimingTable:
    """One of the shipped tables, ``table1`` to ``table4``."""
    text = read_fixture_table(name)
    key = name.strip().lower()
    meta = FIXTURE_TABLES[key]
    frame = pd.read_csv(io.StringIO(text), float_precision="round_trip")
    return TimingTable.from_frame(frame, key, meta["platform"], meta["device"])


@handle_errors(error_mapping=FILE_ERROR_MAPPING)
def load_timings(path: Union[str, Path], name: Optional[str] = None) -> TimingTable:
    """
    Load timings in either the fixture schema (``function,n,mean_s``) or the
    harness record schema, which is aggregated to means.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise NoDataError(str(path))

    frame = pd.read_csv(io.StringIO(text), float_precision="round_trip")
    columns = set(frame.columns)
    if "mean_s" in columns:
        required = FIXTURE_COLUMNS
    else:
        required = RECORD_COLUMNS
    missing = [c for c in required if c not in columns]
    if missing:
        raise SchemaError(missing, str(path))
    if frame.empty:
        raise NoDataError(str(path))

    if required is FIXTURE_COLUMNS:
        return TimingTable.from_frame(frame, name or path.stem)

    summary = aggregate(frame_to_records(frame, source=str(path)))
    platforms = sorted(summary["platform"].unique())
    devices = sorted(summary["device"].unique())
    if len(platforms) > 1:
        raise ValidationError(
            "platform", platforms, f"{path} mixes platforms {platforms}; split it per platform"
        )
    long = summary.rename(columns={"mean_elapsed_s": "mean_s"})[FIXTURE_COLUMNS]
    return TimingTable.from_frame(long, name or path.stem, platforms[0], ",".join(devices))


# Table text format --------------------------------------------------------

_NAME_WIDTH = 14
_CELL_WIDTH = 11


def _column_minima(table: TimingTable) -> Dict[Tuple[int, FunctionGroup], ActivationKind]:
    marks = {}
    for n in table.exponents:
        for group in FunctionGroup:
            best = None
            for kind in table.functions:
                value = table.means[kind].get(n)
                if kind.group is group and _usable(value):
                    if best is None or value < best[1]:
                        best = (kind, value)
            if best is not None:
                marks[(n, group)] = best[0]
    return marks


def emit_table(table: TimingTable, marking: bool = True) -> str:
    """
    Monospace grid: rows in table order split into activation, dropout and
    identity blocks; cells in ``.3e``; absent cells as ``n/a``. With
    ``marking`` the minimum of each column within each block carries ``*``.
    """
    minima = _column_minima(table) if marking else {}
    header = "Function".ljust(_NAME_WIDTH) + "".join(
        f"n={n}".rjust(_CELL_WIDTH) + " " for n in table.exponents
    )
    rule = "-" * len(header.rstrip())
    lines = [header.rstrip(), rule]

    previous_group = None
    for kind in table.functions:
        if previous_group is not None and kind.group is not previous_group:
            lines.append(rule)
        previous_group = kind.group

        cells = []
        for n in table.exponents:
            value = table.means[kind].get(n)
            text = f"{value:.3e}" if _usable(value) else ABSENT
            mark = MIN_MARK if minima.get((n, kind.group)) is kind else " "
            cells.append(text.rjust(_CELL_WIDTH) + mark)
        lines.append((kind.value.ljust(_NAME_WIDTH) + "".join(cells)).rstrip())

    lines.append(rule)
    return "\n".join(lines) + "\n"


def parse_table(text: str, name: str = "parsed", platform: str = "") -> TimingTable:
    """Read back the grid written by ``emit_table``."""
    exponents: Optional[List[int]] = None
    means: Dict[ActivationKind, Dict[int, Optional[float]]] = {}

    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or set(stripped) == {"-"}:
            continue
        tokens = stripped.split()
        if tokens[0] == "Function":
            try:
                exponents = [int(token.split("=", 1)[1]) for token in tokens[1:]]
            except (IndexError, ValueError):
                raise ValidationError("table", line, f"line {line_number}: malformed header")
            continue
        if exponents is None:
            raise ValidationError("table", line, f"line {line_number}: row before header")
        if len(tokens) != len(exponents) + 1:
            raise ValidationError(
                "table", line,
                f"line {line_number}: expected {len(exponents)} cells, found {len(tokens) - 1}",
            )
        kind = ActivationKind.parse(tokens[0])
        row: Dict[int, Optional[float]] = {}
        for n, cell in zip(exponents, tokens[1:]):
            cell = cell.rstrip(MIN_MARK)
            row[n] = None if cell == ABSENT else float(cell)
        means[kind] = row

    if exponents is None or not means:
        raise NoDataError("table text")
    return TimingTable(name, platform, tuple(exponents), means)


# Writers ------------------------------------------------------------------

@handle_errors(error_mapping=FILE_ERROR_MAPPING)
def write_curve_csv(curve: Mapping[ActivationKind, List[CurvePoint]], path: Union[str, Path]) -> Path:
    path = Path(path)
    curve_to_frame(curve).to_csv(path, index=False)
    return path


@handle_errors(error_mapping=FILE_ERROR_MAPPING)
def write_spread_csv(summaries: Iterable[SpreadSummary], path: Union[str, Path]) -> Path:
    path = Path(path)
    pd.DataFrame([s.to_dict() for s in summaries], columns=SPREAD_COLUMNS).to_csv(path, index=False)
    return path


@handle_errors(error_mapping=FILE_ERROR_MAPPING)
def write_relative_csv(summaries: Iterable[IdentityRelativeSummary], path: Union[str, Path]) -> Path:
    path = Path(path)
    pd.DataFrame([s.to_dict() for s in summaries], columns=RELATIVE_COLUMNS).to_csv(
        path, index=False
    )
    return path
