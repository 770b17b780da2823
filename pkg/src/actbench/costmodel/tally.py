"""
Micro-op cost tables and per-listing totals.
"""

from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import pandas as pd

from ..utils.error_handling import (
    FILE_ERROR_MAPPING,
    CycleDetectedError,
    MissingSymbolError,
    UnknownMnemonicError,
    ValidationError,
    handle_errors,
)
from .listing import HEAVY_MNEMONICS, ONE_MICRO_OP_MNEMONICS, Listing

HEAVY_COST = 15

DEFAULT_COSTS: Dict[str, int] = {
    **{mnemonic: 1 for mnemonic in ONE_MICRO_OP_MNEMONICS},
    # small fixed values for the remaining instructions of the shipped listings
    "push": 1,
    "rol": 1,
    "ret": 1,
    "fst": 1,
    "fxch": 1,
    "fld1": 1,
    "fmulp": 1,
    "faddp": 1,
    "fldl2e": 2,
    "call": 2,
    **{mnemonic: HEAVY_COST for mnemonic in HEAVY_MNEMONICS},
}


@dataclass(frozen=True)
class CostTable:
    """Micro-ops per mnemonic."""

    costs: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_COSTS))

    def __post_init__(self):
        normalised = {}
        for mnemonic, count in self.costs.items():
            if isinstance(count, bool) or int(count) != count or count < 1:
                raise ValidationError(
                    "cost", count, f"cost for '{mnemonic}' must be a positive integer"
                )
            normalised[str(mnemonic).strip().lower()] = int(count)
        object.__setattr__(self, "costs", normalised)

    @classmethod
    def default(cls) -> "CostTable":
        return cls(dict(DEFAULT_COSTS))

    @classmethod
    def uniform(cls, value: int = 1, mnemonics: Optional[Iterable[str]] = None) -> "CostTable":
        names = DEFAULT_COSTS if mnemonics is None else mnemonics
        return cls({m: value for m in names})

    @classmethod
    @handle_errors(error_mapping=FILE_ERROR_MAPPING)
    def from_csv(cls, path: Union[str, Path], base: Optional["CostTable"] = None) -> "CostTable":
        """Overrides from a ``mnemonic,count`` CSV merged over ``base`` (the default table)."""
        frame = pd.read_csv(path, comment="#", skipinitialspace=True)
        missing = [c for c in ("mnemonic", "count") if c not in frame.columns]
        if missing:
            raise ValidationError("cost_table", str(path),
                                  f"{path}: missing column(s) {', '.join(missing)}")
        overrides = {str(m): int(c) for m, c in zip(frame["mnemonic"], frame["count"])}
        return (base or cls.default()).merged(overrides)

    def merged(self, overrides: Mapping[str, int]) -> "CostTable":
        return CostTable({**self.costs, **overrides})

    def cost_of(self, mnemonic: str) -> int:
        try:
            return self.costs[mnemonic]
        except KeyError:
            raise UnknownMnemonicError(mnemonic) from None


def micro_op_total(
    listing: Listing,
    table: Optional[CostTable] = None,
    follow_calls: Optional[Mapping[str, Listing]] = None,
) -> int:
    """
    Sum of per-instruction costs. A ``call`` costs its own table entry plus
    the callee's total, once per call site.
    """
    table = table or CostTable.default()
    follow_calls = follow_calls or {}
    memo: Dict[str, int] = {}

    def total(current: Listing, stack: Tuple[str, ...]) -> int:
        if current.label in memo:
            return memo[current.label]
        count = 0
        for instruction in current.instructions:
            count += table.cost_of(instruction.mnemonic)
            target = instruction.call_target
            if not target:
                continue
            if target in stack or target == current.label:
                raise CycleDetectedError(list(stack) + [current.label, target])
            if target not in follow_calls:
                raise MissingSymbolError(target, current.label)
            count += total(follow_calls[target], stack + (current.label,))
        memo[current.label] = count
        return count

    return total(listing, ())


@dataclass
class CostReport:
    totals: Dict[str, int]
    ratios: Dict[Tuple[str, str], float]

    def to_frame(self) -> pd.DataFrame:
        rows = [{"listing": label, "total": total} for label, total in self.totals.items()]
        return pd.DataFrame(rows, columns=["listing", "total"])

    def lines(self) -> List[str]:
        out = [f"{label}: {total} micro-ops" for label, total in self.totals.items()]
        out += [f"{a} / {b}: {ratio:.2f}" for (a, b), ratio in self.ratios.items()]
        return out


def cost_report(
    listings: Mapping[str, Listing],
    table: Optional[CostTable] = None,
    follow_calls: Optional[Mapping[str, Listing]] = None,
) -> CostReport:
    """Totals of each listing, plus both ratios for every pair."""
    resolver = dict(follow_calls or {})
    for label, listing in listings.items():
        resolver.setdefault(label, listing)
    totals = {label: micro_op_total(listing, table, resolver) for label, listing in listings.items()}

    ratios: Dict[Tuple[str, str], float] = {}
    for a, b in combinations(totals, 2):
        ratios[(b, a)] = totals[b] / totals[a]
        ratios[(a, b)] = totals[a] / totals[b]
    return CostReport(totals, ratios)
