"""
Parser for small x86-style assembly listings.

Format::

    ; comment
    relu: push eax
          rol eax, 1
          ret

A ``label:`` prefix starts a new routine; it may share its line with the
first instruction. Everything after ``;`` is ignored. One file may hold
several routines (for example ``tanh`` and the ``exp`` it calls).
"""

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Tuple, Union

from ..utils.error_handling import FILE_ERROR_MAPPING, ListingParseError, handle_errors


class CostClass(str, Enum):
    ONE_MICRO_OP = "one_micro_op"
    HEAVY = "heavy"
    TABLE_LOOKUP = "table_lookup"


# Instructions decoding to a single micro-op
ONE_MICRO_OP_MNEMONICS = frozenset(
    {"xor", "and", "pop", "imul", "fld", "fchs", "fsubr", "fadd", "fdiv"}
)
# Instructions decoding to more than ten micro-ops
HEAVY_MNEMONICS = frozenset({"fscale", "fprem", "f2xm1"})

_LABEL_RE = re.compile(r"^\s*([A-Za-z_.$][\w.$]*)\s*:(.*)$")
_MNEMONIC_RE = re.compile(r"^[A-Za-z][A-Za-z0-9]*$")
_OPERAND_RE = re.compile(r"\[[^\]]*\]|[^\s,]+")


def classify(mnemonic: str) -> CostClass:
    if mnemonic in ONE_MICRO_OP_MNEMONICS:
        return CostClass.ONE_MICRO_OP
    if mnemonic in HEAVY_MNEMONICS:
        return CostClass.HEAVY
    return CostClass.TABLE_LOOKUP


@dataclass(frozen=True)
class Instruction:
    mnemonic: str
    operands: Tuple[str, ...] = ()
    cost_class: CostClass = CostClass.TABLE_LOOKUP
    line_number: int = 0

    @property
    def call_target(self) -> str:
        return self.operands[0] if self.mnemonic == "call" and self.operands else ""


@dataclass
class Listing:
    """A labelled routine: its instructions in source order."""

    label: str
    instructions: List[Instruction] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.instructions)

    def __add__(self, other: "Listing") -> "Listing":
        return Listing(f"{self.label}+{other.label}", self.instructions + other.instructions)

    def mnemonics(self) -> List[str]:
        return [i.mnemonic for i in self.instructions]

    def call_targets(self) -> List[str]:
        return [i.call_target for i in self.instructions if i.call_target]


def parse_instruction(text: str, line_number: int, source: str = "<text>") -> Instruction:
    tokens = text.split(None, 1)
    if not tokens or not _MNEMONIC_RE.match(tokens[0]):
        raise ListingParseError(line_number, text, "missing or invalid mnemonic", source)
    mnemonic = tokens[0].lower()
    operands = tuple(_OPERAND_RE.findall(tokens[1])) if len(tokens) > 1 else ()
    return Instruction(mnemonic, operands, classify(mnemonic), line_number)


def parse_listings(text: str, source: str = "<text>") -> Dict[str, Listing]:
    """Every labelled routine in ``text``, in order of appearance."""
    listings: Dict[str, Listing] = {}
    label_lines: Dict[str, Tuple[int, str]] = {}
    current = None

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].rstrip()
        if not line.strip():
            continue

        match = _LABEL_RE.match(line)
        if match:
            label, rest = match.group(1), match.group(2).strip()
            if label in listings:
                raise ListingParseError(line_number, raw, f"duplicate label '{label}'", source)
            current = Listing(label)
            listings[label] = current
            label_lines[label] = (line_number, raw)
            if rest:
                current.instructions.append(parse_instruction(rest, line_number, source))
            continue

        if current is None:
            raise ListingParseError(line_number, raw, "instruction before any label", source)
        current.instructions.append(parse_instruction(line.strip(), line_number, source))

    if not listings:
        raise ListingParseError(1, text[:40], "no labelled listing found", source)
    for label, listing in listings.items():
        if not listing.instructions:
            line_number, raw = label_lines[label]
            raise ListingParseError(line_number, raw, f"empty body after label '{label}'", source)
    return listings


def parse_listing(text: str, source: str = "<text>") -> Listing:
    """The first routine in ``text``."""
    return next(iter(parse_listings(text, source).values()))


@handle_errors(error_mapping=FILE_ERROR_MAPPING)
def load_listings(path: Union[str, Path]) -> Dict[str, Listing]:
    path = Path(path)
    return parse_listings(path.read_text(encoding="utf-8"), source=str(path))
