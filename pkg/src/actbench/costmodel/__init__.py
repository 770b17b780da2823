"""Micro-op cost model for instruction listings."""

from .listing import Instruction, Listing, parse_listing, parse_listings
from .tally import CostTable, cost_report, micro_op_total

__all__ = [
    "Instruction",
    "Listing",
    "parse_listing",
    "parse_listings",
    "CostTable",
    "cost_report",
    "micro_op_total",
]
