"""
Shipped reference data: published timing tables and instruction listings.

Tables are CSV with the schema ``function,n,mean_s``; an empty ``mean_s``
means the measurement is absent.
"""

from typing import Dict, List

try:
    from importlib.resources import files
except ImportError:
    # Fallback for Python < 3.9
    from importlib_resources import files  # type: ignore[no-redef]

from ..utils.error_handling import ValidationError

FIXTURE_TABLES: Dict[str, Dict[str, str]] = {
    "table1": {"platform": "GTX 1080 Ti", "category": "consumer GPU", "device": "gpu"},
    "table2": {"platform": "Tesla P100", "category": "datacentre GPU", "device": "gpu"},
    "table3": {
        "platform": "MacBook Pro 2017 / i5-7360U",
        "category": "consumer CPU",
        "device": "cpu",
    },
    "table4": {"platform": "Xeon E5-2660", "category": "datacentre CPU", "device": "cpu"},
}

SHIPPED_LISTINGS = ("relu", "tanh")


def fixture_names() -> List[str]:
    return sorted(FIXTURE_TABLES)


def read_fixture_table(name: str) -> str:
    """CSV text of a shipped timing table."""
    key = name.strip().lower()
    if key not in FIXTURE_TABLES:
        raise ValidationError(
            "fixture", name, f"Unknown fixture '{name}'. Valid fixtures: {', '.join(fixture_names())}"
        )
    return (files(__name__) / f"{key}.csv").read_text(encoding="utf-8")


def read_listing(name: str) -> str:
    """Text of a shipped instruction listing (``relu`` or ``tanh``)."""
    key = name.strip().lower()
    if key.endswith(".lst"):
        key = key[:-4]
    if key not in SHIPPED_LISTINGS:
        raise ValidationError(
            "listing", name, f"Unknown listing '{name}'. Shipped listings: {', '.join(SHIPPED_LISTINGS)}"
        )
    return (files(__name__) / "listings" / f"{key}.lst").read_text(encoding="utf-8")
