"""
Argument validation utilities.

Validators return a list of issues; ``require_valid`` turns a non-empty list
into a ValidationError.
"""

from typing import Any, List

from .error_handling import ValidationError

MAX_SIZE_EXPONENT = 8


def validate_exponent(n: Any) -> List[str]:
    """Validate a workload size exponent (instances = 10**n)."""
    issues = []
    if isinstance(n, bool) or not isinstance(n, int):
        try:
            if int(n) != n:
                raise ValueError
        except (TypeError, ValueError):
            return [f"size exponent must be an integer, got {n!r}"]
    if not 0 <= int(n) <= MAX_SIZE_EXPONENT:
        issues.append(f"size exponent must lie in [0, {MAX_SIZE_EXPONENT}], got {n}")
    return issues


def validate_network_config(config: Any) -> List[str]:
    """Validate the dimensions of a network configuration."""
    issues = []

    for name in ("input_dim", "hidden_width", "output_dim"):
        value = getattr(config, name, None)
        if not isinstance(value, int) or value < 1:
            issues.append(f"{name} must be a positive integer, got {value!r}")

    hidden_layers = getattr(config, "hidden_layers", None)
    if not isinstance(hidden_layers, int) or hidden_layers < 0:
        issues.append(f"hidden_layers must be a non-negative integer, got {hidden_layers!r}")

    seed = getattr(config, "seed", None)
    if not isinstance(seed, int) or seed < 0:
        issues.append(f"seed must be a non-negative integer, got {seed!r}")

    return issues


def validate_bench_plan(plan: Any) -> List[str]:
    """Validate a benchmark plan."""
    issues = []

    if not plan.functions:
        issues.append("plan needs at least one function")
    if not plan.exponents:
        issues.append("plan needs at least one size exponent")
    for n in plan.exponents:
        issues.extend(validate_exponent(n))

    if not isinstance(plan.runs, int) or plan.runs < 1:
        issues.append(f"runs must be >= 1, got {plan.runs!r}")
    if not plan.time_budget_seconds > 0:
        issues.append(f"time budget must be > 0, got {plan.time_budget_seconds!r}")
    if not isinstance(plan.pretrain_epochs, int) or plan.pretrain_epochs < 0:
        issues.append(f"pretrain_epochs must be >= 0, got {plan.pretrain_epochs!r}")
    if plan.batch_size is not None and (not isinstance(plan.batch_size, int) or plan.batch_size < 1):
        issues.append(f"batch_size must be a positive integer, got {plan.batch_size!r}")

    return issues


def require_valid(issues: List[str], field: str, value: Any) -> None:
    """Raise a ValidationError listing every issue, if there are any."""
    if issues:
        raise ValidationError(field, value, "; ".join(issues))
