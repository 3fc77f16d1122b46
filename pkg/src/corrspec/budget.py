"""Cost guards for the enumeration and summation cores.

Exhaustive oracles (trace moments, sentence enumeration, covariance sums)
have costs that explode combinatorially; each estimates its work in
projected multiply-adds and refuses to start past a budget.  The default
budget is 10^9 multiply-adds and can be overridden with the
``CORRSPEC_BUDGET`` environment variable.
"""

from __future__ import annotations

import os

DEFAULT_BUDGET = 10**9

__all__ = ["BudgetError", "ConfigError", "current_budget", "check_budget"]


class BudgetError(RuntimeError):
    """Projected cost exceeds the enumeration budget."""


class ConfigError(ValueError):
    """Invalid specification or experiment configuration."""


def current_budget() -> int:
    raw = os.environ.get("CORRSPEC_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"CORRSPEC_BUDGET must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise ConfigError(f"CORRSPEC_BUDGET must be positive, got {value}")
    return value


def check_budget(cost: float, what: str) -> None:
    """Raise BudgetError with the projected cost if it exceeds the budget."""
    budget = current_budget()
    if cost > budget:
        raise BudgetError(
            f"{what}: projected cost {cost:.3g} multiply-adds exceeds budget {budget:.3g} "
            f"(override with CORRSPEC_BUDGET)"
        )
