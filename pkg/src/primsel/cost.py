"""Saturating cost arithmetic over integer nanoseconds.

Finite costs are plain ``int`` nanoseconds; the single infinite value is
``math.inf``.  Ordinary ``+``, ``min`` and comparisons already give the
saturating semantics exactly (int arithmetic never rounds, and any sum
touching ``math.inf`` is ``math.inf``), so this module only supplies the
microsecond file-boundary conversions and a few helpers.
"""

from __future__ import annotations

import math

Cost = int | float  # int nanoseconds, or INFINITE

INFINITE: float = math.inf

NS_PER_US = 1000

# Generous cap so that any realistic sum of costs stays exactly
# representable in float64 (used by the enumeration fast path).
MAX_COST_NS = 10**15


def is_finite(cost: Cost) -> bool:
    return cost != INFINITE


def validate_cost(cost: Cost) -> Cost:
    """Reject values outside the extended nonnegative-nanosecond domain."""
    if cost == INFINITE:
        return cost
    if isinstance(cost, bool) or not isinstance(cost, int):
        raise ValueError(f"finite costs must be int nanoseconds, got {cost!r}")
    if cost < 0:
        raise ValueError(f"costs must be nonnegative, got {cost!r}")
    if cost > MAX_COST_NS:
        raise ValueError(f"cost {cost} ns exceeds the supported maximum {MAX_COST_NS}")
    return cost


def from_us(value) -> Cost:
    """Parse a microsecond value from a file (the string "inf" marks unreachable)."""
    if value == "inf":
        return INFINITE
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"expected a number of microseconds or 'inf', got {value!r}")
    if math.isinf(value):
        return INFINITE
    if math.isnan(value) or value < 0:
        raise ValueError(f"cost in microseconds must be nonnegative, got {value!r}")
    return validate_cost(round(value * NS_PER_US))


def to_us(cost: Cost):
    """Inverse of :func:`from_us`: float microseconds, or the string "inf"."""
    if cost == INFINITE:
        return "inf"
    return cost / NS_PER_US


def fmt_us(cost: Cost) -> str:
    if cost == INFINITE:
        return "inf"
    return f"{cost / NS_PER_US:.3f}"
