import math

import pytest

from primsel.cost import (
    INFINITE,
    MAX_COST_NS,
    from_us,
    fmt_us,
    is_finite,
    to_us,
    validate_cost,
)


def test_finite_costs_are_plain_ints():
    assert validate_cost(0) == 0
    assert validate_cost(123456789) == 123456789
    assert validate_cost(INFINITE) == INFINITE


@pytest.mark.parametrize("bad", [-1, 1.5, True, "3", None, MAX_COST_NS + 1])
def test_validate_cost_rejects(bad):
    with pytest.raises(ValueError):
        validate_cost(bad)


def test_saturating_arithmetic_via_plain_operators():
    assert 3 + INFINITE == INFINITE
    assert INFINITE + INFINITE == INFINITE
    assert min(5, INFINITE) == 5
    assert 5 < INFINITE
    assert not is_finite(INFINITE)
    assert is_finite(10**14)


def test_us_round_trip_is_exact():
    for ns in [0, 1, 999, 1000, 123456, 10**12, MAX_COST_NS]:
        assert from_us(to_us(ns)) == ns
    assert from_us("inf") == INFINITE
    assert to_us(INFINITE) == "inf"
    assert from_us(math.inf) == INFINITE


def test_us_parsing_rounds_to_nearest_ns():
    assert from_us(1.2345678) == 1235
    assert from_us(0.0004) == 0
    assert from_us(0.0006) == 1


@pytest.mark.parametrize("bad", [-1, -0.5, float("nan"), "fast", None, True])
def test_from_us_rejects(bad):
    with pytest.raises(ValueError):
        from_us(bad)


def test_fmt_us():
    assert fmt_us(1234567) == "1234.567"
    assert fmt_us(INFINITE) == "inf"
    assert fmt_us(0) == "0.000"
