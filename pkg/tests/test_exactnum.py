"""Scalar tower: canonical forms, oracle agreement, cap guards."""

from __future__ import annotations

from fractions import Fraction

import pytest
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from hypodense.errors import ConfigError, ExponentCapError
from hypodense.exactnum import (
    DEFAULT_EXPONENT_CAP,
    DyadicScalar,
    PowerOfTwo,
    exact,
    exponent_cap,
    format_dyadic,
    format_exact,
    parse_dyadic,
    parse_exact,
    pow2_leq,
    set_exponent_cap,
)

mantissas = st.integers(min_value=-(2**48), max_value=2**48)
exponents = st.integers(min_value=-64, max_value=64)
dyadics = st.builds(DyadicScalar, mantissas, exponents)


def _as_fraction(d: DyadicScalar) -> Fraction:
    return Fraction(d.mantissa) * Fraction(2) ** d.exponent


def test_canonical_form_examples():
    assert (DyadicScalar(12, 0).mantissa, DyadicScalar(12, 0).exponent) == (3, 2)
    assert (DyadicScalar(-8, -5).mantissa, DyadicScalar(-8, -5).exponent) == (-1, -2)
    assert (DyadicScalar(0, 17).mantissa, DyadicScalar(0, 17).exponent) == (0, 0)


@given(dyadics)
def test_canonical_form_idempotent(d):
    again = DyadicScalar(d.mantissa, d.exponent)
    assert (again.mantissa, again.exponent) == (d.mantissa, d.exponent)
    assert d.mantissa == 0 or d.mantissa % 2 == 1 or d.mantissa % 2 == -1


def test_dyadic_mul_example():
    # (1 * 2^1) * (1 * 2^-3) = 1 * 2^-2
    prod = DyadicScalar(1, 1) * DyadicScalar(1, -3)
    assert (prod.mantissa, prod.exponent) == (1, -2)


@given(dyadics, dyadics)
def test_ring_ops_agree_with_rational_oracle(a, b):
    assert _as_fraction(a + b) == _as_fraction(a) + _as_fraction(b)
    assert _as_fraction(a - b) == _as_fraction(a) - _as_fraction(b)
    assert _as_fraction(a * b) == _as_fraction(a) * _as_fraction(b)
    assert _as_fraction(-a) == -_as_fraction(a)
    assert _as_fraction(abs(a)) == abs(_as_fraction(a))


@given(dyadics, dyadics)
def test_comparisons_agree_with_rational_oracle(a, b):
    fa, fb = _as_fraction(a), _as_fraction(b)
    assert (a == b) == (fa == fb)
    assert (a < b) == (fa < fb)
    assert (a <= b) == (fa <= fb)


@given(dyadics)
def test_mixed_arithmetic_lands_in_exact(d):
    q = mpq(1, 3)
    assert d + q == _as_fraction(d) + Fraction(1, 3)
    assert q * d == _as_fraction(d) / 3
    assert isinstance(d + q, mpq)


def test_int_interop():
    assert DyadicScalar(3, -1) + 1 == mpq(5, 2)
    assert 2 * DyadicScalar(3, -1) == DyadicScalar(3, 0)
    assert DyadicScalar(1, 2) == 4
    assert 1 - DyadicScalar(1, -1) == DyadicScalar(1, -1)


def test_floats_are_rejected():
    with pytest.raises(TypeError):
        DyadicScalar(1.5)
    with pytest.raises(TypeError):
        DyadicScalar(1, 0) + 0.5
    with pytest.raises(TypeError):
        DyadicScalar(1, 0) * 0.5
    with pytest.raises(TypeError):
        exact(0.25)


@given(dyadics)
def test_dyadic_display_round_trip(d):
    assert parse_dyadic(format_dyadic(d)) == d


@given(st.integers(-10**9, 10**9), st.integers(1, 10**6))
def test_exact_display_round_trip(p, q):
    value = mpq(p, q)
    assert parse_exact(format_exact(value)) == value
    assert exact(format_exact(value)) == value


def test_exact_constructor_variants():
    assert exact(Fraction(3, 9)) == mpq(1, 3)
    assert exact("6/8") == mpq(3, 4)
    assert exact(DyadicScalar(3, -2)) == mpq(3, 4)
    with pytest.raises(ConfigError):
        parse_exact("1/0")
    with pytest.raises(ConfigError):
        parse_exact("x")


def test_from_rational():
    assert DyadicScalar.from_rational(mpq(3, 8)) == DyadicScalar(3, -3)
    with pytest.raises(ValueError):
        DyadicScalar.from_rational(mpq(1, 3))


def test_pow2_comparisons():
    assert pow2_leq(PowerOfTwo(-35), PowerOfTwo(-16)) is True
    assert pow2_leq(PowerOfTwo(-35), PowerOfTwo(-20).square()) is False
    assert PowerOfTwo(3) * PowerOfTwo(-5) == PowerOfTwo(-2)
    assert PowerOfTwo(7).inverse() == PowerOfTwo(-7)


def test_pow2_materialization_cap():
    huge = PowerOfTwo(DEFAULT_EXPONENT_CAP + 1)
    with pytest.raises(ExponentCapError):
        huge.materialize()
    with pytest.raises(ExponentCapError):
        PowerOfTwo(-(DEFAULT_EXPONENT_CAP + 1)).materialize()
    assert huge.materialize(cap=DEFAULT_EXPONENT_CAP + 2) == DyadicScalar(1, DEFAULT_EXPONENT_CAP + 1)
    assert PowerOfTwo(10).materialize() == DyadicScalar(1, 10)


def test_cap_override_via_setter():
    try:
        set_exponent_cap(50)
        assert exponent_cap() == 50
        with pytest.raises(ExponentCapError):
            PowerOfTwo(51).materialize()
        with pytest.raises(ExponentCapError):
            # alignment shift guard uses the same cap
            DyadicScalar(1, 0) + DyadicScalar(1, -60)
    finally:
        set_exponent_cap(None)


def test_cap_env_read(monkeypatch):
    monkeypatch.setenv("HYPODENSE_EXPONENT_CAP", "123")
    set_exponent_cap(None)
    try:
        assert exponent_cap() == 123
    finally:
        monkeypatch.delenv("HYPODENSE_EXPONENT_CAP")
        set_exponent_cap(None)
    assert exponent_cap() == DEFAULT_EXPONENT_CAP


def test_cap_env_rejects_garbage(monkeypatch):
    monkeypatch.setenv("HYPODENSE_EXPONENT_CAP", "ten")
    set_exponent_cap(None)
    try:
        with pytest.raises(ConfigError):
            exponent_cap()
    finally:
        monkeypatch.delenv("HYPODENSE_EXPONENT_CAP")
        set_exponent_cap(None)
