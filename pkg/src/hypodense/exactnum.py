"""Exact scalar arithmetic underpinning every quantity in the package.

Three representations cover all arithmetic that occurs:

* ``ExactScalar``, an alias for :class:`gmpy2.mpq`: arbitrary-precision
  rationals in lowest terms, the general currency for weights, densities
  and norms.  gmpy2 supplies the canonical form (gcd 1, positive
  denominator) and fast bignum arithmetic.

* :class:`DyadicScalar`: numbers ``m * 2**e`` with odd (or zero) mantissa.
  The ring operations stay inside the dyadics, so every coefficient in an
  operator orbit of a basis vector remains one; mixing with a rational
  falls through to ``ExactScalar`` exactly.

* :class:`PowerOfTwo`: a bare exponent.  Several schedule quantities are
  powers of two whose exponents can be astronomically large, so they live
  in exponent space; turning one into a ``DyadicScalar`` is guarded by a
  configurable cap (``HYPODENSE_EXPONENT_CAP``, default ``10**6``).

Nothing here ever touches a float.  gmpy2 would happily promote
``mpq * float`` to an inexact ``mpfr``, which is precisely the leak the
type checks below make impossible; floats only appear in display helpers
that callers invoke at output time.
"""

from __future__ import annotations

import os
import re
from fractions import Fraction
from numbers import Rational

from gmpy2 import mpq, mpz

from .errors import ConfigError, ExponentCapError

__all__ = [
    "ExactScalar",
    "DyadicScalar",
    "PowerOfTwo",
    "exact",
    "as_exact",
    "format_exact",
    "parse_exact",
    "format_dyadic",
    "parse_dyadic",
    "pow2_leq",
    "exponent_cap",
    "set_exponent_cap",
    "DEFAULT_EXPONENT_CAP",
]

ExactScalar = mpq

DEFAULT_EXPONENT_CAP = 10**6
_CAP_ENV_VAR = "HYPODENSE_EXPONENT_CAP"
_cap: int | None = None

_INT_TYPES = (int, type(mpz(0)))


def exponent_cap() -> int:
    """Current materialization cap for power-of-two exponents."""
    global _cap
    if _cap is None:
        raw = os.environ.get(_CAP_ENV_VAR)
        if raw is None:
            _cap = DEFAULT_EXPONENT_CAP
        else:
            try:
                value = int(raw)
            except ValueError:
                raise ConfigError(f"{_CAP_ENV_VAR} must be an integer, got {raw!r}") from None
            if value <= 0:
                raise ConfigError(f"{_CAP_ENV_VAR} must be positive, got {value}")
            _cap = value
    return _cap


def set_exponent_cap(value: int | None) -> None:
    """Override the cap (``None`` re-reads the environment on next use)."""
    global _cap
    if value is not None:
        if not isinstance(value, _INT_TYPES) or value <= 0:
            raise ConfigError(f"exponent cap must be a positive integer, got {value!r}")
        value = int(value)
    _cap = value


def _reject_float(value, context: str):
    if isinstance(value, float):
        raise TypeError(f"{context}: floats are not exact; got {value!r}")


def exact(value) -> ExactScalar:
    """Build an ExactScalar from an int, string, Rational, or DyadicScalar."""
    _reject_float(value, "exact()")
    if isinstance(value, DyadicScalar):
        return value.to_exact()
    if isinstance(value, str):
        return parse_exact(value)
    if isinstance(value, (Rational, *_INT_TYPES)):
        return mpq(value)
    raise TypeError(f"cannot build an exact scalar from {type(value).__name__}")


def as_exact(value) -> ExactScalar:
    """Like :func:`exact` but tuned for scalars already in the tower."""
    if isinstance(value, mpq):
        return value
    return exact(value)


def format_exact(value) -> str:
    """Display form ``p/q`` (``p`` alone for integers); lossless."""
    q = as_exact(value)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


_EXACT_RE = re.compile(r"^\s*(-?\d+)\s*(?:/\s*(-?\d+)\s*)?$")


def parse_exact(text: str) -> ExactScalar:
    m = _EXACT_RE.match(text)
    if not m:
        raise ConfigError(f"not a rational literal: {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ConfigError(f"zero denominator in {text!r}")
    return mpq(num, den)


def _trailing_zeros(n: int) -> int:
    # n != 0; Python's & emulates two's complement, so this works for n < 0.
    return ((n & -n).bit_length() - 1) if n > 0 else ((-n & n).bit_length() - 1)


class DyadicScalar:
    """``mantissa * 2**exponent`` with mantissa odd, or the zero ``(0, 0)``.

    Closed under ``+ - *`` and negation with other dyadics and ints; any
    operation with a Rational returns an ``ExactScalar``.  Operations with
    floats raise ``TypeError``.  Instances are immutable and unhashable
    (equality crosses representations, so hashing would be a trap).
    """

    __slots__ = ("mantissa", "exponent")

    def __init__(self, mantissa, exponent=0):
        _reject_float(mantissa, "DyadicScalar")
        _reject_float(exponent, "DyadicScalar")
        if not isinstance(mantissa, _INT_TYPES) or not isinstance(exponent, _INT_TYPES):
            raise TypeError("DyadicScalar takes integer mantissa and exponent")
        m = int(mantissa)
        e = int(exponent)
        if m == 0:
            e = 0
        elif m % 2 == 0:
            shift = _trailing_zeros(m)
            m >>= shift
            e += shift
        object.__setattr__(self, "mantissa", m)
        object.__setattr__(self, "exponent", e)

    def __setattr__(self, name, value):
        raise AttributeError("DyadicScalar is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_rational(cls, value) -> "DyadicScalar":
        """Exact conversion; raises ValueError unless the denominator is a power of two."""
        q = exact(value)
        den = int(q.denominator)
        if den & (den - 1):
            raise ValueError(f"{q} is not dyadic")
        return cls(int(q.numerator), -(den.bit_length() - 1))

    @classmethod
    def zero(cls) -> "DyadicScalar":
        return cls(0, 0)

    @classmethod
    def one(cls) -> "DyadicScalar":
        return cls(1, 0)

    # -- queries -----------------------------------------------------------

    def is_zero(self) -> bool:
        return self.mantissa == 0

    def sign(self) -> int:
        return (self.mantissa > 0) - (self.mantissa < 0)

    def to_exact(self, cap: int | None = None) -> ExactScalar:
        e = self.exponent
        _check_cap(abs(e) if self.mantissa else 0, cap)
        if e >= 0:
            return mpq(self.mantissa << e)
        return mpq(self.mantissa, 1 << -e)

    # -- arithmetic --------------------------------------------------------

    def mul_pow2(self, shift: int) -> "DyadicScalar":
        """Multiply by ``2**shift`` without renormalizing."""
        if shift == 0 or self.mantissa == 0:
            return self
        out = object.__new__(DyadicScalar)
        object.__setattr__(out, "mantissa", self.mantissa)
        object.__setattr__(out, "exponent", self.exponent + shift)
        return out

    def _aligned(self, other: "DyadicScalar") -> tuple[int, int, int]:
        e = min(self.exponent, other.exponent)
        shift_a = self.exponent - e
        shift_b = other.exponent - e
        cap = exponent_cap()
        if shift_a > cap or shift_b > cap:
            raise ExponentCapError(
                f"aligning exponents {self.exponent} and {other.exponent} "
                f"needs a shift beyond the cap {cap}"
            )
        return self.mantissa << shift_a, other.mantissa << shift_b, e

    def __add__(self, other):
        if isinstance(other, DyadicScalar):
            if self.mantissa == 0:
                return other
            if other.mantissa == 0:
                return self
            a, b, e = self._aligned(other)
            return DyadicScalar(a + b, e)
        if isinstance(other, _INT_TYPES):
            return self + DyadicScalar(other)
        if isinstance(other, Rational):
            return self.to_exact() + mpq(other)
        _reject_float(other, "DyadicScalar +")
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return self.mul_pow2(0) if self.mantissa == 0 else DyadicScalar(-self.mantissa, self.exponent)

    def __sub__(self, other):
        out = self.__add__(-other if isinstance(other, DyadicScalar) else other * -1)
        return out

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, DyadicScalar):
            if self.mantissa == 0 or other.mantissa == 0:
                return DyadicScalar(0)
            # odd * odd stays odd: no renormalization needed
            out = object.__new__(DyadicScalar)
            object.__setattr__(out, "mantissa", self.mantissa * other.mantissa)
            object.__setattr__(out, "exponent", self.exponent + other.exponent)
            return out
        if isinstance(other, _INT_TYPES):
            return self * DyadicScalar(other)
        if isinstance(other, Rational):
            return self.to_exact() * mpq(other)
        _reject_float(other, "DyadicScalar *")
        return NotImplemented

    __rmul__ = __mul__

    def __abs__(self):
        return self if self.mantissa >= 0 else -self

    # -- comparisons -------------------------------------------------------

    def _cmp(self, other) -> int:
        if isinstance(other, _INT_TYPES):
            other = DyadicScalar(other)
        if isinstance(other, DyadicScalar):
            sa, sb = self.sign(), other.sign()
            if sa != sb:
                return -1 if sa < sb else 1
            if sa == 0:
                return 0
            a, b, _ = self._aligned(other)
            return (a > b) - (a < b)
        if isinstance(other, Rational):
            mine = self.to_exact()
            q = mpq(other)
            return (mine > q) - (mine < q)
        _reject_float(other, "DyadicScalar comparison")
        raise TypeError(f"cannot compare DyadicScalar with {type(other).__name__}")

    def __eq__(self, other):
        try:
            return self._cmp(other) == 0
        except TypeError:
            return NotImplemented

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    __hash__ = None

    def __bool__(self):
        return self.mantissa != 0

    def __repr__(self):
        return f"DyadicScalar({self.mantissa}, {self.exponent})"

    def __str__(self):
        return format_dyadic(self)


def format_dyadic(value: DyadicScalar) -> str:
    """Display form ``m*2^e``; lossless."""
    return f"{value.mantissa}*2^{value.exponent}"


_DYADIC_RE = re.compile(r"^\s*(-?\d+)\s*\*\s*2\^(-?\d+)\s*$")


def parse_dyadic(text: str) -> DyadicScalar:
    m = _DYADIC_RE.match(text)
    if not m:
        raise ConfigError(f"not a dyadic literal: {text!r}")
    return DyadicScalar(int(m.group(1)), int(m.group(2)))


def _check_cap(magnitude: int, cap: int | None) -> None:
    limit = exponent_cap() if cap is None else cap
    if magnitude > limit:
        raise ExponentCapError(
            f"materializing 2^(+/-{magnitude}) exceeds the exponent cap {limit}; "
            f"raise {_CAP_ENV_VAR} if this is intentional"
        )


class PowerOfTwo:
    """``2**exponent`` kept purely in exponent space.

    Comparison, multiplication, inversion and squaring act on exponents
    and never materialize the value.  :meth:`materialize` produces the
    DyadicScalar ``1 * 2**e`` and is the only crossing point; it raises
    :class:`ExponentCapError` when ``|e|`` exceeds the cap.
    """

    __slots__ = ("exponent",)

    def __init__(self, exponent):
        _reject_float(exponent, "PowerOfTwo")
        if not isinstance(exponent, _INT_TYPES):
            raise TypeError("PowerOfTwo takes an integer exponent")
        object.__setattr__(self, "exponent", int(exponent))

    def __setattr__(self, name, value):
        raise AttributeError("PowerOfTwo is immutable")

    def __mul__(self, other):
        if isinstance(other, PowerOfTwo):
            return PowerOfTwo(self.exponent + other.exponent)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, PowerOfTwo):
            return PowerOfTwo(self.exponent - other.exponent)
        return NotImplemented

    def inverse(self) -> "PowerOfTwo":
        return PowerOfTwo(-self.exponent)

    def square(self) -> "PowerOfTwo":
        return PowerOfTwo(2 * self.exponent)

    def materialize(self, cap: int | None = None) -> DyadicScalar:
        _check_cap(abs(self.exponent), cap)
        return DyadicScalar(1, self.exponent)

    def to_exact(self, cap: int | None = None) -> ExactScalar:
        return self.materialize(cap).to_exact(cap)

    def _need(self, other) -> "PowerOfTwo":
        if not isinstance(other, PowerOfTwo):
            raise TypeError(f"cannot compare PowerOfTwo with {type(other).__name__}")
        return other

    def __eq__(self, other):
        if isinstance(other, PowerOfTwo):
            return self.exponent == other.exponent
        return NotImplemented

    def __lt__(self, other):
        return self.exponent < self._need(other).exponent

    def __le__(self, other):
        return self.exponent <= self._need(other).exponent

    def __gt__(self, other):
        return self.exponent > self._need(other).exponent

    def __ge__(self, other):
        return self.exponent >= self._need(other).exponent

    def __hash__(self):
        return hash(("PowerOfTwo", self.exponent))

    def __repr__(self):
        return f"PowerOfTwo({self.exponent})"

    def __str__(self):
        return f"2^{self.exponent}"


def pow2_leq(a: PowerOfTwo, b: PowerOfTwo) -> bool:
    """Exponent-space comparison ``2**a <= 2**b``."""
    return a <= b
