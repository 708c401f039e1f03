"""Arbitrary-precision rational scalars.

Every numeric value in this library is an exact rational: a reduced
fraction p/q with q > 0 held in arbitrary precision.  ``gmpy2`` provides
that type (``mpq``) with fast arithmetic; when it is unavailable we fall
back to :class:`fractions.Fraction`, which obeys the same invariants.
All construction should go through :func:`scalar` so the two backends
never mix inside one computation.
"""

from __future__ import annotations

from typing import Union

try:
    from gmpy2 import mpq as _mpq, mpz as _mpz, isqrt as _isqrt, iroot as _iroot

    ExactScalar = type(_mpq(0))
    ExactInt = type(_mpz(0))

    def scalar(value: Union[int, str, "ExactScalar"], den: int | None = None):
        """Build an exact rational from an int, a ``p/q`` string, or a pair."""
        if den is not None:
            return _mpq(value, den)
        return _mpq(value)

    def integer(value) -> "ExactInt":
        return _mpz(value)

    def isqrt_floor(value) -> "ExactInt":
        return _isqrt(value)

    def iroot_floor(value, k: int):
        """Floor of the k-th root of a nonnegative integer, plus exactness."""
        root, exact = _iroot(_mpz(value), k)
        return root, bool(exact)

    def numerator(x) -> int:
        return int(x.numerator)

    def denominator(x) -> int:
        return int(x.denominator)

    _BACKEND = "gmpy2"

except ImportError:  # pragma: no cover - exercised only without gmpy2
    import math
    from fractions import Fraction

    ExactScalar = Fraction
    ExactInt = int

    def scalar(value, den=None):
        if den is not None:
            return Fraction(value, den)
        if isinstance(value, str):
            return Fraction(value)
        return Fraction(value)

    def integer(value):
        return int(value)

    def isqrt_floor(value):
        return math.isqrt(int(value))

    def iroot_floor(value, k):
        v = int(value)
        if v < 0:
            raise ValueError("negative radicand")
        if v == 0:
            return 0, True
        r = int(round(v ** (1.0 / k)))
        while r > 0 and r**k > v:
            r -= 1
        while (r + 1) ** k <= v:
            r += 1
        return r, r**k == v

    def numerator(x):
        return x.numerator

    def denominator(x):
        return x.denominator

    _BACKEND = "fractions"


ZERO = scalar(0)
ONE = scalar(1)

Rationalish = Union[int, str, ExactScalar]


def as_scalar(value: Rationalish) -> ExactScalar:
    """Coerce ints, ``p/q`` strings, and exact scalars to :data:`ExactScalar`."""
    if isinstance(value, ExactScalar):
        return value
    return scalar(value)


def parse_scalar(token: str) -> ExactScalar:
    """Parse an integer literal or a ``p/q`` fraction literal."""
    token = token.strip()
    if "/" in token:
        num, _, den = token.partition("/")
        d = int(den)
        if d == 0:
            raise ZeroDivisionError(f"zero denominator in {token!r}")
        return scalar(int(num), d)
    return scalar(int(token))


def format_scalar(x: ExactScalar) -> str:
    """Render as an integer literal when possible, else ``p/q``."""
    if denominator(x) == 1:
        return str(numerator(x))
    return f"{numerator(x)}/{denominator(x)}"


def isqrt_ceil(value) -> int:
    """Smallest integer whose square is at least ``value`` (>= 0)."""
    v = int(value)
    r = int(isqrt_floor(v))
    if r * r < v:
        r += 1
    return r


def backend_name() -> str:
    return _BACKEND
