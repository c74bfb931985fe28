"""Exact rational interval arithmetic.

Every quantity the workbench certifies is carried as an enclosure: a pair of
rationals [lo, hi] guaranteed to contain the exact real value.  All rounding
is outward, so enclosures may only widen under arithmetic, never silently
shrink past the true value.  Powers and roots with rational exponents are
computed through integer nth roots (gmpy2), which keeps everything exact and
reproducible: the same inputs always yield the same enclosure.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import gmpy2

RationalLike = Union[Fraction, int]


class DomainError(ValueError):
    """Raised when an operation is asked for outside its mathematical domain."""


def _iroot(n: int, b: int) -> tuple[int, bool]:
    """Floor of the b-th root of n >= 0, plus exactness flag."""
    if n < 0:
        raise DomainError("integer root of a negative number")
    if b < 1:
        raise DomainError("root index must be positive")
    root, exact = gmpy2.iroot(n, b)
    return int(root), bool(exact)


def dyadic_floor(q: Fraction, bits: int) -> Fraction:
    """Largest multiple of 2^-bits that is <= q."""
    scale = 1 << bits
    return Fraction((q.numerator * scale) // q.denominator, scale)


def dyadic_ceil(q: Fraction, bits: int) -> Fraction:
    return -dyadic_floor(-q, bits)


@dataclass(frozen=True)
class Enclosure:
    """Closed rational interval [lo, hi] containing an exact real value."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise DomainError(f"empty enclosure [{self.lo}, {self.hi}]")

    @staticmethod
    def point(q: RationalLike) -> "Enclosure":
        q = Fraction(q)
        return Enclosure(q, q)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, q: RationalLike) -> bool:
        return self.lo <= q <= self.hi

    def contains_enclosure(self, other: "Enclosure") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def overlaps(self, other: "Enclosure") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def __add__(self, other: "Enclosure") -> "Enclosure":
        return Enclosure(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other: "Enclosure") -> "Enclosure":
        return Enclosure(self.lo - other.hi, self.hi - other.lo)

    def __neg__(self) -> "Enclosure":
        return Enclosure(-self.hi, -self.lo)

    def scale(self, c: RationalLike) -> "Enclosure":
        c = Fraction(c)
        if c >= 0:
            return Enclosure(self.lo * c, self.hi * c)
        return Enclosure(self.hi * c, self.lo * c)

    def shift(self, c: RationalLike) -> "Enclosure":
        c = Fraction(c)
        return Enclosure(self.lo + c, self.hi + c)

    def abs(self) -> "Enclosure":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Enclosure(Fraction(0), max(-self.lo, self.hi))

    def square(self) -> "Enclosure":
        # exact: endpoints are rational
        a = self.abs()
        return Enclosure(a.lo * a.lo, a.hi * a.hi)

    def hull(self, other: "Enclosure") -> "Enclosure":
        return Enclosure(min(self.lo, other.lo), max(self.hi, other.hi))

    def outward(self, bits: int) -> "Enclosure":
        """Round endpoints outward onto the 2^-bits grid (keeps fractions small)."""
        return Enclosure(dyadic_floor(self.lo, bits), dyadic_ceil(self.hi, bits))

    def strictly_below(self, other: "Enclosure") -> bool:
        """Certifies the enclosed value of self < that of other."""
        return self.hi < other.lo

    def separated_from(self, other: "Enclosure") -> bool:
        return self.hi < other.lo or other.hi < self.lo


ZERO = Enclosure.point(0)
ONE = Enclosure.point(1)


def enclosure_sum(parts: list[Enclosure]) -> Enclosure:
    lo = Fraction(0)
    hi = Fraction(0)
    for part in parts:
        lo += part.lo
        hi += part.hi
    return Enclosure(lo, hi)


def root_enclosure(y: Fraction, b: int, k: int) -> Enclosure:
    """Enclosure of y^(1/b) for y >= 0 with width <= 2^-k.

    Exact dyadic roots collapse to point enclosures, which downstream
    membership tests rely on to settle boundary cases.
    """
    if y < 0:
        raise DomainError("even root of a negative rational")
    if y == 0:
        return ZERO
    if b == 1:
        return Enclosure.point(y)
    m = k + 1
    shifted = y.numerator << (b * m)
    n, rem = divmod(shifted, y.denominator)
    t, exact = _iroot(n, b)
    scale = Fraction(1, 1 << m)
    if exact and rem == 0:
        return Enclosure.point(t * scale)
    return Enclosure(t * scale, (t + 2) * scale)


def _exponent_unwieldy(x: Fraction, r: Fraction) -> bool:
    """True when x**r.numerator would produce an impractically large integer."""
    xbits = x.numerator.bit_length() + x.denominator.bit_length()
    return abs(r.numerator) * xbits > 2_000_000 or r.denominator > 1 << 20


def pow_exact(x: Fraction, r: Fraction) -> Optional[Fraction]:
    """x^r as an exact rational, or None when no exact value was certified.

    None means either the value is irrational or the exponent is too
    unwieldy to settle exactly; callers must treat None conservatively.
    """
    if x < 0:
        raise DomainError("pow_exact expects a nonnegative base")
    if r == 0:
        return Fraction(1)
    if x == 0:
        if r < 0:
            raise DomainError("0 to a negative power")
        return Fraction(0)
    if x == 1:
        return Fraction(1)
    if _exponent_unwieldy(x, r):
        return None
    a, b = r.numerator, r.denominator
    neg = a < 0
    a = abs(a)
    y = x ** a
    rn, exact_n = _iroot(y.numerator, b)
    if not exact_n:
        return None
    rd, exact_d = _iroot(y.denominator, b)
    if not exact_d:
        return None
    val = Fraction(rn, rd)
    return 1 / val if neg else val


def pow_enclosure(x: Fraction, r: Fraction, k: int) -> Enclosure:
    """Enclosure of x^r (x >= 0 rational, r rational) with width <= 2^-k."""
    if x < 0:
        raise DomainError("pow_enclosure expects a nonnegative base")
    if r == 0:
        return ONE
    if x == 0:
        if r < 0:
            raise DomainError("0 to a negative power")
        return ZERO
    if x == 1:
        return ONE
    if r < 0:
        # invert an enclosure of x^(-r), refining until the reciprocal is tight
        inner_k = k
        while True:
            pos = pow_enclosure(x, -r, inner_k)
            if pos.lo > 0:
                inv = Enclosure(1 / pos.hi, 1 / pos.lo)
                if inv.width <= Fraction(1, 1 << k):
                    return inv
            inner_k += max(8, inner_k)
    if _exponent_unwieldy(x, r):
        # bracket an awkward exponent by nearby dyadics instead of exact roots
        t = k + 8
        while True:
            lo_e, hi_e = dyadic_floor(r, t), dyadic_ceil(r, t)
            if x > 1:
                out = Enclosure(_pow_dyadic(x, lo_e, k + 2).lo,
                                _pow_dyadic(x, hi_e, k + 2).hi)
            else:
                out = Enclosure(_pow_dyadic(x, hi_e, k + 2).lo,
                                _pow_dyadic(x, lo_e, k + 2).hi)
            if out.width <= Fraction(1, 1 << k):
                return out
            t *= 2
    a, b = r.numerator, r.denominator
    y = x ** a
    return root_enclosure(y, b, k)


def pow_enclosure_interval(base: Enclosure, r: Fraction, k: int) -> Enclosure:
    """Enclosure of t^r over t in a nonnegative base enclosure."""
    if base.lo < 0:
        raise DomainError("interval power expects a nonnegative base enclosure")
    if r == 0:
        return ONE
    lo_side = pow_enclosure(base.lo, r, k + 1)
    hi_side = pow_enclosure(base.hi, r, k + 1)
    if r > 0:
        return Enclosure(lo_side.lo, hi_side.hi)
    return Enclosure(hi_side.lo, lo_side.hi)


def _interval_sqrt(e: Enclosure, k: int) -> Enclosure:
    lo = root_enclosure(e.lo, 2, k).lo if e.lo > 0 else Fraction(0)
    hi = root_enclosure(e.hi, 2, k).hi
    return Enclosure(lo, hi)


def _pow_dyadic(x: Fraction, e: Fraction, k: int) -> Enclosure:
    """Enclosure of x^e for x > 0 and e with a power-of-two denominator.

    The fractional exponent part is assembled from an iterated square-root
    chain, one factor per set bit, so exponent denominators never enter
    integer root extraction.
    """
    n = e.numerator // e.denominator
    frac = e - n
    base = x ** n
    if frac == 0:
        return Enclosure.point(base)
    depth = frac.denominator.bit_length() - 1
    bits = frac.numerator  # < 2^depth by construction
    prec = k + 2 * depth + 8
    target = Fraction(1, 1 << k)
    while True:
        chain = []
        cur = Enclosure.point(x)
        for _ in range(depth):
            cur = _interval_sqrt(cur, prec)
            chain.append(cur)
        acc = Enclosure.point(Fraction(1))
        for j in range(depth):
            if (bits >> j) & 1:
                factor = chain[depth - 1 - j]
                acc = Enclosure(acc.lo * factor.lo, acc.hi * factor.hi).outward(prec)
        out = Enclosure(acc.lo * base, acc.hi * base)
        if out.width <= target:
            return out
        prec *= 2


def pow_enclosure_real_exp(x: Fraction, r: Enclosure, k: int) -> Enclosure:
    """Enclosure of x^rho where rho is only known to lie in the enclosure r.

    Monotone in the exponent for fixed x, so dyadic roundings of the endpoint
    exponents bracket the true value.  The width cannot drop below the spread
    x^r.hi - x^r.lo, so the caller refines r when the result stays too wide.
    """
    if x < 0:
        raise DomainError("nonnegative base required")
    if x == 0:
        if r.lo <= 0:
            raise DomainError("0 to a nonpositive power")
        return ZERO
    if x == 1:
        return ONE
    t = k + 8
    best: Optional[Enclosure] = None
    for _ in range(8):
        lo_e, hi_e = dyadic_floor(r.lo, t), dyadic_ceil(r.hi, t)
        if x > 1:
            out = Enclosure(_pow_dyadic(x, lo_e, k + 2).lo,
                            _pow_dyadic(x, hi_e, k + 2).hi)
        else:
            out = Enclosure(_pow_dyadic(x, hi_e, k + 2).lo,
                            _pow_dyadic(x, lo_e, k + 2).hi)
        if out.width <= Fraction(1, 1 << k):
            return out
        if best is not None and out.width > best.width * Fraction(9, 10):
            return out
        best = out
        t *= 2
    return best
