"""Numberings for the objects the workbench exchanges through streams.

Everything a name stream mentions is a natural number: rational vectors,
open rational intervals, rational balls, tree nodes, finite sets of facts.
The codecs here are total in the decode direction and injective, so a code
pins down its object exactly and distinct objects never collide.  Rationals
go through their continued-fraction digits and sequences through a digit
string read in bijective base three, so codes stay polynomial in the bit
length of what they describe; dyadic endpoints like 1 + 2^-40 must remain
cheap to mention.  Cantor pairing glues two-part codes together.
"""

from __future__ import annotations

import enum
from fractions import Fraction
from functools import lru_cache
from itertools import zip_longest
from math import isqrt
from typing import Iterable, Optional, Sequence

from .enclosures import Enclosure

VectorCode = int
IntervalCode = int
BallCode = int
NodeCode = int


# ---------------------------------------------------------------------------
# pairing


def pair(i: int, j: int) -> int:
    """Cantor pairing, the default pairing throughout."""
    if i < 0 or j < 0:
        raise ValueError("pair expects naturals")
    s = i + j
    return s * (s + 1) // 2 + j


def unpair(n: int) -> tuple[int, int]:
    if n < 0:
        raise ValueError("unpair expects a natural")
    w = (isqrt(8 * n + 1) - 1) // 2
    j = n - w * (w + 1) // 2
    return w - j, j


def pair23(i: int, j: int) -> int:
    """Alternate multiplicative pairing 2^i * 3^j (partial inverse)."""
    return (2 ** i) * (3 ** j)


def unpair23(n: int) -> Optional[tuple[int, int]]:
    if n < 1:
        return None
    i = 0
    while n % 2 == 0:
        n //= 2
        i += 1
    j = 0
    while n % 3 == 0:
        n //= 3
        j += 1
    if n != 1:
        return None
    return i, j


# ---------------------------------------------------------------------------
# integers and rationals


def int_encode(z: int) -> int:
    return 2 * z - 1 if z > 0 else -2 * z


def int_decode(n: int) -> int:
    return (n + 1) // 2 if n % 2 else -(n // 2)


def posrat_encode(q: Fraction) -> int:
    """Index of a positive rational via its continued-fraction digits.

    The canonical continued fraction (final term >= 2 unless the value is
    an integer) maps bijectively onto nonempty lists of naturals, and those
    onto the positive naturals, shifted down by one.  Codes stay linear in
    the bit length of numerator and denominator.
    """
    if q <= 0:
        raise ValueError("posrat_encode expects a positive rational")
    num, den = q.numerator, q.denominator
    terms: list[int] = []
    while den:
        head, rem = divmod(num, den)
        terms.append(head)
        num, den = den, rem
    if len(terms) == 1:
        items = [terms[0] - 1]
    else:
        items = [terms[0]] + [t - 1 for t in terms[1:-1]] + [terms[-1] - 2]
    return natlist_encode(items) - 1


@lru_cache(maxsize=1 << 17)
def posrat_decode(n: int) -> Fraction:
    if n < 0:
        raise ValueError("posrat_decode expects a natural")
    items = natlist_decode(n + 1)
    if len(items) == 1:
        return Fraction(items[0] + 1)
    terms = [items[0]] + [x + 1 for x in items[1:-1]] + [items[-1] + 2]
    value = Fraction(terms[-1])
    for t in reversed(terms[:-1]):
        value = t + 1 / value
    return value


# Monitors replay the same codes across stages, so the codecs keep value
# caches.  Each is a pure bijection; equal inputs of mixed numeric type land
# on the same slot with the same answer.


@lru_cache(maxsize=1 << 17)
def rat_encode(q: Fraction) -> int:
    q = Fraction(q)
    if q == 0:
        return 0
    if q > 0:
        return 2 * posrat_encode(q) + 1
    return 2 * posrat_encode(-q) + 2


@lru_cache(maxsize=1 << 17)
def rat_decode(n: int) -> Fraction:
    if n == 0:
        return Fraction(0)
    if n % 2:
        return posrat_decode((n - 1) // 2)
    return -posrat_decode((n - 2) // 2)


# ---------------------------------------------------------------------------
# finite sequences


# Digit loops run chunkwise: one big-integer divmod peels _CHUNK bijective
# trits at a time (the all-ones offset makes the chunk step exact), keeping
# codec cost near-linear in the bit length instead of quadratic.
_CHUNK = 64
_POW3 = [3 ** k for k in range(_CHUNK + 1)]
_CHUNK_OFF = (_POW3[_CHUNK] - 1) // 2


def natlist_encode(items: Sequence[int]) -> int:
    """Code of a finite sequence of naturals.

    Entries render in bijective binary, join with a third digit, and the
    digit string reads off in bijective base three: a bijection whose codes
    are linear in the total bit length of the entries, where nested pairing
    would double per entry.
    """
    if not items:
        return 0
    trits: list[int] = []
    first = True
    for x in items:
        if x < 0:
            raise ValueError("natlist_encode expects naturals")
        if not first:
            trits.append(3)
        first = False
        trits.extend(2 if ch == "1" else 1 for ch in bin(x + 1)[3:])
    value = 0
    for i in range(0, len(trits), _CHUNK):
        block = trits[i:i + _CHUNK]
        small = 0
        for d in block:
            small = 3 * small + d
        value = value * _POW3[len(block)] + small
    return value + 1


def natlist_decode(code: int) -> list[int]:
    if code < 0:
        raise ValueError("natlist_decode expects a natural")
    if code == 0:
        return []
    digits: list[int] = []
    value = code - 1
    while value >= _CHUNK_OFF:
        value, small = divmod(value - _CHUNK_OFF, _POW3[_CHUNK])
        for _ in range(_CHUNK):
            small, digit = divmod(small, 3)
            digits.append(digit)
    while value > 0:
        value, digit = divmod(value - 1, 3)
        digits.append(digit)
    digits.reverse()
    out: list[int] = []
    acc = 1
    for digit in digits:
        if digit == 2:
            out.append(acc - 1)
            acc = 1
        else:
            acc = (acc << 1) | digit
    out.append(acc - 1)
    return out


# ---------------------------------------------------------------------------
# rational vectors

Vector = tuple[Fraction, ...]


_FR_ZERO = Fraction(0)


def strip_vector(coeffs: Iterable[Fraction]) -> Vector:
    items = [c if type(c) is Fraction else Fraction(c) for c in coeffs]
    while items and items[-1] == 0:
        items.pop()
    return tuple(items)


def encode_vector(coeffs: Iterable[Fraction]) -> VectorCode:
    """Code of a finite rational tuple, canonicalised by dropping trailing zeros."""
    return natlist_encode([rat_encode(c) for c in strip_vector(coeffs)])


@lru_cache(maxsize=1 << 16)
def decode_vector(code: VectorCode) -> Vector:
    return tuple(rat_decode(c) for c in natlist_decode(code))


def vec_add(a: Vector, b: Vector) -> Vector:
    return strip_vector(x + y for x, y in zip_longest(a, b, fillvalue=_FR_ZERO))


def vec_scale(alpha: Fraction, a: Vector) -> Vector:
    return strip_vector(alpha * x for x in a)


def vec_sub(a: Vector, b: Vector) -> Vector:
    return strip_vector(x - y for x, y in zip_longest(a, b, fillvalue=_FR_ZERO))


def combine(alpha: Fraction, m: VectorCode, n: VectorCode) -> VectorCode:
    """Code of alpha * v_m + v_n, computed on codes alone."""
    return encode_vector(vec_add(vec_scale(Fraction(alpha), decode_vector(m)), decode_vector(n)))


ZERO_VECTOR_CODE: VectorCode = encode_vector(())


# ---------------------------------------------------------------------------
# open rational intervals


def interval_encode(lo: Fraction, hi: Fraction) -> IntervalCode:
    lo, hi = Fraction(lo), Fraction(hi)
    if lo >= hi:
        raise ValueError("interval endpoints must satisfy lo < hi")
    return pair(rat_encode(lo), posrat_encode(hi - lo))


@lru_cache(maxsize=1 << 17)
def interval_decode(code: IntervalCode) -> tuple[Fraction, Fraction]:
    i, j = unpair(code)
    lo = rat_decode(i)
    return lo, lo + posrat_decode(j)


# ---------------------------------------------------------------------------
# rational balls


def ball_encode(center: VectorCode, radius: Fraction) -> BallCode:
    radius = Fraction(radius)
    if radius <= 0:
        raise ValueError("ball radius must be positive")
    return pair(center, posrat_encode(radius))


def ball_decode(code: BallCode) -> tuple[VectorCode, Fraction]:
    c, r = unpair(code)
    return c, posrat_decode(r)


# ---------------------------------------------------------------------------
# tree nodes and fact sets

Node = tuple[int, ...]


def node_encode(node: Sequence[int]) -> NodeCode:
    return natlist_encode(list(node))


def node_decode(code: NodeCode) -> Node:
    return tuple(natlist_decode(code))


def factset_encode(facts: Iterable[tuple[int, int]]) -> int:
    """Code of a finite set of (first, second) code pairs, order-insensitive."""
    items = sorted(set((a, b) for a, b in facts))
    return natlist_encode([pair(a, b) for a, b in items])


@lru_cache(maxsize=1 << 16)
def factset_decode(code: int) -> tuple[tuple[int, int], ...]:
    return tuple(unpair(c) for c in natlist_decode(code))


# ---------------------------------------------------------------------------
# membership certification


class Membership(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    UNKNOWN = "unknown"


def certify_membership(x: Enclosure, code: IntervalCode) -> Membership:
    """Decide whether the value enclosed by x lies in the open interval I_code.

    Inside demands the whole enclosure sit strictly interior; Outside demands
    disjointness from the closure, or an exact rational value pinned on an
    endpoint (open intervals exclude their endpoints).  Refining x can only
    move Unknown to a definite answer, never flip a definite one.
    """
    lo, hi = interval_decode(code)
    if x.hi < lo or x.lo > hi:
        return Membership.OUTSIDE
    if x.is_point() and (x.lo == lo or x.lo == hi):
        return Membership.OUTSIDE
    if lo < x.lo and x.hi < hi:
        return Membership.INSIDE
    return Membership.UNKNOWN
