"""Linear orders as diagrams, and their transfer to measure-space
presentations over the induced interval algebra.

An order diagram answers a total comparison query on an initial segment
of the naturals (or on all of them).  ``faithful_embed`` places the
elements on exact rationals, order-preservingly and injectively, in a
way that keeps the gap of any persistent adjacency from ever being
invaded: the first element sits at 0, an element extending the explored
range lands one unit past it, and an interior element lands on the
midpoint of its current bounds.  ``order_to_space`` then presents the
function space over intervals of embedded values, with interval mass
equal to the value gap, so adjacencies of the order become atoms of the
space and stretches that keep splitting become its nonatomic part.

Three generators convert computable predicates into orders or spaces:

* ``gadget_sigma03`` plants ever-finer dyadic grids below the least row
  whose verified witness run keeps lengthening, so the limit order is
  dense below a finite tail that records the rows visited on the way;
* ``gadget_pi02`` grows the rationals of a window that extends while
  every row keeps producing witnesses, with a fixed-length tail of
  integer points riding above the window;
* ``gadget_thmLp`` presents the row space in which a row separates into
  three unit coordinates exactly when a two-place predicate fires on it.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Callable, Iterator, Optional, Sequence, Union

from .coding import Vector, posrat_decode, strip_vector, unpair
from .enclosures import DomainError
from .presentations import (
    AtomInfo,
    ComponentInfo,
    Exponent,
    GadgetLpSource,
    PresentationHandle,
    Rat,
    Source,
    StepVector,
    StructuralSummary,
    _unit,
)

__all__ = [
    "InvalidOrder",
    "TooFewElements",
    "ExponentTwo",
    "OrderDiagram",
    "OrderIntervalSource",
    "faithful_embed",
    "order_to_space",
    "gadget_sigma03",
    "gadget_pi02",
    "gadget_thmLp",
]


class InvalidOrder(DomainError):
    """The comparison data does not describe a linear order."""


class TooFewElements(DomainError):
    """The order is too small to carry any interval."""


class ExponentTwo(DomainError):
    """The construction degenerates at exponent 2 and is refused there."""


# ---------------------------------------------------------------------------
# a fixed enumeration of the rationals in (0, 1), for the dense rules


def _rat01_stream() -> Iterator[Fraction]:
    den = 2
    while True:
        for num in range(1, den):
            if gcd(num, den) == 1:
                yield Fraction(num, den)
        den += 1


_RAT01_GEN = _rat01_stream()
_RAT01: list[Fraction] = []


def _rat01(i: int) -> Fraction:
    while len(_RAT01) <= i:
        _RAT01.append(next(_RAT01_GEN))
    return _RAT01[i]


# ---------------------------------------------------------------------------
# order diagrams


class OrderDiagram:
    """A linear order on the naturals, or on {0, .., size-1}.

    ``cmp(s, t)`` holds when s lies at or below t.  Diagrams built from
    matrices or explicit value lists are checked for linearity up front;
    a diagram wrapping a bare comparison callable is checked element by
    element as the embedding reaches it, and a breach raises
    InvalidOrder at that point.  The optional rule tag records a closed
    form, which is what lets the interval transfer certify structure
    beyond any finite window.
    """

    def __init__(self, cmp: Callable[[int, int], bool], *,
                 size: Optional[int] = None, label: str = "order",
                 rule: Optional[tuple] = None, checked: bool = False):
        self._cmp = cmp
        self.size = size
        self.label = label
        self.rule = rule
        self.positions: Optional[list[Fraction]] = None
        self._trusted = checked
        self._g: list[Fraction] = []

    # -- constructors ---------------------------------------------------------

    @classmethod
    def from_matrix(cls, rows: Sequence[Sequence], label: str = "matrix-order") -> "OrderDiagram":
        m = len(rows)
        table = []
        for row in rows:
            entries = tuple(bool(v) for v in row)
            if len(entries) != m:
                raise InvalidOrder("comparison matrix must be square")
            table.append(entries)
        out = cls(lambda s, t: table[s][t], size=m, label=label, checked=True)
        for t in range(m):
            _check_extension(out, t)
        return out

    @classmethod
    def from_values(cls, values: Sequence[Rat], label: str = "listed-order") -> "OrderDiagram":
        vals = [Fraction(v) for v in values]
        if len(set(vals)) != len(vals):
            raise InvalidOrder("explicit value lists must be duplicate-free")
        out = cls(lambda s, t: vals[s] <= vals[t], size=len(vals),
                  label=label, checked=True)
        out.positions = vals
        return out

    @classmethod
    def from_rule(cls, kind: str, n: Optional[int] = None) -> "OrderDiagram":
        if kind == "omega":
            return cls(lambda s, t: s <= t, label="omega",
                       rule=("omega",), checked=True)
        if kind == "omega_star":
            return cls(lambda s, t: t <= s, label="omega-star",
                       rule=("omega_star",), checked=True)
        if kind == "eta":
            return cls(lambda s, t: _rat01(s) <= _rat01(t), label="eta",
                       rule=("eta",), checked=True)
        if kind == "eta_plus_n":
            if n is None or n < 1:
                raise DomainError("eta_plus_n needs a tail length n >= 1")

            def pos(s: int) -> Fraction:
                # tail first so its elements embed at 0, 1, .., n-1 with
                # unit gaps; the dense block then fills in strictly below
                return Fraction(2 + s) if s < n else _rat01(s - n)

            return cls(lambda s, t: pos(s) <= pos(t), label=f"eta+{n}",
                       rule=("eta_plus_n", n), checked=True)
        if kind == "finite":
            if n is None or n < 1:
                raise DomainError("finite orders need a positive size")
            return cls(lambda s, t: s <= t, size=n, label=f"finite({n})",
                       rule=("finite", n), checked=True)
        raise DomainError(f"unknown order rule: {kind!r}")

    # -- queries ----------------------------------------------------------------

    def cmp(self, s: int, t: int) -> bool:
        if s < 0 or t < 0:
            raise DomainError("order elements are natural numbers")
        if self.size is not None and (s >= self.size or t >= self.size):
            raise DomainError(f"element beyond the {self.size}-element universe")
        return bool(self._cmp(s, t))

    def __repr__(self) -> str:
        extent = "infinite" if self.size is None else f"size={self.size}"
        return f"OrderDiagram({self.label}, {extent})"


def _check_extension(ordd: OrderDiagram, t: int) -> None:
    """Linearity of the prefix 0..t, assuming 0..t-1 already valid.

    New triples all involve t, and any triple with t in the middle slot
    reduces to one of the checked orientations via totality of the
    pairs, so the quadratic pass below is enough.
    """
    cmp = ordd.cmp
    if not cmp(t, t):
        raise InvalidOrder(f"comparison is not reflexive at {t}")
    for u in range(t):
        below, above = cmp(u, t), cmp(t, u)
        if below and above:
            raise InvalidOrder(f"elements {u} and {t} compare equal")
        if not (below or above):
            raise InvalidOrder(f"elements {u} and {t} are incomparable")
    for u in range(t):
        for v in range(t):
            if cmp(u, t) and cmp(t, v) and not cmp(u, v):
                raise InvalidOrder(f"transitivity fails through {t} on ({u}, {v})")


def faithful_embed(ordd: OrderDiagram, s: int) -> Fraction:
    """Exact rational position of element s under the faithful embedding.

    Element 0 sits at 0; an element above (below) everything explored
    lands one unit past the maximum (minimum); anything else lands on
    the midpoint of its bounding values.  The placement is injective and
    order-preserving, and once two elements are adjacent their gap can
    only be invaded by an element the order itself puts between them, so
    a persistent adjacency keeps positive mass in the transfer for good.
    """
    if s < 0:
        raise DomainError("order elements are natural numbers")
    if ordd.size is not None and s >= ordd.size:
        raise DomainError(f"element beyond the {ordd.size}-element universe")
    g = ordd._g
    while len(g) <= s:
        t = len(g)
        if not ordd._trusted:
            _check_extension(ordd, t)
        if t == 0:
            g.append(Fraction(0))
            continue
        above = [g[u] for u in range(t) if ordd.cmp(t, u)]
        below = [g[u] for u in range(t) if ordd.cmp(u, t)]
        if not above:
            g.append(max(below) + 1)
        elif not below:
            g.append(min(above) - 1)
        else:
            g.append((max(below) + min(above)) / 2)
    return g[s]


# ---------------------------------------------------------------------------
# the interval transfer


class OrderIntervalSource(Source):
    """Interval-algebra presentation of a linear order.

    Distinguished point 0 is the zero vector.  Odd point 2j+1 is the
    indicator of the j-th listed structural gap: for a complete finite
    universe the j-th gap in value order, for the discrete rules the
    j-th adjacency, and for the dense rules the j-th gap of a fixed
    explored window sorted by value (whose gaps tile the window, so the
    dyadic pieces below are short sums of unit slots).  Even point 2j+2
    is the indicator of the interval between the element pair unpair(j),
    so every pair of embedded values still receives its indicator
    eventually.  Keeping the structural indicators on low odd slots is
    what keeps atom and piece coefficient vectors short.
    """

    _ETA_WINDOW = 33     # explored elements backing the dense-part pieces
    _FINITE_CAP = 512    # complete universes past this stay undescribed

    def __init__(self, ordd: OrderDiagram):
        self.order = ordd
        self.label = f"order({ordd.label})"
        self._win: Optional[list[int]] = None
        self._sorted: Optional[list[int]] = None
        if ordd.size is not None:
            idx = list(range(ordd.size))
            vals = [faithful_embed(ordd, s) for s in idx]
            idx.sort(key=lambda s: vals[s])
            self._sorted = idx

    # -- point enumeration ------------------------------------------------------

    def _window(self, base: int) -> list[int]:
        if self._win is None:
            win = list(range(base, base + self._ETA_WINDOW))
            win.sort(key=lambda s: faithful_embed(self.order, s))
            self._win = win
        return self._win

    def _pair_for(self, m: int) -> tuple[int, int]:
        if m % 2:
            j = (m - 1) // 2
            if self._sorted is not None:
                srt = self._sorted
                if len(srt) < 2:
                    return (0, 0)
                j %= len(srt) - 1
                return (srt[j], srt[j + 1])
            rule = self.order.rule
            kind = rule[0] if rule else None
            if kind == "eta":
                win = self._window(0)
                if j < len(win) - 1:
                    return (win[j], win[j + 1])
            elif kind == "eta_plus_n":
                n = rule[1]
                if j < n - 1:
                    return (j, j + 1)
                k = j - (n - 1)
                win = self._window(n)
                if k < len(win) - 1:
                    return (win[k], win[k + 1])
            return (j, j + 1)
        s, t = unpair(m // 2 - 1)
        if self.order.size is not None:
            s %= self.order.size
            t %= self.order.size
        return (s, t)

    def _segment(self, s: int, t: int) -> StepVector:
        a = faithful_embed(self.order, s)
        b = faithful_embed(self.order, t)
        if a == b:
            return StepVector()
        lo, hi = (a, b) if a < b else (b, a)
        return StepVector({}, {"r": [(lo, hi, Fraction(1))]})

    def point(self, m: int) -> StepVector:
        if m == 0:
            return StepVector()
        return self._segment(*self._pair_for(m))

    def atom_mass(self, key: object) -> Fraction:
        s, t = key
        a = faithful_embed(self.order, s)
        b = faithful_embed(self.order, t)
        if a == b:
            raise DomainError("degenerate interval has no mass")
        return abs(b - a)

    # -- structure ---------------------------------------------------------------

    def _dense_component(self, base: int, lane_off: int) -> ComponentInfo:
        """Nonatomic mass carried by the elements from base on.

        A fixed window of explored elements backs the dyadic pieces: the
        window's value-order gaps occupy the odd point slots starting at
        lane_off, and the piece at (level, pos) is the sum of its gap
        indicators, so children tile their parent exactly and piece
        vectors stay short.
        """
        win = self._window(base)
        depth_cap = (self._ETA_WINDOW - 1).bit_length() - 1

        def piece(level: int, pos: int) -> Optional[Vector]:
            if level > depth_cap:
                return None
            step = 1 << (depth_cap - level)
            lo, hi = pos * step, (pos + 1) * step
            coeffs = [Fraction(0)] * (2 * (lane_off + hi - 1) + 2)
            for i in range(lo, hi):
                coeffs[2 * (lane_off + i) + 1] = Fraction(1)
            return strip_vector(coeffs)

        lo_val = faithful_embed(self.order, win[0])
        hi_val = faithful_embed(self.order, win[-1])
        return ComponentInfo(("r", base), hi_val - lo_val, piece, True)

    def _finite_summary(self) -> StructuralSummary:
        srt = self._sorted
        m = len(srt)
        if m < 2:
            return StructuralSummary([], False, [], (), True, self.label)
        if m > self._FINITE_CAP:
            return StructuralSummary([], False, [], None, False, self.label)
        atoms = []
        for j in range(m - 1):
            lo = faithful_embed(self.order, srt[j])
            hi = faithful_embed(self.order, srt[j + 1])
            atoms.append(AtomInfo((srt[j], srt[j + 1]), hi - lo, _unit(2 * j + 1)))
        whole = [Fraction(0)] * (2 * (m - 1))
        for j in range(m - 1):
            whole[2 * j + 1] = Fraction(1)
        return StructuralSummary(atoms, False, [], strip_vector(whole),
                                 True, self.label)

    def summary(self, budget: int) -> StructuralSummary:
        if self._sorted is not None:
            return self._finite_summary()
        rule = self.order.rule
        kind = rule[0] if rule else None
        if kind in ("omega", "omega_star"):
            count = max(1, min(budget, 64))
            atoms = [AtomInfo(self._pair_for(2 * j + 1), Fraction(1),
                              _unit(2 * j + 1))
                     for j in range(count)]
            return StructuralSummary(atoms, True, [], None, True, self.label)
        if kind == "eta":
            comp = self._dense_component(0, 0)
            return StructuralSummary([], False, [comp], None, True, self.label)
        if kind == "eta_plus_n":
            n = rule[1]
            atoms = [AtomInfo((j, j + 1), Fraction(1), _unit(2 * j + 1))
                     for j in range(n - 1)]
            comp = self._dense_component(n, n - 1)
            return StructuralSummary(atoms, False, [comp], None, True, self.label)
        # a bare comparison query certifies nothing beyond its window
        return StructuralSummary([], False, [], None, False, self.label)


def order_to_space(ordd: OrderDiagram, p: Union[Exponent, Rat],
                   stage: int = 0) -> PresentationHandle:
    """Presentation of the function space over the order's intervals.

    The stage argument is advisory: the handle explores the order
    lazily, so every stage yields the same presentation object.
    """
    del stage
    if ordd.size is not None and ordd.size < 2:
        raise TooFewElements("the interval transfer needs at least two elements")
    return PresentationHandle(OrderIntervalSource(ordd), p)


# ---------------------------------------------------------------------------
# predicate-driven generators


def _run_length(q_pred: Callable[[int, int, int], bool], x: int, cap: int) -> int:
    """Length of row x's verified witness run inside the window [0, cap]."""
    if cap < 0:
        return 0
    y = 0
    while y <= cap and any(q_pred(x, y, z) for z in range(cap + 1)):
        y += 1
    return min(y, cap)


_MARKER_CEILING = 1 << 12


def gadget_sigma03(q_pred: Callable[[int, int, int], bool],
                   member_a: Callable[[int], bool],
                   stage: int) -> OrderDiagram:
    """Growing suborder of [0, 1) driven by a three-place predicate.

    Each step finds the least row (within the step window) whose
    verified witness run just lengthened, then plants the dyadic grid of
    span 2^-row whose step size also records a fresh member of the
    marker set.  Rows with ever-lengthening runs get revisited forever,
    so the region below the least such row densifies, while grid points
    above it form a finite tail that survives to the limit.  Steps where
    no run lengthens, and steps whose next marker lies beyond a fixed
    search window, plant nothing.

    The element count roughly doubles at every planting step, so keep
    stages small.
    """
    values: list[Fraction] = [Fraction(0)]
    seen = {Fraction(0)}
    run: dict[int, int] = {}
    zptr: dict[tuple[int, int], int] = {}
    prev_len: dict[int, int] = {}
    max_gap = -1
    for s in range(stage):
        chosen = None
        for x in range(s + 1):
            r = run.get(x, 0)
            while r <= s:
                z0 = zptr.get((x, r), 0)
                hit = -1
                for z in range(z0, s + 1):
                    if q_pred(x, r, z):
                        hit = z
                        break
                if hit < 0:
                    zptr[(x, r)] = s + 1
                    break
                zptr[(x, r)] = hit
                r += 1
            run[x] = r
            length = min(r, s)
            if x not in prev_len:
                # a row entering the scan needs its previous-window value
                prev_len[x] = _run_length(q_pred, x, s - 1) if s else -1
            if chosen is None and length > prev_len[x]:
                chosen = x
            prev_len[x] = length
        if chosen is None:
            continue
        gap = max_gap + 1
        while gap <= _MARKER_CEILING and not (member_a(gap) and chosen + gap >= 1):
            gap += 1
        if gap > _MARKER_CEILING:
            continue
        max_gap = gap
        width = chosen + gap
        step = Fraction(1, 1 << (chosen + width))
        for j in range(1 << width):
            v = j * step
            if v not in seen:
                seen.add(v)
                values.append(v)
    return OrderDiagram.from_values(values, label=f"sigma03({stage})")


def gadget_pi02(q_pred: Callable[[int, int], bool], n: int,
                stage: int) -> OrderDiagram:
    """Growing suborder of the positive rationals with an n-point tail.

    A window extends while every row below it keeps producing a witness
    of the two-place predicate; the order collects the rationals of
    (0, window+1) as their enumeration reaches them, plus the integer
    points up to window+n.  If some row never fires, the window freezes
    there and the limit is a dense block followed by exactly n isolated
    points; if every row fires, the tail is absorbed cofinally and the
    limit is dense without endpoints.
    """
    if n < 1:
        raise DomainError("the tail needs at least one point")
    found: set[int] = set()
    yptr: dict[int, int] = {}
    width = 0
    values: list[Fraction] = []
    seen: set[Fraction] = set()

    def add(v: Fraction) -> None:
        if v not in seen:
            seen.add(v)
            values.append(v)

    for s in range(stage):
        while width <= s:
            x = width
            if x not in found:
                hit = False
                for y in range(yptr.get(x, 0), s + 1):
                    if q_pred(x, y):
                        hit = True
                        break
                if not hit:
                    yptr[x] = s + 1
                    break
                found.add(x)
            width += 1
        window = min(width, s)
        for i in range(1, s + 1):
            r = posrat_decode(i)
            if r < window + 1:
                add(r)
        for i in range(1, window + n + 1):
            add(Fraction(i))
    return OrderDiagram.from_values(values, label=f"pi02(n={n})")


def gadget_thmLp(q_pred: Callable[[int, int], bool], p: Union[Exponent, Rat],
                 stage: int = 0) -> PresentationHandle:
    """Row-space presentation tracking a two-place predicate.

    Row x starts as two overlapping two-coordinate blocks and separates
    into three unit coordinates exactly when the predicate fires on the
    row.  At exponent 2 overlapping and disjoint pairs are isometric and
    the rows carry no signal, so that exponent is refused.
    """
    del stage
    exponent = Exponent.of(p)
    if exponent.is_exactly(2):
        raise ExponentTwo("the row gadget is degenerate at exponent 2")
    return PresentationHandle(GadgetLpSource(q_pred), exponent)
