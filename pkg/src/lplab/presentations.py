"""Presentations of Lebesgue spaces and their exact norm oracles.

A presentation hands out distinguished points R(0), R(1), ... of a concrete
backing space; rational vectors are finite rational combinations of those
points.  Internally every vector is flattened to a step vector: values on
finitely many atoms plus finitely many rational-endpoint segments of the
nonatomic components.  That makes the p-th power of every norm a finite sum
of exact terms mass * |value|^p, so norm enclosures of any requested width
come out of integer root arithmetic rather than floating point.

Name streams enumerate the rational-vector / rational-interval diagram of a
presentation: pairs (m, n) asserting that the vector coded m has norm inside
the open interval coded n.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

from .coding import (
    IntervalCode,
    Membership,
    Vector,
    VectorCode,
    certify_membership,
    decode_vector,
    encode_vector,
    interval_decode,
    pair,
    strip_vector,
    unpair,
    vec_add,
    vec_sub,
)
from .enclosures import (
    DomainError,
    Enclosure,
    ZERO,
    enclosure_sum,
    pow_enclosure,
    pow_enclosure_interval,
    pow_enclosure_real_exp,
    pow_exact,
)

Rat = Union[Fraction, int]


# ---------------------------------------------------------------------------
# exponents


class Exponent:
    """A norm exponent p >= 1, either exact rational or given by a refiner.

    The refiner form is the workbench's rendering of a "name of a real":
    a map k -> rational enclosure of width at most 2^-k.
    """

    def __init__(self, exact: Optional[Fraction] = None,
                 refiner: Optional[Callable[[int], Enclosure]] = None):
        if exact is None and refiner is None:
            raise DomainError("an exponent needs an exact value or a refiner")
        self.exact = Fraction(exact) if exact is not None else None
        if self.exact is not None and self.exact < 1:
            raise DomainError("exponents must be at least 1")
        self._refiner = refiner

    @staticmethod
    def of(value: Union["Exponent", Rat]) -> "Exponent":
        if isinstance(value, Exponent):
            return value
        return Exponent(exact=Fraction(value))

    def enclosure(self, k: int) -> Enclosure:
        if self.exact is not None:
            return Enclosure.point(self.exact)
        enc = self._refiner(k)
        if enc.width > Fraction(1, 1 << k):
            raise DomainError("exponent refiner returned too wide an enclosure")
        return enc

    def is_exactly(self, q: Rat) -> bool:
        return self.exact is not None and self.exact == q

    def excludes(self, q: Rat, k: int = 40) -> bool:
        """Certifies p != q (exactly, or by a separating enclosure)."""
        if self.exact is not None:
            return self.exact != q
        enc = self.enclosure(k)
        return not enc.contains(Fraction(q))

    def power(self, base: Fraction, k: int) -> Enclosure:
        """Enclosure of base**p with width <= 2^-k (base >= 0)."""
        if self.exact is not None:
            return pow_enclosure(base, self.exact, k)
        m = max(k, 8)
        while True:
            out = pow_enclosure_real_exp(base, self.enclosure(m), k + 2)
            if out.width <= Fraction(1, 1 << k):
                return out
            m *= 2

    def power_interval(self, base: Enclosure, k: int) -> Enclosure:
        if base.lo < 0:
            raise DomainError("nonnegative base required")
        lo = self.power(base.lo, k + 1)
        hi = self.power(base.hi, k + 1)
        return Enclosure(lo.lo, hi.hi)

    def root_interval(self, base: Enclosure, k: int) -> Enclosure:
        """Enclosure of base**(1/p) over a nonnegative base enclosure."""
        if base.lo < 0:
            raise DomainError("nonnegative base required")
        if self.exact is not None:
            return pow_enclosure_interval(base, 1 / self.exact, k)
        m = max(k, 8)
        while True:
            pe = self.enclosure(m)
            inv = Enclosure(1 / pe.hi, 1 / pe.lo)
            lo = pow_enclosure_real_exp(base.lo, inv, k + 2) if base.lo > 0 else ZERO
            hi = pow_enclosure_real_exp(base.hi, inv, k + 2)
            out = Enclosure(lo.lo, hi.hi)
            if out.width <= Fraction(1, 1 << k):
                return out
            m *= 2

    def __repr__(self) -> str:
        if self.exact is not None:
            return f"Exponent({self.exact})"
        return "Exponent(<refiner>)"


# ---------------------------------------------------------------------------
# measure descriptions and step vectors


@dataclass(frozen=True)
class MeasureDescription:
    """Finitely presented measure: atom weights plus a nonatomic interval mass."""

    atoms: tuple[Fraction, ...]
    nonatomic_mass: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", tuple(Fraction(a) for a in self.atoms))
        object.__setattr__(self, "nonatomic_mass", Fraction(self.nonatomic_mass))
        if any(a <= 0 for a in self.atoms):
            raise DomainError("atom weights must be positive")
        if self.nonatomic_mass < 0:
            raise DomainError("nonatomic mass must be nonnegative")

    @property
    def total_mass(self) -> Fraction:
        return sum(self.atoms, Fraction(0)) + self.nonatomic_mass

    def is_zero(self) -> bool:
        return not self.atoms and self.nonatomic_mass == 0


Segment = tuple[Fraction, Fraction, Fraction]  # lo, hi, value


@dataclass
class StepVector:
    """A simple function: values on atoms and on disjoint rational segments."""

    atom_values: dict = field(default_factory=dict)
    segments: dict = field(default_factory=dict)  # component key -> list[Segment]

    def is_zero(self) -> bool:
        return not self.atom_values and all(
            not segs for segs in self.segments.values()
        )

    def scaled(self, c: Fraction) -> "StepVector":
        if c == 0:
            return StepVector()
        return StepVector(
            {k: c * v for k, v in self.atom_values.items()},
            {ck: [(lo, hi, c * v) for lo, hi, v in segs] for ck, segs in self.segments.items()},
        )

    def plus(self, other: "StepVector") -> "StepVector":
        atoms = dict(self.atom_values)
        for k, v in other.atom_values.items():
            w = atoms.get(k, Fraction(0)) + v
            if w == 0:
                atoms.pop(k, None)
            else:
                atoms[k] = w
        segs: dict = {}
        for ck in set(self.segments) | set(other.segments):
            merged = _merge_segments(self.segments.get(ck, []), other.segments.get(ck, []))
            if merged:
                segs[ck] = merged
        return StepVector(atoms, segs)

    def support_disjoint_from(self, other: "StepVector") -> bool:
        if set(self.atom_values) & set(other.atom_values):
            return False
        for ck in set(self.segments) & set(other.segments):
            for lo, hi, _ in self.segments[ck]:
                for lo2, hi2, _ in other.segments[ck]:
                    if lo < hi2 and lo2 < hi:
                        return False
        return True

    def equals(self, other: "StepVector") -> bool:
        return self.plus(other.scaled(Fraction(-1))).is_zero()


def _merge_segments(a: list[Segment], b: list[Segment]) -> list[Segment]:
    """Pointwise sum of two step functions given as disjoint segments."""
    points = sorted({p for lo, hi, _ in a + b for p in (lo, hi)})
    out: list[Segment] = []
    for lo, hi in zip(points, points[1:]):
        val = Fraction(0)
        for slo, shi, sval in a:
            if slo <= lo and hi <= shi:
                val += sval
        for slo, shi, sval in b:
            if slo <= lo and hi <= shi:
                val += sval
        if val != 0:
            out.append((lo, hi, val))
    return _coalesce(out)


def _coalesce(segs: list[Segment]) -> list[Segment]:
    out: list[Segment] = []
    for lo, hi, val in segs:
        if out and out[-1][1] == lo and out[-1][2] == val:
            plo, _, pval = out.pop()
            out.append((plo, hi, pval))
        else:
            out.append((lo, hi, val))
    return out


# ---------------------------------------------------------------------------
# structural summaries (what the backing space certifies about itself)


@dataclass
class AtomInfo:
    key: object
    mass: Fraction
    coeffs: Vector  # rational coefficients over distinguished points


@dataclass
class ComponentInfo:
    key: object
    mass: Fraction
    # piece(level, pos) -> coefficient vector of the indicator of the
    # pos-th dyadic piece at that level, or None when the component
    # cannot be subdivided at the current stage.
    piece: Callable[[int, int], Optional[Vector]]
    splittable: bool = True


@dataclass
class StructuralSummary:
    atoms: list[AtomInfo]
    atoms_infinite: bool
    nonatomic: list[ComponentInfo]
    whole_coeffs: Optional[Vector]
    exact: bool
    label: str = ""

    @property
    def nonatomic_mass(self) -> Fraction:
        return sum((c.mass for c in self.nonatomic), Fraction(0))

    def has_nonatomic_part(self) -> bool:
        return bool(self.nonatomic)


# ---------------------------------------------------------------------------
# sources


def _dyadic_piece_bounds(mass: Fraction, index: int) -> tuple[Fraction, Fraction]:
    """Bounds of the index-th interval in the standard dyadic enumeration."""
    level = (index + 1).bit_length() - 1
    pos = index + 1 - (1 << level)
    step = mass / (1 << level)
    return pos * step, (pos + 1) * step


def _unit(slot: int) -> Vector:
    return strip_vector([Fraction(0)] * slot + [Fraction(1)])


class Source:
    label: str = "source"

    def point(self, n: int) -> StepVector:
        raise NotImplementedError

    def atom_mass(self, key: object) -> Fraction:
        raise NotImplementedError

    def summary(self, budget: int) -> StructuralSummary:
        raise NotImplementedError


class LpNSource(Source):
    """Standard n-dimensional sequence space: R(m) = e_{m mod n}."""

    def __init__(self, n: int):
        if n < 1:
            raise DomainError("lpn needs n >= 1")
        self.n = n
        self.label = f"lpn({n})"

    def point(self, m: int) -> StepVector:
        return StepVector({m % self.n: Fraction(1)}, {})

    def atom_mass(self, key: object) -> Fraction:
        return Fraction(1)

    def summary(self, budget: int) -> StructuralSummary:
        atoms = [AtomInfo(i, Fraction(1), _unit(i)) for i in range(self.n)]
        whole = strip_vector([Fraction(1)] * self.n)
        return StructuralSummary(atoms, False, [], whole, True, self.label)


class LpSource(Source):
    """Standard infinite sequence space: R(m) = e_m."""

    label = "lp"

    def point(self, m: int) -> StepVector:
        return StepVector({m: Fraction(1)}, {})

    def atom_mass(self, key: object) -> Fraction:
        return Fraction(1)

    def summary(self, budget: int) -> StructuralSummary:
        atoms = [AtomInfo(i, Fraction(1), _unit(i)) for i in range(max(budget, 1))]
        return StructuralSummary(atoms, True, [], None, True, self.label)


class Lp01Source(Source):
    """Standard nonatomic space on the unit interval: dyadic indicators."""

    label = "lp01"

    def point(self, m: int) -> StepVector:
        lo, hi = _dyadic_piece_bounds(Fraction(1), m)
        return StepVector({}, {"u": [(lo, hi, Fraction(1))]})

    def atom_mass(self, key: object) -> Fraction:
        raise DomainError("lp01 has no atoms")

    def _piece(self, level: int, pos: int) -> Optional[Vector]:
        index = (1 << level) - 1 + pos
        return _unit(index)

    def summary(self, budget: int) -> StructuralSummary:
        comp = ComponentInfo("u", Fraction(1), self._piece)
        return StructuralSummary([], False, [comp], _unit(0), True, self.label)


class MeasureSource(Source):
    """Finitely described measure space.

    R(0) is the indicator of the whole space; atoms and dyadic pieces of the
    nonatomic part alternate on the remaining slots so both stay dense in the
    enumeration.
    """

    def __init__(self, desc: MeasureDescription):
        self.desc = desc
        self.label = f"measure({len(desc.atoms)} atoms, nonatomic {desc.nonatomic_mass})"

    def _whole(self) -> StepVector:
        sv = StepVector()
        for i in range(len(self.desc.atoms)):
            sv.atom_values[i] = Fraction(1)
        if self.desc.nonatomic_mass > 0:
            sv.segments["c"] = [(Fraction(0), self.desc.nonatomic_mass, Fraction(1))]
        return sv

    def point(self, m: int) -> StepVector:
        desc = self.desc
        if desc.is_zero():
            return StepVector()
        if m == 0:
            return self._whole()
        m -= 1
        have_atoms = bool(desc.atoms)
        have_cont = desc.nonatomic_mass > 0
        if have_atoms and have_cont:
            if m % 2 == 0:
                return StepVector({(m // 2) % len(desc.atoms): Fraction(1)}, {})
            lo, hi = _dyadic_piece_bounds(desc.nonatomic_mass, m // 2)
            return StepVector({}, {"c": [(lo, hi, Fraction(1))]})
        if have_atoms:
            return StepVector({m % len(desc.atoms): Fraction(1)}, {})
        lo, hi = _dyadic_piece_bounds(desc.nonatomic_mass, m)
        return StepVector({}, {"c": [(lo, hi, Fraction(1))]})

    def atom_mass(self, key: object) -> Fraction:
        return self.desc.atoms[key]

    def _atom_slot(self, i: int) -> int:
        if self.desc.nonatomic_mass > 0:
            return 1 + 2 * i
        return 1 + i

    def _piece_slot(self, index: int) -> int:
        if self.desc.atoms:
            return 2 + 2 * index
        return 1 + index

    def _piece(self, level: int, pos: int) -> Optional[Vector]:
        return _unit(self._piece_slot((1 << level) - 1 + pos))

    def summary(self, budget: int) -> StructuralSummary:
        atoms = [
            AtomInfo(i, w, _unit(self._atom_slot(i)))
            for i, w in enumerate(self.desc.atoms)
        ]
        comps = []
        if self.desc.nonatomic_mass > 0:
            comps.append(ComponentInfo("c", self.desc.nonatomic_mass, self._piece))
        whole = None if self.desc.is_zero() else _unit(0)
        return StructuralSummary(atoms, False, comps, whole, True, self.label)


class SumSource(Source):
    """p-direct sum: distinguished points of the two parts interleave."""

    def __init__(self, left: "PresentationHandle", right: "PresentationHandle"):
        self.left = left
        self.right = right
        self.label = f"sum({left.source.label}, {right.source.label})"

    @staticmethod
    def _tag(sv: StepVector, side: str) -> StepVector:
        return StepVector(
            {(side, k): v for k, v in sv.atom_values.items()},
            {(side, ck): segs for ck, segs in sv.segments.items()},
        )

    def point(self, m: int) -> StepVector:
        if m % 2 == 0:
            return self._tag(self.left.source.point(m // 2), "L")
        return self._tag(self.right.source.point(m // 2), "R")

    def atom_mass(self, key: object) -> Fraction:
        side, inner = key
        src = self.left.source if side == "L" else self.right.source
        return src.atom_mass(inner)

    @staticmethod
    def _shift(coeffs: Vector, side: str) -> Vector:
        out: list[Fraction] = []
        for c in coeffs:
            if side == "L":
                out.extend([c, Fraction(0)])
            else:
                out.extend([Fraction(0), c])
        return strip_vector(out)

    def summary(self, budget: int) -> StructuralSummary:
        ls = self.left.source.summary(budget)
        rs = self.right.source.summary(budget)
        atoms = [
            AtomInfo(("L", a.key), a.mass, self._shift(a.coeffs, "L")) for a in ls.atoms
        ] + [
            AtomInfo(("R", a.key), a.mass, self._shift(a.coeffs, "R")) for a in rs.atoms
        ]

        def wrap(comp: ComponentInfo, side: str) -> ComponentInfo:
            def piece(level: int, pos: int) -> Optional[Vector]:
                inner = comp.piece(level, pos)
                return None if inner is None else self._shift(inner, side)

            return ComponentInfo((side, comp.key), comp.mass, piece, comp.splittable)

        comps = [wrap(c, "L") for c in ls.nonatomic] + [wrap(c, "R") for c in rs.nonatomic]
        whole = None
        if ls.whole_coeffs is not None and rs.whole_coeffs is not None:
            whole = vec_add(self._shift(ls.whole_coeffs, "L"), self._shift(rs.whole_coeffs, "R"))
        return StructuralSummary(
            atoms,
            ls.atoms_infinite or rs.atoms_infinite,
            comps,
            whole,
            ls.exact and rs.exact,
            self.label,
        )


class GadgetLpSource(Source):
    """Sequence-space presentation driven by a decidable three-place predicate.

    Row x starts as the pair of overlapping blocks e_{3x}+e_{3x+1} and
    e_{3x+1}+e_{3x+2}; once the predicate fires on the row, the middle
    coordinate e_{3x+1} becomes a distinguished point of its own and the row
    separates into three coordinates.
    """

    def __init__(self, q_pred: Callable[[int, int], bool]):
        self.q = q_pred
        self.label = "gadget-lp"

    def point(self, m: int) -> StepVector:
        x, y = unpair(m)
        one = Fraction(1)
        if y == 0:
            return StepVector({3 * x: one, 3 * x + 1: one}, {})
        if y == 1:
            return StepVector({3 * x + 1: one, 3 * x + 2: one}, {})
        w = y - 2
        if any(self.q(x, yy) for yy in range(w)):
            return StepVector({3 * x + 1: one}, {})
        return StepVector({3 * x + 1: one, 3 * x + 2: one}, {})

    def atom_mass(self, key: object) -> Fraction:
        return Fraction(1)

    def confirmed_rows(self, budget: int) -> list[int]:
        rows = []
        for x in range(budget):
            if any(self.q(x, y) for y in range(budget)):
                rows.append(x)
        return rows

    def row_confirmation(self, x: int, budget: int) -> Optional[int]:
        for y in range(budget):
            if self.q(x, y):
                return y
        return None

    def summary(self, budget: int) -> StructuralSummary:
        # only confirmed rows expose their coordinates as certified atoms;
        # nothing about unconfirmed rows is claimed, so the summary is
        # never exact for this source
        atoms: list[AtomInfo] = []
        for x in self.confirmed_rows(budget):
            y = self.row_confirmation(x, budget)
            mid_slot = _unit(pair(x, y + 3))
            first = _unit(pair(x, 0))
            second = _unit(pair(x, 1))
            atoms.append(AtomInfo(3 * x + 1, Fraction(1), mid_slot))
            atoms.append(AtomInfo(3 * x, Fraction(1), vec_sub(first, mid_slot)))
            atoms.append(AtomInfo(3 * x + 2, Fraction(1), vec_sub(second, mid_slot)))
        return StructuralSummary(atoms, True, [], None, False, self.label)


# ---------------------------------------------------------------------------
# the handle


class PresentationHandle:
    """A presentation: distinguished points plus a certified norm oracle."""

    def __init__(self, source: Source, p: Union[Exponent, Rat]):
        self.source = source
        self.p = Exponent.of(p)
        self._norm_cache: dict = {}
        self._point_cache: dict[int, StepVector] = {}

    # -- vectors ------------------------------------------------------------

    def point(self, n: int) -> StepVector:
        sv = self._point_cache.get(n)
        if sv is None:
            sv = self.source.point(n)
            self._point_cache[n] = sv
        return sv

    def vector(self, coeffs: Iterable[Rat]) -> StepVector:
        out = StepVector()
        for j, c in enumerate(coeffs):
            c = Fraction(c)
            if c != 0:
                out = out.plus(self.point(j).scaled(c))
        return out

    # -- p-th power masses ----------------------------------------------------

    def _terms(self, sv: StepVector) -> list[tuple[Fraction, Fraction]]:
        terms = []
        for key, val in sv.atom_values.items():
            if val != 0:
                terms.append((self.source.atom_mass(key), abs(val)))
        for segs in sv.segments.values():
            for lo, hi, val in segs:
                if val != 0 and hi > lo:
                    terms.append((hi - lo, abs(val)))
        return terms

    def p_mass(self, sv: StepVector, k: int) -> Enclosure:
        """Enclosure of the p-th power of the norm, width <= 2^-k."""
        terms = self._terms(sv)
        if not terms:
            return ZERO
        total_mass = sum(m for m, _ in terms)
        extra = max(0, (len(terms)).bit_length()) + max(0, total_mass.numerator.bit_length() - total_mass.denominator.bit_length() + 1)
        mk = k + 1 + extra
        parts = [self.p.power(v, mk).scale(m) for m, v in terms]
        return enclosure_sum(parts)

    def p_mass_exact(self, sv: StepVector) -> Optional[Fraction]:
        """Exact rational p-th power mass, when every term is rational."""
        if self.p.exact is None:
            return None
        total = Fraction(0)
        for m, v in self._terms(sv):
            t = pow_exact(v, self.p.exact)
            if t is None:
                return None
            total += m * t
        return total

    def dot_mass(self, a: StepVector, b: StepVector) -> Fraction:
        """Exact integral of the product (the inner product when p = 2)."""
        total = Fraction(0)
        for key, val in a.atom_values.items():
            other = b.atom_values.get(key)
            if other:
                total += self.source.atom_mass(key) * val * other
        for ck in set(a.segments) & set(b.segments):
            for lo, hi, val in a.segments[ck]:
                for lo2, hi2, val2 in b.segments[ck]:
                    ov_lo, ov_hi = max(lo, lo2), min(hi, hi2)
                    if ov_lo < ov_hi:
                        total += (ov_hi - ov_lo) * val * val2
        return total

    # -- the norm oracle ------------------------------------------------------

    def norm_vec(self, coeffs: Sequence[Rat], k: int) -> Enclosure:
        key = (strip_vector(coeffs), k)
        cached = self._norm_cache.get(key)
        if cached is not None:
            return cached
        result = self._norm_step(self.vector(key[0]), k)
        self._norm_cache[key] = result
        return result

    def norm_code(self, code: VectorCode, k: int) -> Enclosure:
        return self.norm_vec(decode_vector(code), k)

    def norm_step(self, sv: StepVector, k: int) -> Enclosure:
        return self._norm_step(sv, k)

    def _norm_step(self, sv: StepVector, k: int) -> Enclosure:
        if sv.is_zero():
            return ZERO
        m = k + 3
        target = Fraction(1, 1 << k)
        while True:
            mass = self.p_mass(sv, m)
            out = self.p.root_interval(mass, m)
            if out.width <= target:
                bits = k + 2
                rounded = out.outward(bits)
                if rounded.width <= target:
                    return rounded
                return out
            m = 2 * m

    # -- structure ------------------------------------------------------------

    def summary(self, budget: int = 16) -> StructuralSummary:
        return self.source.summary(budget)

    def disjoint_pair(self) -> Optional[tuple[Vector, Vector]]:
        """Two disjointly supported nonzero rational vectors, if dimension allows."""
        s = self.summary(4)
        if len(s.atoms) >= 2:
            return s.atoms[0].coeffs, s.atoms[1].coeffs
        if s.atoms and s.nonatomic:
            piece = s.nonatomic[0].piece(0, 0)
            if piece is not None:
                return s.atoms[0].coeffs, piece
        if s.nonatomic:
            comp = s.nonatomic[0]
            a = comp.piece(1, 0)
            b = comp.piece(1, 1)
            if a is not None and b is not None:
                return a, b
        return None

    def __repr__(self) -> str:
        return f"PresentationHandle({self.source.label}, p={self.p})"


# ---------------------------------------------------------------------------
# constructors


def standard_presentation(space_kind: str, n: Optional[int], p: Union[Exponent, Rat]) -> PresentationHandle:
    kind = space_kind.lower()
    if kind == "lpn":
        return PresentationHandle(LpNSource(n or 1), p)
    if kind == "lp":
        return PresentationHandle(LpSource(), p)
    if kind == "lp01":
        return PresentationHandle(Lp01Source(), p)
    if kind == "sum":
        left = PresentationHandle(LpNSource(n or 1), p)
        right = PresentationHandle(Lp01Source(), p)
        return lp_sum(left, right, p)
    raise DomainError(f"unknown standard space kind: {space_kind}")


def measure_presentation(desc: MeasureDescription, p: Union[Exponent, Rat]) -> PresentationHandle:
    return PresentationHandle(MeasureSource(desc), p)


def lp_sum(a: PresentationHandle, b: PresentationHandle,
           p: Union[Exponent, Rat, None] = None) -> PresentationHandle:
    p = Exponent.of(p) if p is not None else a.p
    for side in (a, b):
        if side.p.exact != p.exact:
            raise DomainError("direct sum requires matching exponents")
    return PresentationHandle(SumSource(a, b), p)


def zero_presentation(p: Union[Exponent, Rat]) -> PresentationHandle:
    return measure_presentation(MeasureDescription((), Fraction(0)), p)


# ---------------------------------------------------------------------------
# name streams


class _ReplayStream:
    """Replayable pull-based stream.

    The cache makes the stream restartable: any consumer may re-read the
    prefix without disturbing others.  Finite streams report exhaustion,
    which closed-world monitor checks rely on.
    """

    def __init__(self, factory: Callable[[], Iterator],
                 source: Optional[PresentationHandle] = None, label: str = ""):
        self._factory = factory
        self._iter: Optional[Iterator] = None
        self._cache: list = []
        self._exhausted = False
        self.source = source
        self.label = label

    def prefix(self, stage: int) -> list:
        while len(self._cache) < stage and not self._exhausted:
            if self._iter is None:
                self._iter = self._factory()
            try:
                self._cache.append(next(self._iter))
            except StopIteration:
                self._exhausted = True
        return self._cache[:stage]

    def exhausted_within(self, stage: int) -> bool:
        self.prefix(stage)
        return self._exhausted and len(self._cache) <= stage

    def known_length(self) -> Optional[int]:
        return len(self._cache) if self._exhausted else None


class NameStream(_ReplayStream):
    """Stream of diagram pairs (m, n): vector code m, interval code n."""

    @staticmethod
    def from_pairs(pairs: Sequence[tuple[int, int]], label: str = "") -> "NameStream":
        data = [(int(m), int(n)) for m, n in pairs]
        return NameStream(lambda: iter(data), label=label)


class IntStream(_ReplayStream):
    """Stream of bare natural-number codes (fact sets, set members)."""

    @staticmethod
    def from_values(values: Sequence[int], label: str = "") -> "IntStream":
        data = [int(v) for v in values]
        return IntStream(lambda: iter(data), label=label)


def diagram_pairs(pres: PresentationHandle) -> Iterator[tuple[int, int]]:
    """Raw dovetailed diagram enumeration, one certified pair at a time.

    Pairs are visited in rounds ordered by code sum; a pair is emitted the
    first time membership certifies Inside, dropped permanently once it
    certifies Outside or pins the norm exactly on an interval endpoint, and
    rescheduled with doubled precision otherwise.
    """
    scheduled: dict[int, list[tuple[int, int, int]]] = {}
    for s in itertools.count():
        due = scheduled.pop(s, [])
        for m in range(s + 1):
            due.append((m, s - m, 5))
        due.sort(key=lambda t: (t[0] + t[1], t[0], t[1]))
        for m, n, k in due:
            enc = pres.norm_code(m, k)
            verdict = certify_membership(enc, n)
            if verdict is Membership.INSIDE:
                yield (m, n)
                continue
            if verdict is Membership.OUTSIDE:
                continue
            if _norm_on_endpoint(pres, m, n):
                continue
            if k > 4096:
                continue
            scheduled.setdefault(s + 4, []).append((m, n, 2 * k))


def diagram_enumerate(pres: PresentationHandle) -> NameStream:
    """The canonical name of a presentation, replayable."""
    return NameStream(lambda: diagram_pairs(pres), source=pres,
                      label=f"diagram({pres.source.label})")


def _norm_on_endpoint(pres: PresentationHandle, m: VectorCode, n: IntervalCode) -> bool:
    """Exact check for a norm sitting precisely on an interval endpoint."""
    mass = pres.p_mass_exact(pres.vector(decode_vector(m)))
    if mass is None or pres.p.exact is None:
        return False
    for endpoint in interval_decode(n):
        if endpoint < 0:
            continue
        target = pow_exact(abs(endpoint), pres.p.exact)
        if target is not None and target == mass:
            return True
    return False


# ---------------------------------------------------------------------------
# seminorm readings from raw streams


@dataclass
class SeminormReading:
    status: str  # "ok" | "incomplete" | "inconsistent"
    lower: Fraction
    upper: Optional[Fraction]  # None encodes +infinity
    enclosure: Optional[Enclosure] = None


def seminorm_from_name(f: NameStream, g: VectorCode, k: int, stage: int) -> SeminormReading:
    """Best seminorm bounds a stream prefix certifies for a vector code.

    The upper reading is the least right endpoint over intervals the stream
    attaches to g, the lower reading the greatest left endpoint; a genuine
    diagram squeezes these onto the norm, garbage may cross them.
    """
    lower = Fraction(0)
    upper: Optional[Fraction] = None
    for m, n in f.prefix(stage):
        if m != g:
            continue
        lo, hi = interval_decode(n)
        lower = max(lower, lo)
        upper = hi if upper is None else min(upper, hi)
    if upper is not None and lower > upper:
        return SeminormReading("inconsistent", lower, upper)
    if upper is None or upper - lower > Fraction(1, 1 << k):
        return SeminormReading("incomplete", lower, upper)
    return SeminormReading("ok", lower, upper, Enclosure(max(lower, Fraction(0)), upper))


# ---------------------------------------------------------------------------
# a total catalog of names


_CATALOG: dict[int, Callable[[], NameStream]] = {}


def register_name(index: int, factory: Callable[[], NameStream]) -> None:
    _CATALOG[index] = factory


def name_of_index(e: int) -> NameStream:
    """Total by construction: unknown indices name the empty stream."""
    factory = _CATALOG.get(e)
    if factory is None:
        return NameStream.from_pairs([], label=f"empty({e})")
    return factory()


def _install_default_catalog() -> None:
    defaults: list[tuple[int, Callable[[], NameStream]]] = [
        (0, lambda: NameStream.from_pairs([], label="zero")),
        (1, lambda: diagram_enumerate(standard_presentation("lpn", 2, Fraction(2)))),
        (2, lambda: diagram_enumerate(standard_presentation("lp01", None, Fraction(2)))),
        (3, lambda: diagram_enumerate(standard_presentation("lp", None, Fraction(3)))),
    ]
    for idx, fac in defaults:
        register_name(idx, fac)


_install_default_catalog()
