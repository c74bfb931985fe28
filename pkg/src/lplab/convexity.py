"""Uniform convexity of p-norms and exponent recovery from diagrams.

The modulus of convexity of a p-norm admits two defining formulas: a
closed form for p >= 2 and an implicit equation for 1 < p <= 2.  Both
are evaluated here to arbitrary rational precision, together with the
extremal two-dimensional vector pairs that realize the modulus.  On top
of those sit the diagram-side consumers:

  * exponent_cut_step scans a diagram prefix for judgment triples that
    certify "the modulus of the named space at eps = 1 lies strictly
    below that of a candidate exponent r", the acceptance test behind
    the Dedekind-cut enumerations of the exponent;
  * estimate_exponent combines both cut enumerations with a
    disjointness probe (readings of u, v, u+v, u-v, u+2v for near-unit
    pairs, matched against the p-additivity profile of disjoint
    vectors) into a rational interval for the exponent;
  * hilbert_check and hilbert_dimension detect parallelogram-law
    failures and count orthogonal directions by exact Gram elimination.

All certifications go through rational enclosures, so a returned
verdict never depends on floating-point rounding.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence, Union

from .coding import VectorCode, encode_vector, vec_add, vec_scale, vec_sub
from .enclosures import (
    DomainError,
    Enclosure,
    pow_enclosure,
    pow_enclosure_interval,
    pow_exact,
)
from .monitors import DiagramIndex, _index_for, parallelogram_witness
from .presentations import (
    Exponent,
    NameStream,
    PresentationHandle,
    Rat,
    StepVector,
    standard_presentation,
)

__all__ = [
    "delta",
    "delta_closed_form",
    "delta_bisection",
    "hanner_witnesses",
    "hanner_certify",
    "WitnessCertificate",
    "exponent_cut_step",
    "CutVerdict",
    "CutState",
    "estimate_exponent",
    "ExponentEstimate",
    "hilbert_check",
    "HilbertVerdict",
    "hilbert_dimension",
    "DimensionVerdict",
    "NotHilbert",
]


# ---------------------------------------------------------------------------
# modulus of uniform convexity


def _half(k: int) -> Fraction:
    return Fraction(1, 1 << k)


def _clamp_unit(enc: Enclosure) -> Enclosure:
    # the modulus lives in [0, 1]; enclosure slack may poke past either end
    return Enclosure(max(Fraction(0), min(enc.lo, Fraction(1))),
                     min(Fraction(1), max(enc.hi, Fraction(0))))


def delta_closed_form(p: Rat, eps: Rat, k: int) -> Enclosure:
    """delta(p, eps) = 1 - (1 - (eps/2)^p)^(1/p), valid for p >= 2."""
    p, eps = Fraction(p), Fraction(eps)
    if p < 2:
        raise DomainError("the closed form needs p >= 2")
    if not 0 < eps <= 2:
        raise DomainError("eps must lie in (0, 2]")
    half = eps / 2
    exact = pow_exact(half, p)
    kk = k + 4
    for _ in range(40):
        if exact is not None:
            body = Enclosure.point(max(Fraction(0), 1 - exact))
        else:
            t = pow_enclosure(half, p, kk)
            body = Enclosure(max(Fraction(0), 1 - t.hi), max(Fraction(0), 1 - t.lo))
        if body.is_point():
            root_exact = pow_exact(body.lo, 1 / p)
            if root_exact is not None:
                return Enclosure.point(1 - root_exact)
        root = pow_enclosure_interval(body, 1 / p, kk)
        out = _clamp_unit(Enclosure(1 - root.hi, 1 - root.lo))
        if out.width <= _half(k):
            return out
        kk *= 2
        if kk > 1 << 14:
            break
    raise DomainError("closed-form modulus failed to converge")


def _implicit_terms(d: Fraction, eps: Fraction) -> tuple[Fraction, Fraction]:
    return 1 - d + eps / 2, abs(1 - d - eps / 2)


def _implicit_sign(d: Fraction, p: Fraction, eps: Fraction, k: int) -> str:
    """Sign of (1-d+eps/2)^p + |1-d-eps/2|^p - 2 at a rational point.

    Returns "+", "-", "0" (an exact root), or "?" when enclosures at the
    precision cap still straddle zero.
    """
    a, b = _implicit_terms(d, eps)
    ea, eb = pow_exact(a, p), pow_exact(b, p)
    if ea is not None and eb is not None:
        total = ea + eb
        if total > 2:
            return "+"
        if total < 2:
            return "-"
        return "0"
    kk = k + 8
    for _ in range(6):
        total = pow_enclosure(a, p, kk) + pow_enclosure(b, p, kk)
        if total.lo > 2:
            return "+"
        if total.hi < 2:
            return "-"
        kk += 12
    return "?"


def delta_bisection(p: Rat, eps: Rat, k: int) -> Enclosure:
    """Root of the implicit modulus equation, valid for 1 < p <= 2.

    The left side is strictly decreasing in delta on [0, 1], positive at
    0 by strict convexity and nonpositive at 1, so plain bisection with
    certified signs encloses the unique root.
    """
    p, eps = Fraction(p), Fraction(eps)
    if not 1 < p <= 2:
        raise DomainError("the implicit form needs 1 < p <= 2")
    if not 0 < eps <= 2:
        raise DomainError("eps must lie in (0, 2]")
    if eps == 2:
        # both terms become (eps/2)^p = 1 at delta = 1, an exact root
        return Enclosure.point(Fraction(1))
    lo, hi = Fraction(0), Fraction(1)
    while hi - lo > _half(k):
        mid = (lo + hi) / 2
        sign = _implicit_sign(mid, p, eps, k)
        if sign == "+":
            lo = mid
        elif sign == "-":
            hi = mid
        elif sign == "0":
            return Enclosure.point(mid)
        else:
            # undecidable at the precision cap: the root clings to mid
            return Enclosure(max(Fraction(0), mid - _half(k + 1)),
                             min(Fraction(1), mid + _half(k + 1)))
    return Enclosure(lo, hi)


_delta_cache: dict[tuple[Fraction, Fraction, int], Enclosure] = {}


def _delta_exact(p: Fraction, eps: Fraction, k: int) -> Enclosure:
    key = (p, eps, k)
    got = _delta_cache.get(key)
    if got is None:
        got = delta_closed_form(p, eps, k) if p >= 2 else delta_bisection(p, eps, k)
        _delta_cache[key] = got
    return got


def _delta_range(a: Fraction, b: Fraction, eps: Fraction, k: int) -> Enclosure:
    """Hull of delta(q, eps) over q in [a, b], 1 < a <= b.

    The modulus increases in q up to 2 and decreases past 2, so the
    hull only needs endpoint values plus the peak when [a, b] straddles 2.
    """
    left = _delta_exact(a, eps, k)
    right = _delta_exact(b, eps, k)
    if b <= 2:
        return Enclosure(left.lo, right.hi)
    if a >= 2:
        return Enclosure(right.lo, left.hi)
    peak = _delta_exact(Fraction(2), eps, k)
    return Enclosure(min(left.lo, right.lo), peak.hi)


def delta(p: Union[Exponent, Rat], eps: Rat, k: int) -> Enclosure:
    """Enclosure of the modulus of convexity delta(p, eps), width <= 2^-k.

    Accepts an exact rational exponent or a refiner-backed one; the
    latter is refined until the value hull over its enclosure tightens.
    """
    eps = Fraction(eps)
    if not 0 < eps <= 2:
        raise DomainError("eps must lie in (0, 2]")
    exponent = Exponent.of(p)
    if exponent.exact is not None:
        if exponent.exact <= 1:
            raise DomainError("the modulus needs p > 1")
        return _delta_exact(exponent.exact, eps, k)
    m = max(k + 4, 10)
    while True:
        enc = exponent.enclosure(m)
        if enc.hi <= 1:
            raise DomainError("the modulus needs p > 1")
        if enc.lo > 1:
            out = _delta_range(enc.lo, enc.hi, eps, k + 1)
            if out.width <= _half(k):
                return out
        m *= 2
        if m > 1 << 20:
            raise DomainError("exponent refiner too coarse to pin the modulus")


# ---------------------------------------------------------------------------
# extremal witness pairs in the two-dimensional sequence space


@dataclass(frozen=True)
class WitnessCertificate:
    """Oracle readings for a claimed extremal pair, plus pass/fail flags."""

    ok: bool
    unit_u: Enclosure
    unit_v: Enclosure
    gap: Enclosure          # ||u - v||
    shallowness: Enclosure  # 1 - ||u + v|| / 2
    checks: dict


def _dyadic_round(q: Fraction, bits: int) -> Fraction:
    scaled = q * (1 << bits)
    return Fraction(round(scaled), 1 << bits)


def hanner_certify(p: Union[Exponent, Rat], eps: Rat,
                   u: Sequence[Rat], v: Sequence[Rat], k: int) -> WitnessCertificate:
    """Check a rational pair against the extremality contract at precision k.

    The two-dimensional p-norm oracle must certify near-unit norms, a
    separation within 2^-k of eps, and midpoint shallowness within
    2^(1-k) of the modulus.
    """
    eps = Fraction(eps)
    handle = standard_presentation("lpn", 2, p)
    uu = [Fraction(c) for c in u]
    vv = [Fraction(c) for c in v]
    kk = k + 4
    nu = handle.norm_vec(uu, kk)
    nv = handle.norm_vec(vv, kk)
    ndiff = handle.norm_vec(vec_sub(tuple(uu), tuple(vv)), kk)
    nsum = handle.norm_vec(vec_add(tuple(uu), tuple(vv)), kk)
    shallow = Enclosure((2 - nsum.hi) / 2, (2 - nsum.lo) / 2)
    d_enc = delta(p, eps, k + 2)
    tol, tol2 = _half(k), _half(k - 1)
    checks = {
        "unit-u": 1 - tol < nu.lo and nu.hi < 1 + tol,
        "unit-v": 1 - tol < nv.lo and nv.hi < 1 + tol,
        "gap": eps - tol < ndiff.lo and ndiff.hi < eps + tol,
        "shallowness": (shallow.hi < d_enc.lo + tol2
                        and shallow.lo > d_enc.hi - tol2),
    }
    return WitnessCertificate(all(checks.values()), nu, nv, ndiff, shallow, checks)


def hanner_witnesses(p: Union[Exponent, Rat], eps: Rat,
                     k: int) -> tuple[VectorCode, VectorCode]:
    """Codes of a certified extremal pair for the modulus at (p, eps).

    For p >= 2 the pair is (1-d, eps/2) and its reflection; for p < 2
    both coordinates spread the slack and the pair swaps them, scaled to
    unit norm.  d is a dyadic approximant of the modulus, retried at
    higher precision until hanner_certify passes.
    """
    eps = Fraction(eps)
    if not 0 < eps <= 2:
        raise DomainError("eps must lie in (0, 2]")
    exponent = Exponent.of(p)
    upper_branch = (exponent.exact is not None and exponent.exact >= 2) or \
        (exponent.exact is None and exponent.enclosure(12).hi >= 2)
    kk = k + 6
    for _ in range(5):
        d = _dyadic_round(delta(exponent, eps, kk).mid, kk + 4)
        d = max(Fraction(0), min(Fraction(1), d))
        if upper_branch:
            u = (1 - d, eps / 2)
            v = (1 - d, -eps / 2)
        else:
            scale = _dyadic_round(
                exponent.root_interval(Enclosure.point(Fraction(1, 2)), kk + 4).mid,
                kk + 4)
            u = (scale * (1 - d + eps / 2), scale * (1 - d - eps / 2))
            v = (u[1], u[0])
        cert = hanner_certify(exponent, eps, u, v, k)
        if cert.ok:
            return encode_vector(u), encode_vector(v)
        kk += 10
    raise DomainError("no extremal pair certified at the requested precision")


# ---------------------------------------------------------------------------
# cut acceptance: judgment triples certifying delta(p, 1) < delta(r, 1)


@dataclass(frozen=True)
class CutVerdict:
    kind: str  # "accepted-into-Y" | "not-yet"
    stage: int
    witness: Optional[dict] = None

    @property
    def accepted(self) -> bool:
        return self.kind == "accepted-into-Y"


_UNIT_CODE_CAP = 48


def _exceeds_two_minus_two_delta(r: Fraction, r_prime: Fraction) -> bool:
    """Certified r_prime > 2(1 - delta(r, 1)); ambiguity counts as no."""
    target = 1 - r_prime / 2  # need delta(r, 1) > target
    if target < 0:
        return True
    for kk in (8, 16, 24, 32):
        enc = _delta_exact(r, Fraction(1), kk)
        if enc.lo > target:
            return True
        if enc.hi <= target:
            return False
    return False


def _left_endpoint_set(index: DiagramIndex, vec: tuple) -> set:
    # a norm judgment may arrive under either sign of the vector
    lefts = set(index.left_endpoints(encode_vector(vec)))
    lefts.update(index.left_endpoints(encode_vector(vec_scale(Fraction(-1), vec))))
    return lefts


def _cut_scan(index: DiagramIndex, r: Fraction) -> CutVerdict:
    units = [m for m in index.codes() if index.holds_gt(m, Fraction(1))]
    units = units[:_UNIT_CODE_CAP]
    rights = {m: {hi for hi in index.right_endpoints(m) if hi > 1} for m in units}
    for m0, m1 in itertools.combinations(units, 2):
        common = rights[m0] & rights[m1]
        if not common:
            continue
        v0, v1 = index.vector(m0), index.vector(m1)
        if v0 == v1:
            continue
        for hi in sorted(common):
            r0 = hi - 1
            gap = 1 + 2 * r0
            diff_holds = (index.holds_gt(encode_vector(vec_sub(v0, v1)), gap)
                          or index.holds_gt(encode_vector(vec_sub(v1, v0)), gap))
            if not diff_holds:
                continue
            sum_lefts = _left_endpoint_set(index, vec_add(v0, v1))
            for lo in sorted(sum_lefts, reverse=True):
                r_prime = lo - 2 * r0
                if r_prime <= 0:
                    continue
                if _exceeds_two_minus_two_delta(r, r_prime):
                    witness = {"tau0": m0, "tau1": m1, "r0": r0, "r_prime": r_prime}
                    return CutVerdict("accepted-into-Y", index.stage, witness)
    return CutVerdict("not-yet", index.stage)


def exponent_cut_step(f: NameStream, r: Rat, stage: int) -> CutVerdict:
    """One acceptance test of candidate r against the diagram prefix.

    Accepted means the prefix contains codes tau0, tau1 and a rational
    r0 with judgments "1 < ||tau_j|| < 1 + r0" (both endpoints exact),
    "||tau0 - tau1|| > 1 + 2 r0", and "||tau0 + tau1|| > r' + 2 r0" for
    some r' certified above 2(1 - delta(r, 1)).  Acceptance is permanent:
    the scan is deterministic over a growing prefix.
    """
    r = Fraction(r)
    if r <= 1:
        raise DomainError("cut candidates must exceed 1")
    return _cut_scan(_index_for(DiagramIndex, f, stage), r)


# ---------------------------------------------------------------------------
# disjointness probe: reading-level recovery of the additivity exponent


_PROBE_UNIT_SLACK = Fraction(1, 32)
_PROBE_READING_CAP = Fraction(1, 8)
_PROBE_Q_MAX = Fraction(16)
_PROBE_TUPLE_CAP = 12
_PROBE_PREC = 22


@lru_cache(maxsize=65536)
def _pow_lo(base: Fraction, q: Fraction) -> Fraction:
    return pow_enclosure(base, q, _PROBE_PREC).lo


@lru_cache(maxsize=65536)
def _pow_hi(base: Fraction, q: Fraction) -> Fraction:
    return pow_enclosure(base, q, _PROBE_PREC).hi


def _disjoint_prediction(units: tuple, coeff: Fraction, q: Fraction) -> Enclosure:
    """Norm range of x + coeff*y for disjoint x, y with given unit readings."""
    (la, ua), (lb, ub) = units
    lo_q = _pow_lo(la, q) + _pow_lo(coeff * lb, q)
    hi_q = _pow_hi(ua, q) + _pow_hi(coeff * ub, q)
    return pow_enclosure_interval(Enclosure(lo_q, hi_q), 1 / q, _PROBE_PREC)


def _consistent_at(q: Fraction, units: tuple, readings: dict) -> bool:
    for coeff, (lo, hi) in readings.items():
        pred = _disjoint_prediction(units, coeff, q)
        if hi < pred.lo or lo > pred.hi:
            return False
    return True


@dataclass(frozen=True)
class ProbeReading:
    codes: tuple
    q_lo: Fraction
    q_hi: Fraction


def _reading(index: DiagramIndex, vec: tuple) -> Optional[tuple[Fraction, Fraction]]:
    best_lo, best_hi = Fraction(0), None
    for w in (vec, vec_scale(Fraction(-1), vec)):
        m = encode_vector(w)
        best_lo = max(best_lo, index.lower(m))
        hi = index.upper(m)
        if hi is not None and (best_hi is None or hi < best_hi):
            best_hi = hi
    if best_hi is None or best_hi - best_lo > _PROBE_READING_CAP:
        return None
    return best_lo, best_hi


def _probe_tuple_range(units: tuple, readings: dict) -> Optional[tuple[Fraction, Fraction]]:
    grid = [1 + Fraction(i, 4) for i in range(0, int(4 * (_PROBE_Q_MAX - 1)) + 1)]
    flags = [_consistent_at(q, units, readings) for q in grid]
    if not any(flags):
        return None
    first = flags.index(True)
    last = len(flags) - 1 - flags[::-1].index(True)

    def refine(bad: Fraction, good: Fraction) -> Fraction:
        # shrink toward the boundary, reporting the outer (bad) endpoint
        while abs(good - bad) > Fraction(1, 256):
            mid = (bad + good) / 2
            if _consistent_at(mid, units, readings):
                good = mid
            else:
                bad = mid
        return bad

    q_lo = Fraction(1) if first == 0 else refine(grid[first - 1], grid[first])
    q_hi = Fraction(64) if last == len(grid) - 1 else refine(grid[last + 1], grid[last])
    return q_lo, q_hi


def _disjointness_probe(index: DiagramIndex) -> tuple[Optional[tuple], list[ProbeReading]]:
    units = []
    for m in index.codes():
        lo, hi = index.lower(m), index.upper(m)
        if hi is None:
            continue
        if lo >= 1 - _PROBE_UNIT_SLACK and hi <= 1 + _PROBE_UNIT_SLACK:
            units.append(m)
        if len(units) >= _UNIT_CODE_CAP:
            break
    tuples: list[ProbeReading] = []
    for a, b in itertools.combinations(units, 2):
        va, vb = index.vector(a), index.vector(b)
        if va == vb or va == vec_scale(Fraction(-1), vb):
            continue
        r_sum = _reading(index, vec_add(va, vb))
        r_diff = _reading(index, vec_sub(va, vb))
        if r_sum is None or r_diff is None:
            continue
        r_skew = _reading(index, vec_add(va, vec_scale(Fraction(2), vb)))
        if r_skew is None:
            r_skew = _reading(index, vec_add(vec_scale(Fraction(2), va), vb))
        if r_skew is None:
            continue
        unit_pair = ((index.lower(a), index.upper(a)), (index.lower(b), index.upper(b)))
        # a disjoint pair satisfies ||x - y|| = ||x + y||, so the diff
        # reading is matched against the same prediction as the sum
        span = _probe_tuple_range(unit_pair, {
            Fraction(1): r_sum,
            Fraction(2): r_skew,
        })
        if span is None:
            continue
        diff_span = _probe_tuple_range(unit_pair, {Fraction(1): r_diff})
        if diff_span is None:
            continue
        lo, hi = max(span[0], diff_span[0]), min(span[1], diff_span[1])
        if lo > hi:
            continue
        tuples.append(ProbeReading((a, b), lo, hi))
        if len(tuples) >= _PROBE_TUPLE_CAP:
            break
    if not tuples:
        return None, []
    lo = max(t.q_lo for t in tuples)
    hi = min(t.q_hi for t in tuples)
    if lo > hi:
        return None, tuples
    return (lo, hi), tuples


# ---------------------------------------------------------------------------
# the estimator


@dataclass(frozen=True)
class CutState:
    """Evidence from one cut enumeration side, monotone in the budget."""

    side: str  # "right" | "left"
    accepted: tuple
    y_accepted: tuple
    tested: tuple


@dataclass(frozen=True)
class ExponentEstimate:
    kind: str  # "interval" | "indeterminate-at-budget"
    lo: Optional[Fraction]
    hi: Optional[Fraction]
    right_cut: CutState
    left_cut: CutState
    probe: Optional[tuple]
    budget: int
    hilbert_evidence: str
    notes: tuple = ()

    @property
    def indeterminate(self) -> bool:
        return self.kind != "interval"

    @property
    def width(self) -> Optional[Fraction]:
        if self.lo is None or self.hi is None:
            return None
        return self.hi - self.lo


_RIGHT_COARSE = tuple(Fraction(8 + i, 8) for i in range(7, 0, -1))
_RIGHT_EDGE = (Fraction(17, 16), Fraction(33, 32), Fraction(65, 64))
_LEFT_COARSE = tuple(Fraction(16 + i, 8) for i in range(1, 17)) + (
    Fraction(9, 2), Fraction(5), Fraction(6), Fraction(8))


def _refine_boundary(index: DiagramIndex, anchor: Fraction, step_down: bool,
                     accepted: set, tested: list) -> None:
    """Test 1/64-grid candidates just past an acceptance boundary."""
    direction = -1 if step_down else 1
    for i in range(1, 8):
        r = anchor + direction * Fraction(i, 64)
        if r <= 1:
            break
        if r in accepted or r in set(tested):
            continue
        tested.append(r)
        if _cut_scan(index, r).accepted:
            accepted.add(r)


def estimate_exponent(f: NameStream, tol: Rat, budget: int) -> ExponentEstimate:
    """Rational interval for the exponent named by f, or an honest refusal.

    Requires a presentation of dimension at least 2 behind the name;
    one-dimensional spaces carry no separated unit pairs, so every cut
    candidate stays unaccepted and the estimate comes back indeterminate.

    The interval combines the disjointness probe with the two cut
    enumerations.  Cut acceptances are two-sided facts (the modulus of
    the named exponent lies below that of the candidate), so they only
    tighten the side the probe has already settled; without a probe the
    cuts alone cannot tell an exponent from its equal-modulus mirror
    across 2 and the result is indeterminate.
    """
    tol = Fraction(tol)
    index = _index_for(DiagramIndex, f, budget)
    probe, tuples = _disjointness_probe(index)

    right_tested = [r for r in _RIGHT_COARSE + _RIGHT_EDGE]
    right_y = {r for r in right_tested if _cut_scan(index, r).accepted}
    if right_y:
        _refine_boundary(index, min(right_y), True, right_y, right_tested)
    left_tested = [r for r in _LEFT_COARSE]
    left_y = {r for r in left_tested if _cut_scan(index, r).accepted}
    if left_y:
        _refine_boundary(index, max(left_y), False, left_y, left_tested)

    # assemble the reported cut sets: the right cut carries its above-2
    # tail unconditionally, the left cut claims nothing until the probe
    # certifies which side of 2 the exponent sits on
    probe_lo = probe[0] if probe else None
    probe_hi = probe[1] if probe else None
    right_accepted = set(right_y)
    right_accepted.update(r for r in left_tested)
    left_accepted = set()
    if probe_lo is not None and probe_lo >= 2:
        left_accepted.update(left_y)
    if probe_hi is not None and probe_hi >= 2:
        left_accepted.update(r for r in right_tested)

    right_cut = CutState("right", tuple(sorted(right_accepted)),
                         tuple(sorted(right_y)), tuple(sorted(right_tested)))
    left_cut = CutState("left", tuple(sorted(left_accepted)),
                        tuple(sorted(left_y)), tuple(sorted(left_tested)))

    witness = parallelogram_witness(f, min(budget, 5000))
    hilbert_evidence = ("parallelogram-violation" if witness is not None
                        else "no-violation-observed")

    notes: list[str] = []
    if probe is None:
        notes.append("no-disjointness-probe")
        return ExponentEstimate("indeterminate-at-budget", None, None,
                                right_cut, left_cut, None, budget,
                                hilbert_evidence, tuple(notes))

    lo, hi = probe
    if hi <= 2 and right_y:
        # below 2 an acceptance of r certifies exponent < r
        hi = min(hi, min(right_y))
    if lo >= 2 and left_y:
        # above 2 an acceptance of r certifies exponent > r
        lo = max(lo, max(left_y))
    if lo > hi:
        notes.append("probe-cut-conflict")
        return ExponentEstimate("indeterminate-at-budget", None, None,
                                right_cut, left_cut, probe, budget,
                                hilbert_evidence, tuple(notes))
    kind = "interval" if hi - lo <= tol else "indeterminate-at-budget"
    if kind != "interval":
        notes.append("interval-wider-than-tol")
    return ExponentEstimate(kind, lo, hi, right_cut, left_cut, probe,
                            budget, hilbert_evidence, tuple(notes))


# ---------------------------------------------------------------------------
# parallelogram detection and dimension counting


@dataclass(frozen=True)
class HilbertVerdict:
    kind: str  # "no-violation" | "violation"
    stage: int
    witness: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.kind == "no-violation"


def hilbert_check(f: NameStream, stage: int) -> HilbertVerdict:
    """Scan the diagram prefix for a certified parallelogram failure.

    A clean result is stage-relative only; a violation names the two
    codes, their sum and difference codes, and the four bounds whose
    squares witness the strict gap.
    """
    found = parallelogram_witness(f, stage)
    if found is None:
        return HilbertVerdict("no-violation", stage)
    kind, a, b, m_sum, m_diff = found
    index = _index_for(DiagramIndex, f, stage)
    if kind == "flat":
        bounds = {"r0": index.upper(m_sum), "r1": index.upper(m_diff),
                  "r2": index.lower(a), "r3": index.lower(b)}
    else:
        bounds = {"r0": index.lower(m_sum), "r1": index.lower(m_diff),
                  "r2": index.upper(a), "r3": index.upper(b)}
    witness = {"kind": kind, "tau0": a, "tau1": b,
               "sum": m_sum, "diff": m_diff, **bounds}
    return HilbertVerdict("violation", stage, witness)


class NotHilbert(DomainError):
    """The presentation certifiably fails to be an inner-product space."""


@dataclass(frozen=True)
class DimensionVerdict:
    kind: str  # "at-least" | "exactly" | "indeterminate"
    value: int
    checked: int


def _sq(enc: Enclosure) -> Enclosure:
    return Enclosure(enc.lo * enc.lo, enc.hi * enc.hi)


def _parallelogram_guard(handle: PresentationHandle, u: StepVector,
                         v: StepVector, k: int = 12) -> None:
    """Raise NotHilbert when the norm oracle separates the two sides."""
    left = _sq(handle.norm_step(u.plus(v), k)) + _sq(handle.norm_step(u.plus(v.scaled(Fraction(-1))), k))
    right = (_sq(handle.norm_step(u, k)) + _sq(handle.norm_step(v, k))).scale(2)
    if left.separated_from(right):
        raise NotHilbert("parallelogram law fails on distinguished vectors")


def hilbert_dimension(pres: PresentationHandle, n: int, budget: int) -> DimensionVerdict:
    """Count orthogonal directions among distinguished vectors.

    Inner products are the exact bilinear masses of step vectors, so
    Gram elimination runs over rationals and a positive residual is a
    certified new direction.  Exact structural summaries close the
    world and allow Exactly(m); open-world scans can only certify
    AtLeast(n) or abstain.
    """
    if n < 0:
        raise DomainError("dimension thresholds are naturals")
    if pres.p.excludes(2):
        raise NotHilbert("certified exponent differs from 2")
    summary = pres.summary(max(16, min(budget, 64)))

    scan_cap = max(2 * n + 8, 16)
    points = [pres.point(i) for i in range(min(budget, scan_cap))]
    for w in points[1:5]:
        _parallelogram_guard(pres, points[0], w)

    if summary.atoms_infinite or any(c.mass > 0 for c in summary.nonatomic):
        # infinitely many disjoint positive-mass pieces, each a new direction
        return DimensionVerdict("at-least", n, len(points))

    basis: list[StepVector] = []
    norms: list[Fraction] = []
    rank = 0
    for w in points:
        residual = w
        for ob, mass in zip(basis, norms):
            coeff = pres.dot_mass(residual, ob) / mass
            if coeff:
                residual = residual.plus(ob.scaled(-coeff))
        mass = pres.dot_mass(residual, residual)
        if mass > 0:
            basis.append(residual)
            norms.append(mass)
            rank += 1
            if rank >= n and not summary.exact:
                return DimensionVerdict("at-least", n, len(points))

    if summary.exact:
        dim = len([a for a in summary.atoms if a.mass > 0])
        if rank > dim:
            raise NotHilbert("rank exceeds the certified atom count")
        return (DimensionVerdict("at-least", n, len(points)) if dim >= n
                else DimensionVerdict("exactly", dim, len(points)))
    if rank >= n:
        return DimensionVerdict("at-least", n, len(points))
    return DimensionVerdict("indeterminate", rank, len(points))
