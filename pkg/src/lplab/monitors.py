"""Finite-stage judgments and stage-bounded monitors for name streams.

A name stream claims facts about a would-be presentation: a diagram stream
emits (vector code, interval code) pairs, a fact stream emits codes of finite
fact sets (tree or chain facts), and an exponent name emits (k, interval
code) pairs.  Monitors fold over stream prefixes and either report
OkAtStage with progress metrics or a Violation with a finite witness.
A Violation certifies joint inconsistency of the streams; OkAtStage never
asserts the limit property, because most clauses quantify over all stages.

Judgments use the literal acceptance clauses: a strict norm bound holds at a
stage only when the stated rational is exactly an endpoint of an emitted
interval.  Structural clauses that quantify over the whole fact stream
(prefix closure, refinement closure, pairwise separation of ball sets) can
only be falsified once that stream is exhausted; before that they contribute
progress metrics.  Witness searches are budgeted by the stage, one bounded
scan per stage, so a monitor call costs O(stage) stream pulls plus a bounded
amount of desk work.
"""

from __future__ import annotations

import itertools
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import isqrt
from typing import Optional, Sequence

from .coding import (
    Node,
    Vector,
    ball_decode,
    decode_vector,
    encode_vector,
    factset_decode,
    interval_decode,
    node_decode,
    node_encode,
    strip_vector,
    vec_add,
    vec_scale,
    vec_sub,
)
from .enclosures import DomainError, Enclosure, enclosure_sum
from .presentations import Exponent, IntStream, NameStream

OK = "ok"
VIOLATION = "violation"

BALL_CAP = 8
NODE_CAP = 128
POWER_PRECISION = 30


@dataclass
class MonitorVerdict:
    outcome: str
    stage: int
    clause: Optional[str] = None
    witness: object = None
    progress: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.outcome == OK


def _ok(stage: int, **progress) -> MonitorVerdict:
    return MonitorVerdict(OK, stage, progress=progress)


def _violation(stage: int, clause: str, witness, **progress) -> MonitorVerdict:
    return MonitorVerdict(VIOLATION, stage, clause, witness, progress)


def _pair_budget(stage: int) -> int:
    """How many distinct codes the quadratic witness scans may touch."""
    return 4 * isqrt(max(stage, 0)) + 16


def _shrink_level(bound: Optional[Fraction]) -> int:
    """Largest k <= 60 with bound <= 2^-k; 0 when nothing is certified."""
    if bound is None or bound > 1:
        return 0
    if bound <= 0:
        return 60
    k = 0
    while k < 60 and bound <= Fraction(1, 1 << (k + 1)):
        k += 1
    return k


class DiagramIndex:
    """Interval readings per vector code, drawn from a diagram prefix.

    lower/upper are the best certified bounds the prefix provides, while
    holds_lt/holds_gt are the literal judgment clauses (exact endpoints).
    """

    def __init__(self, f: NameStream, stage: int):
        self.stage = stage
        self.intervals: dict[int, list[tuple[Fraction, Fraction]]] = {}
        self.order: list[int] = []
        for m, n in f.prefix(stage):
            if m not in self.intervals:
                self.intervals[m] = []
                self.order.append(m)
            self.intervals[m].append(interval_decode(n))
        self._vectors: dict[int, Vector] = {}
        self._dist: dict = {}

    def codes(self) -> list[int]:
        return list(self.order)

    def vector(self, m: int) -> Vector:
        if m not in self._vectors:
            self._vectors[m] = decode_vector(m)
        return self._vectors[m]

    def lower(self, m: int) -> Fraction:
        """Best certified lower bound on the norm named by code m (>= 0)."""
        best = Fraction(0)
        for lo, _ in self.intervals.get(m, ()):
            if lo > best:
                best = lo
        return best

    def upper(self, m: int) -> Optional[Fraction]:
        best = None
        for _, hi in self.intervals.get(m, ()):
            if best is None or hi < best:
                best = hi
        return best

    def holds_lt(self, m: int, r: Fraction) -> bool:
        """The judgment clause: some emitted interval ends exactly at r."""
        return any(hi == r for _, hi in self.intervals.get(m, ()))

    def holds_gt(self, m: int, r: Fraction) -> bool:
        return any(lo == r for lo, _ in self.intervals.get(m, ()))

    def left_endpoints(self, m: int) -> list[Fraction]:
        return sorted({lo for lo, _ in self.intervals.get(m, ())})

    def right_endpoints(self, m: int) -> list[Fraction]:
        return sorted({hi for _, hi in self.intervals.get(m, ())})

    def _dist_codes(self, c0: Vector, c1: Vector) -> tuple[int, int]:
        # center pairs repeat across clauses; encoding dominates, so memoize.
        # Keys are object ids, cheap where hashing rational tuples is not;
        # decode_vector interns centers, and each entry pins its tuples so
        # a live key can never be recycled.
        key = (id(c0), id(c1))
        got = self._dist.get(key)
        if got is not None and got[0] is c0 and got[1] is c1:
            return got[2], got[3]
        fwd = encode_vector(vec_sub(c0, c1))
        rev = encode_vector(vec_sub(c1, c0))
        self._dist[key] = (c0, c1, fwd, rev)
        self._dist[(id(c1), id(c0))] = (c1, c0, rev, fwd)
        return fwd, rev

    def best_upper(self, fwd: int, rev: int) -> Optional[Fraction]:
        a = self.upper(fwd)
        b = self.upper(rev)
        if a is None:
            return b
        return a if b is None else min(a, b)

    def best_lower(self, fwd: int, rev: int) -> Fraction:
        return max(self.lower(fwd), self.lower(rev))

    def dist_upper(self, c0: Vector, c1: Vector) -> Optional[Fraction]:
        """Best upper reading on ||c0 - c1||, trying both difference codes."""
        return self.best_upper(*self._dist_codes(c0, c1))

    def dist_lower(self, c0: Vector, c1: Vector) -> Fraction:
        return self.best_lower(*self._dist_codes(c0, c1))


@dataclass(frozen=True)
class BallInfo:
    code: int
    center: Vector
    radius: Fraction
    center_code: int


class FactIndex:
    """Facts parsed out of the fact-set codes a tree or chain name emitted.

    Membership judgments look only at singleton sets; the structural checks
    treat every member of every emitted set as a claimed fact.
    """

    def __init__(self, g: IntStream, stage: int):
        self.stage = stage
        self.facts: set[tuple[int, int]] = set()
        self.singletons: set[tuple[int, int]] = set()
        for code in g.prefix(stage):
            members = factset_decode(code)
            self.facts.update(members)
            if len(members) == 1:
                self.singletons.add(members[0])
        self.exhausted = g.exhausted_within(stage)
        self._balls: Optional[dict[Node, list[BallInfo]]] = None

    def ball_table(self) -> dict[Node, list[BallInfo]]:
        """Tree-name view: fact (a, b) attaches ball b to node a."""
        if self._balls is None:
            table: dict[Node, list[BallInfo]] = {}
            for a, b in self.facts:
                center_code, radius = ball_decode(b)
                ball = BallInfo(b, decode_vector(center_code), radius, center_code)
                table.setdefault(node_decode(a), []).append(ball)
            for lst in table.values():
                lst.sort(key=lambda ball: (ball.radius, ball.code))
            self._balls = table
        return self._balls

    def tree_nodes(self) -> list[Node]:
        return sorted(self.ball_table(), key=lambda nu: (len(nu), nu))

    def chain_members(self, n: int) -> list[Node]:
        """Chain-name view: fact (n, a) puts node a on the n-th chain."""
        return sorted({node_decode(a) for c, a in self.facts if c == n},
                      key=lambda nu: (len(nu), nu))

    def chain_indices(self) -> list[int]:
        return sorted({c for c, _ in self.facts})


_INDEX_MEMO: "OrderedDict[tuple, tuple]" = OrderedDict()
_INDEX_MEMO_CAP = 48


def _index_for(cls, stream, stage: int):
    """Shared index construction: a replayable stream determines its prefix,
    so the (stream, stage) index is immutable and safe to reuse."""
    key = (cls, id(stream), stage)
    got = _INDEX_MEMO.get(key)
    if got is not None and got[0] is stream:
        _INDEX_MEMO.move_to_end(key)
        return got[1]
    index = cls(stream, stage)
    _INDEX_MEMO[key] = (stream, index)
    while len(_INDEX_MEMO) > _INDEX_MEMO_CAP:
        _INDEX_MEMO.popitem(last=False)
    return index


def _distinct_centers(lst: list[BallInfo]) -> list[BallInfo]:
    """Drop balls dominated by an earlier same-center ball.

    Ball lists arrive sorted by radius, so the survivor has the smallest
    radius on its center.  A dominated ball separates, certifies, or
    substitutes only when its survivor already does, and it fails formal
    refutation only when its survivor fails, so the quantifier outcomes
    over the thinned list are unchanged.
    """
    seen = set()
    out = []
    for ball in lst:
        if ball.center_code not in seen:
            seen.add(ball.center_code)
            out.append(ball)
    return out


@dataclass(frozen=True)
class Term:
    """Formal combination sum_j alpha_j v_j + sum_nu beta_nu phi(nu).

    pres_part carries coefficients on the distinguished vectors, tree_part
    on the tree constants.  Terms of the plain presentation language have
    empty tree_part.
    """

    pres_part: tuple[tuple[int, Fraction], ...] = ()
    tree_part: tuple[tuple[Node, Fraction], ...] = ()

    @staticmethod
    def make(pres: Optional[dict] = None, tree: Optional[dict] = None) -> "Term":
        pp = tuple(sorted((int(j), Fraction(a))
                          for j, a in (pres or {}).items() if a != 0))
        tp = tuple(sorted((tuple(nu), Fraction(b))
                          for nu, b in (tree or {}).items() if b != 0))
        return Term(pp, tp)

    @staticmethod
    def from_vector(coeffs: Sequence[Fraction]) -> "Term":
        return Term.make({j: Fraction(c) for j, c in enumerate(coeffs)})

    def pres_vector(self) -> Vector:
        size = max((j for j, _ in self.pres_part), default=-1) + 1
        out = [Fraction(0)] * size
        for j, alpha in self.pres_part:
            out[j] = alpha
        return strip_vector(out)


def _substitutions(index: DiagramIndex, gindex: FactIndex, term: Term):
    """Yield (substituted vector code, slack) over capped ball choices.

    Each tree constant is replaced by the center of one of its named balls;
    the slack sum |beta| * radius bounds the substitution error.
    """
    balls = gindex.ball_table()
    choices = []
    for nu, _ in term.tree_part:
        available = _distinct_centers(balls.get(nu, [])[:BALL_CAP])
        if not available:
            return
        choices.append(available)
    base = term.pres_vector()
    betas = [beta for _, beta in term.tree_part]
    for combo in itertools.product(*choices):
        slack = Fraction(0)
        vec = base
        for beta, ball in zip(betas, combo):
            slack += abs(beta) * ball.radius
            vec = vec_add(vec, vec_scale(beta, ball.center))
        yield encode_vector(vec), slack


def judge(streams: Sequence, term: Optional[Term], atom: tuple, stage: int) -> bool:
    """Stage-bounded check of one formal judgment; True means Holds.

    streams[0] is the diagram stream; atoms about tree or chain facts read
    the last stream.  Atom forms: ("norm_lt", r), ("norm_gt", r),
    ("in_S", node), ("in_C", n, node).  Holds is monotone in the stage.
    """
    kind = atom[0]
    if kind in ("norm_lt", "norm_gt"):
        if term is None:
            raise ValueError("norm judgments need a term")
        index = _index_for(DiagramIndex, streams[0], stage)
        r = Fraction(atom[1])
        want_lt = kind == "norm_lt"
        if not term.tree_part:
            code = encode_vector(term.pres_vector())
            return index.holds_lt(code, r) if want_lt else index.holds_gt(code, r)
        gindex = _index_for(FactIndex, streams[1], stage)
        for code, slack in _substitutions(index, gindex, term):
            target = r - slack if want_lt else r + slack
            if want_lt and target <= 0:
                continue
            if want_lt and index.holds_lt(code, target):
                return True
            if not want_lt and index.holds_gt(code, target):
                return True
        return False
    if kind == "in_S":
        gindex = _index_for(FactIndex, streams[-1], stage)
        code = node_encode(atom[1])
        return any(a == code for a, _ in gindex.singletons)
    if kind == "in_C":
        cindex = _index_for(FactIndex, streams[-1], stage)
        return (int(atom[1]), node_encode(atom[2])) in cindex.singletons
    raise ValueError(f"unknown judgment atom {kind!r}")


def _term_bounds(index: DiagramIndex, gindex: FactIndex,
                 term: Term) -> tuple[Optional[Fraction], Fraction]:
    """Best certified (upper, lower) bounds on ||term|| via ball substitution."""
    best_up: Optional[Fraction] = None
    best_lo = Fraction(0)
    for code, slack in _substitutions(index, gindex, term):
        up = index.upper(code)
        if up is not None and (best_up is None or up + slack < best_up):
            best_up = up + slack
        lo = index.lower(code) - slack
        if lo > best_lo:
            best_lo = lo
    return best_up, best_lo


@lru_cache(maxsize=1 << 15)
def _center_diff_codes(m0: int, m1: int) -> tuple[int, int]:
    """Codes of both difference orders between two coded centers.

    A pure function of the codes, so the cache survives across stages,
    where any per-index memo restarts cold.
    """
    diff = vec_sub(decode_vector(m0), decode_vector(m1))
    return encode_vector(diff), encode_vector(-x for x in diff)


def _ic_certified(index: DiagramIndex, inner: BallInfo, outer: BallInfo) -> bool:
    """Readings certify the closed inner ball sits inside the open outer one."""
    if inner.radius >= outer.radius:
        return False
    gap = index.best_upper(*_center_diff_codes(inner.center_code, outer.center_code))
    return gap is not None and gap < outer.radius - inner.radius

def _fd_certified(index: DiagramIndex, b0: BallInfo, b1: BallInfo) -> bool:
    """Readings certify the closed balls are formally disjoint."""
    fwd, rev = _center_diff_codes(b0.center_code, b1.center_code)
    return index.best_lower(fwd, rev) > b0.radius + b1.radius

def _fd_refuted(index: DiagramIndex, b0: BallInfo, b1: BallInfo) -> bool:
    """Readings certify the center distance stays below the radius sum."""
    gap = index.best_upper(*_center_diff_codes(b0.center_code, b1.center_code))
    return gap is not None and gap < b0.radius + b1.radius


def exponent_reading(h: NameStream, stage: int) -> tuple[Optional[Enclosure], bool]:
    """Intersect the interval claims of an exponent name's prefix.

    Returns (enclosure, consistent); the enclosure is None on an empty
    prefix, and consistency fails when the claimed intervals have empty
    intersection.
    """
    lo: Optional[Fraction] = None
    hi: Optional[Fraction] = None
    for _, code in h.prefix(stage):
        a, b = interval_decode(code)
        if lo is None or a > lo:
            lo = a
        if hi is None or b < hi:
            hi = b
    if lo is None or hi is None:
        return None, True
    if lo >= hi:
        return None, False
    return Enclosure(lo, hi), True


def stream_exponent(h: NameStream, stage: int) -> Exponent:
    """Exponent backed by a name's prefix; refining past it raises."""
    cache: list = []

    def refine(k: int) -> Enclosure:
        if not cache:
            # the prefix is fixed by the stage, so one reading serves
            # every refinement request
            cache.append(exponent_reading(h, stage))
        enc, consistent = cache[0]
        if not consistent or enc is None or enc.width > Fraction(1, 1 << k):
            raise DomainError("exponent name too coarse at this stage")
        return enc
    return Exponent(refiner=refine)


def banach_name_monitor(f: NameStream, stage: int) -> MonitorVerdict:
    """Consistency checks a diagram prefix must pass to name a seminorm.

    Violations: crossing interval bounds on one code, a positive lower
    bound on the zero vector, scaling mismatches along a common ray, and
    certified subadditivity breaches.
    """
    index = _index_for(DiagramIndex, f, stage)
    codes = index.codes()
    for m in codes:
        up = index.upper(m)
        if up is not None and index.lower(m) > up:
            return _violation(stage, "eta-order", (m, index.lower(m), up))
    rays: dict[Vector, list[tuple[int, Fraction]]] = {}
    for m in codes:
        vec = index.vector(m)
        lead = next((c for c in vec if c != 0), None)
        if lead is None:
            # code names the zero vector, canonical or not
            if index.lower(m) > 0:
                return _violation(stage, "zero-vector", (m, index.lower(m)))
            continue
        rays.setdefault(vec_scale(1 / lead, vec), []).append((m, abs(lead)))
    for members in rays.values():
        if len(members) < 2:
            continue
        best_lo, lo_code = Fraction(0), None
        best_up, up_code = None, None
        for m, scale in members:
            lo = index.lower(m) / scale
            if lo > best_lo:
                best_lo, lo_code = lo, m
            up = index.upper(m)
            if up is not None:
                up = up / scale
                if best_up is None or up < best_up:
                    best_up, up_code = up, m
        if best_up is not None and best_lo > best_up and lo_code != up_code:
            return _violation(stage, "homogeneity",
                              (lo_code, up_code, best_lo, best_up))
    window = codes[:_pair_budget(stage)]
    by_vector = {index.vector(m): m for m in codes}
    pairs_checked = 0
    for a, b in itertools.combinations(window, 2):
        target = by_vector.get(vec_add(index.vector(a), index.vector(b)))
        if target is None:
            continue
        pairs_checked += 1
        ua, ub = index.upper(a), index.upper(b)
        if ua is not None and ub is not None and index.lower(target) > ua + ub:
            return _violation(stage, "subadditivity",
                              (a, b, target, index.lower(target), ua, ub))
    return _ok(stage, codes=len(codes), rays=len(rays), pairs_checked=pairs_checked)


def _vtree_check(index: DiagramIndex, gindex: FactIndex, stage: int) -> MonitorVerdict:
    nodes = gindex.tree_nodes()[:NODE_CAP]
    balls = gindex.ball_table()
    progress: dict = {"nodes": len(nodes), "facts": len(gindex.facts)}

    # clause 1: prefix closure, refutable only once the fact stream is final
    if gindex.exhausted:
        node_set = set(nodes)
        for nu in nodes:
            if nu and nu[:-1] not in node_set:
                return _violation(stage, "clause1-tree", nu, **progress)

    # clause 2: arbitrarily small balls per node; progress metric only
    level = None
    for nu in nodes:
        lst = balls.get(nu, [])
        k = _shrink_level(lst[0].radius) if lst else 0
        level = k if level is None else min(level, k)
    progress["ball_level"] = level if level is not None else 0

    # clause 3: balls on one node must admit a common refinement
    for nu in nodes:
        lst = _distinct_centers(balls.get(nu, [])[:BALL_CAP])
        for b0, b1 in itertools.combinations(lst, 2):
            if _fd_certified(index, b0, b1):
                return _violation(stage, "clause3-compat",
                                  (nu, b0.code, b1.code), **progress)

    # clause 4: a node inside a smaller named ball lies in every larger one
    if gindex.exhausted:
        every_ball = {ball.code: ball for lst in balls.values() for ball in lst}
        for nu in nodes:
            mine = {ball.code for ball in balls.get(nu, [])}
            for inner in balls.get(nu, [])[:BALL_CAP]:
                for outer in every_ball.values():
                    if outer.code in mine:
                        continue
                    if _ic_certified(index, inner, outer):
                        return _violation(stage, "clause4-refinement",
                                          (nu, inner.code, outer.code), **progress)

    # clause 5: distinct nodes must separate through formally disjoint balls
    resolved = 0
    total = 0
    for nu0, nu1 in itertools.combinations(nodes, 2):
        total += 1
        l0 = balls.get(nu0, [])
        l1 = balls.get(nu1, [])
        if any(_fd_certified(index, b0, b1)
               for b0 in _distinct_centers(l0[:BALL_CAP])
               for b1 in _distinct_centers(l1[:BALL_CAP])):
            resolved += 1
        elif (gindex.exhausted and l0 and l1
              and all(_fd_refuted(index, b0, b1)
                      for b0 in _distinct_centers(l0)
                      for b1 in _distinct_centers(l1))):
            return _violation(stage, "clause5-separation", (nu0, nu1), **progress)
    progress["separated_pairs"] = resolved
    progress["node_pairs"] = total
    return _ok(stage, **progress)


def vector_tree_monitor(f: NameStream, g: IntStream, stage: int) -> MonitorVerdict:
    """Desk check that (f, g) behaves like the name of a vector tree.

    Clauses follow the tree-name characterization: prefix closure,
    shrinking balls, same-node ball compatibility, refinement closure,
    and pairwise formal separation of distinct nodes.
    """
    index = _index_for(DiagramIndex, f, stage)
    gindex = _index_for(FactIndex, g, stage)
    return _vtree_check(index, gindex, stage)


_POWER_MISS = object()


def _power(exponent: Exponent, base: Fraction, k: int,
           memo: Optional[dict] = None) -> Optional[Enclosure]:
    if base < 0:
        return None
    if memo is None:
        memo = {}
    got = memo.get(base, _POWER_MISS)
    if got is _POWER_MISS:
        try:
            got = exponent.power(base, k)
        except DomainError:
            got = None
        memo[base] = got
    return got


def _additivity_breach(exponent: Exponent, whole: tuple[Optional[Fraction], Fraction],
                       parts: list[tuple[Optional[Fraction], Fraction]],
                       memo: Optional[dict] = None):
    """Certified breach of ||whole||^p = sum ||part||^p, if any.

    Returns (clause suffix, offending rationals) or None.  Pattern
    "deficit": the whole is judged too small for the parts; pattern
    "excess": too large.
    """
    whole_up, whole_lo = whole
    if whole_up is not None:
        pw = _power(exponent, whole_up, POWER_PRECISION, memo)
        ps = [_power(exponent, lo, POWER_PRECISION, memo) for _, lo in parts]
        if pw is not None and all(q is not None for q in ps):
            if pw.strictly_below(enclosure_sum(ps)):
                return "deficit", [lo for _, lo in parts] + [whole_up]
    if all(up is not None for up, _ in parts):
        pw = _power(exponent, whole_lo, POWER_PRECISION, memo)
        ps = [_power(exponent, up, POWER_PRECISION, memo) for up, _ in parts]
        if pw is not None and all(q is not None for q in ps):
            if enclosure_sum(ps).strictly_below(pw):
                return "excess", [up for up, _ in parts] + [whole_lo]
    return None


def disint_monitor(f: NameStream, g: IntStream, h: NameStream,
                   stage: int) -> MonitorVerdict:
    """Desk check that (f, g, h) behaves like a named p-disintegration.

    Runs the vector-tree clauses, then hunts certified breaches of
    p-additivity between incomparable nodes and between a parent and its
    explored children, with p read off the exponent name h.  Summativity
    and linear density are universally quantified, so they surface as
    progress levels.
    """
    index = _index_for(DiagramIndex, f, stage)
    gindex = _index_for(FactIndex, g, stage)
    base = _vtree_check(index, gindex, stage)
    if not base.ok:
        base.clause = "tree:" + base.clause
        return base
    progress = dict(base.progress)
    _, consistent = exponent_reading(h, stage)
    if not consistent:
        return _violation(stage, "exponent-name", None, **progress)
    exponent = stream_exponent(h, stage)
    pow_memo: dict = {}

    nodes = gindex.tree_nodes()[:NODE_CAP]
    children: dict[Node, list[Node]] = {}
    for nu in nodes:
        if nu:
            children.setdefault(nu[:-1], []).append(nu)

    bundles: list[tuple[str, Term, list[Term], tuple]] = []
    window = nodes[:_pair_budget(stage)]
    for nu0, nu1 in itertools.combinations(window, 2):
        if nu0 == nu1[:len(nu0)] or nu1 == nu0[:len(nu1)]:
            continue
        bundles.append(("separating-additivity",
                        Term.make(tree={nu0: 1, nu1: 1}),
                        [Term.make(tree={nu0: 1}), Term.make(tree={nu1: 1})],
                        (nu0, nu1)))
    node_set = set(nodes)
    for parent, kids in children.items():
        if parent not in node_set:
            continue
        residual = {parent: Fraction(1)}
        for kid in kids:
            residual[kid] = Fraction(-1)
        bundles.append(("component-additivity",
                        Term.make(tree={parent: 1}),
                        [Term.make(tree=residual),
                         Term.make(tree={kid: 1 for kid in kids})],
                        (parent, tuple(kids))))

    for clause, whole, parts, site in bundles:
        whole_bounds = _term_bounds(index, gindex, whole)
        part_bounds = [_term_bounds(index, gindex, part) for part in parts]
        breach = _additivity_breach(exponent, whole_bounds, part_bounds, pow_memo)
        if breach is not None:
            suffix, rationals = breach
            return _violation(stage, f"{clause}-{suffix}",
                              {"site": site, "rationals": rationals}, **progress)

    # summativity progress: how small the parent-minus-children residuals get
    summ = None
    for parent, kids in children.items():
        if parent not in node_set:
            continue
        residual = {parent: Fraction(1)}
        for kid in kids:
            residual[kid] = Fraction(-1)
        up, _ = _term_bounds(index, gindex, Term.make(tree=residual))
        lev = _shrink_level(up)
        summ = lev if summ is None else min(summ, lev)
    progress["summativity_level"] = summ if summ is not None else 0

    # density progress: distinguished vectors approached by scaled tree balls,
    # over the coordinates the named tree spans so far
    density = None
    balls = gindex.ball_table()
    span = max((len(ball.center) for lst in balls.values() for ball in lst),
               default=0)
    for j in range(min(4, span)):
        best: Optional[Fraction] = None
        for nu in nodes:
            for ball in balls.get(nu, [])[:BALL_CAP]:
                vec = ball.center
                if (len(vec) == j + 1 and vec[j] != 0
                        and all(vec[i] == 0 for i in range(j))):
                    bound = ball.radius / abs(vec[j])
                    if best is None or bound < best:
                        best = bound
        lev = _shrink_level(best)
        density = lev if density is None else min(density, lev)
    progress["density_level"] = density if density is not None else 0
    return _ok(stage, **progress)


def _vkey(v: Vector) -> tuple:
    # canonical numerator/denominator pairs hash at C speed, where tuples
    # of Fractions pay a Python-level modular inverse per coordinate
    return tuple((c.numerator, c.denominator) for c in v)


_WITNESS_MEMO: "OrderedDict[tuple, tuple]" = OrderedDict()


def parallelogram_witness(f: NameStream, stage: int):
    """A certified failure of the parallelogram law among explored codes.

    For codes a, b whose sum and difference codes carry readings, the law
    forces 2(||a||^2 + ||b||^2) = ||a+b||^2 + ||a-b||^2; a strict gap
    between the certified sides is a witness.  Returns None if none found.
    """
    memo_key = (id(f), stage)
    got = _WITNESS_MEMO.get(memo_key)
    if got is not None and got[0] is f:
        _WITNESS_MEMO.move_to_end(memo_key)
        return got[1]
    witness = _parallelogram_scan(f, stage)
    _WITNESS_MEMO[memo_key] = (f, witness)
    while len(_WITNESS_MEMO) > _INDEX_MEMO_CAP:
        _WITNESS_MEMO.popitem(last=False)
    return witness


def _parallelogram_scan(f: NameStream, stage: int):
    index = _index_for(DiagramIndex, f, stage)
    window = index.codes()[:_pair_budget(stage)]
    by_vector = {_vkey(index.vector(m)): m for m in index.codes()}
    for a, b in itertools.combinations(window, 2):
        va, vb = index.vector(a), index.vector(b)
        # a witness needs readings on both combination codes, and sums are
        # the rarer emission, so probe the sum before computing differences
        m_sum = by_vector.get(_vkey(vec_add(va, vb)))
        if m_sum is None:
            continue
        m_diff = by_vector.get(_vkey(vec_sub(va, vb)))
        if m_diff is None:
            m_diff = by_vector.get(_vkey(vec_sub(vb, va)))
        if m_diff is None:
            continue
        la, lb = index.lower(a), index.lower(b)
        us, ud = index.upper(m_sum), index.upper(m_diff)
        if us is not None and ud is not None and 2 * (la * la + lb * lb) > us * us + ud * ud:
            return ("flat", a, b, m_sum, m_diff)
        ua, ub = index.upper(a), index.upper(b)
        ls, ld = index.lower(m_sum), index.lower(m_diff)
        if ua is not None and ub is not None and 2 * (ua * ua + ub * ub) < ls * ls + ld * ld:
            return ("spread", a, b, m_sum, m_diff)
    return None


def hilbert_name_monitor(f: NameStream, stage: int) -> MonitorVerdict:
    """Banach-name checks plus the parallelogram-law scan."""
    base = banach_name_monitor(f, stage)
    if not base.ok:
        return base
    witness = parallelogram_witness(f, stage)
    if witness is not None:
        return _violation(stage, "parallelogram", witness, **base.progress)
    return base


def lspace_monitor(f: NameStream, g: NameStream, stage: int,
                   tree: Optional[IntStream] = None) -> MonitorVerdict:
    """Check the claim "f names an L^p space whose exponent g names".

    The claim splits on whether g is consistent with exponent 2: the
    Hilbert branch runs the parallelogram scan, the general branch monitors
    a disintegration name.  A tree name may be supplied explicitly; when f
    carries a presentation source one is generated, and otherwise the
    general branch reports itself inapplicable.  A Violation needs the
    Banach layer to fail, the exponent name to be inconsistent, or both
    branches to fail at this stage.
    """
    banach = banach_name_monitor(f, stage)
    if not banach.ok:
        banach.clause = "banach:" + banach.clause
        return banach
    progress: dict = {"banach": banach.progress}
    p_enc, consistent = exponent_reading(g, stage)
    if not consistent:
        return _violation(stage, "exponent-name", None, **progress)

    excludes_two = p_enc is not None and not p_enc.contains(Fraction(2))
    # the law scan only bears on the claim while exponent 2 stays possible;
    # with 2 excluded the branch is closed either way, so skip the scan
    witness = None if excludes_two else parallelogram_witness(f, stage)
    if witness is not None:
        hilbert_state = "violated"
    elif excludes_two:
        hilbert_state = "exponent-excludes-2"
    else:
        hilbert_state = "open"
    progress["hilbert"] = hilbert_state
    if witness is not None:
        progress["parallelogram_witness"] = witness

    disint_state = "inapplicable"
    disint_verdict: Optional[MonitorVerdict] = None
    if tree is None and getattr(f, "source", None) is not None:
        from . import naming  # deferred: naming builds on this module
        tree = naming.disintegration_name(f.source, stage)
    if tree is not None:
        disint_verdict = disint_monitor(f, tree, g, stage)
        if disint_verdict.ok:
            disint_state = "open"
            progress["disint_progress"] = disint_verdict.progress
        else:
            disint_state = "violated"
            progress["disint_clause"] = disint_verdict.clause
    progress["disint"] = disint_state

    if hilbert_state != "open" and disint_state == "violated":
        detail = (witness, disint_verdict.clause if disint_verdict else None)
        return _violation(stage, "both-branches", detail, **progress)
    return _ok(stage, **progress)
