"""Vector trees over a presentation and what they certify about its measure.

A disintegration is an injective prefix-closed map from finite integer
strings into the space: the root is the indicator of everything, children
carve their parent into disjoint pieces, and the leaves are either atoms
(terminal) or dyadic pieces that keep splitting below the snapshot.  From
such a tree the measure algebra is recovered by exact interval bookkeeping:
every node's p-th power norm is a rational interval length.

Everything here works on snapshots.  Deepening a tree produces a new tree;
all analyses are pure reads, so distinct chains may be processed in
parallel without coordination.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence, Union

from .coding import Vector, VectorCode, decode_vector, strip_vector
from .enclosures import DomainError, Enclosure, pow_exact
from .presentations import (
    Exponent,
    MeasureDescription,
    PresentationHandle,
    StepVector,
    measure_presentation,
)

Node = tuple[int, ...]
Rat = Union[Fraction, int]


class ExponentTwo(DomainError):
    """Raised where an operation is vacuous or undefined at p = 2."""


class NotADisintegration(DomainError):
    pass


class NotNormalized(DomainError):
    pass


class NotAnIsomorphism(DomainError):
    pass


class Disjointness(Enum):
    DISJOINT = "disjoint"
    NOT_DISJOINT = "not-disjoint"
    UNKNOWN = "unknown"


class Additivity(Enum):
    ADDITIVE = "additive"
    NOT_ADDITIVE = "not-additive"
    UNKNOWN = "unknown"


# ---------------------------------------------------------------------------
# input coercion


def _with_exponent(pres: PresentationHandle, p) -> PresentationHandle:
    if p is None or p is pres.p:
        return pres
    q = Exponent.of(p)
    if q.exact is not None and q.exact == pres.p.exact:
        return pres
    return PresentationHandle(pres.source, q)


def _as_step(pres: PresentationHandle, v) -> StepVector:
    if isinstance(v, StepVector):
        return v
    if isinstance(v, int):
        return pres.vector(decode_vector(v))
    return pres.vector([Fraction(c) for c in v])


def _mul_nonneg(a: Enclosure, b: Enclosure) -> Enclosure:
    return Enclosure(a.lo * b.lo, a.hi * b.hi)


# ---------------------------------------------------------------------------
# the support test


def _identity_sides_exact(pres, a, b):
    parts = [a.plus(b), a.plus(b.scaled(Fraction(-1))), a, b]
    vals = [pres.p_mass_exact(x) for x in parts]
    if any(x is None for x in vals):
        return None
    return vals[0] + vals[1], 2 * (vals[2] + vals[3])


def _identity_sides(pres, a, b, k):
    lhs = pres.p_mass(a.plus(b), k + 2) + pres.p_mass(a.plus(b.scaled(Fraction(-1))), k + 2)
    rhs = (pres.p_mass(a, k + 2) + pres.p_mass(b, k + 2)).scale(2)
    return lhs, rhs


def lamperti_test(pres: PresentationHandle, u, v, p=None, k: int = 30) -> Disjointness:
    """Decide disjoint support through the p-power parallelogram identity.

    Two vectors are disjointly supported exactly when
    ||u+v||^p + ||u-v||^p = 2(||u||^p + ||v||^p), provided p != 2.  Exact
    rational data settles the identity outright; otherwise overlapping
    enclosures at width 2^-k that survive one refinement count as Disjoint
    and separation counts as NotDisjoint.
    """
    h = _with_exponent(pres, p)
    if not h.p.excludes(2):
        raise ExponentTwo("the support identity holds for all vectors at p = 2")
    a = _as_step(h, u)
    b = _as_step(h, v)
    exact = _identity_sides_exact(h, a, b)
    if exact is not None:
        return Disjointness.DISJOINT if exact[0] == exact[1] else Disjointness.NOT_DISJOINT
    lhs, rhs = _identity_sides(h, a, b, k)
    if lhs.separated_from(rhs):
        return Disjointness.NOT_DISJOINT
    lhs2, rhs2 = _identity_sides(h, a, b, 2 * k)
    if lhs2.separated_from(rhs2):
        return Disjointness.NOT_DISJOINT
    if lhs.overlaps(rhs) and lhs2.overlaps(rhs2):
        return Disjointness.DISJOINT
    return Disjointness.UNKNOWN


def _scalar_test_set(count: int, trials: int = 4) -> list[tuple[Fraction, ...]]:
    """Sign patterns plus seeded rational tuples; deterministic across runs."""
    out: list[tuple[Fraction, ...]] = []
    if count <= 6:
        out.extend(tuple(map(Fraction, signs)) for signs in itertools.product((1, -1), repeat=count))
    else:
        rng = random.Random(97 * count)
        for _ in range(64):
            out.append(tuple(Fraction(rng.choice((1, -1))) for _ in range(count)))
    rng = random.Random(1729 + count)
    for _ in range(trials):
        out.append(tuple(
            Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(count)
        ))
    return out


def formal_p_additivity(pres: PresentationHandle, vectors: Sequence, p=None, k: int = 30) -> Additivity:
    """Check ||sum a_j v_j||^p = sum |a_j|^p ||v_j||^p over a scalar test set.

    Universal quantification over all rational scalars is out of reach; the
    test set (every sign pattern, plus seeded random tuples) is the
    property-test surrogate.  Exact data decides each instance outright.
    """
    if not vectors:
        raise DomainError("additivity needs at least one vector")
    h = _with_exponent(pres, p)
    steps = [_as_step(h, v) for v in vectors]
    verdict = Additivity.ADDITIVE
    for alphas in _scalar_test_set(len(steps)):
        combo = StepVector()
        for a, sv in zip(alphas, steps):
            if a != 0:
                combo = combo.plus(sv.scaled(a))
        lhs_exact = h.p_mass_exact(combo)
        rhs_exact: Optional[Fraction] = Fraction(0)
        if h.p.exact is not None:
            for a, sv in zip(alphas, steps):
                mass = h.p_mass_exact(sv)
                coef = pow_exact(abs(a), h.p.exact)
                if mass is None or coef is None:
                    rhs_exact = None
                    break
                rhs_exact += coef * mass
        else:
            rhs_exact = None
        if lhs_exact is not None and rhs_exact is not None:
            if lhs_exact != rhs_exact:
                return Additivity.NOT_ADDITIVE
            continue
        lhs = h.p_mass(combo, k + 2)
        parts = [
            _mul_nonneg(h.p.power(abs(a), k + 4), h.p_mass(sv, k + 4))
            for a, sv in zip(alphas, steps) if a != 0
        ]
        rhs = Enclosure(sum(e.lo for e in parts), sum(e.hi for e in parts)) if parts else Enclosure.point(0)
        if lhs.separated_from(rhs):
            return Additivity.NOT_ADDITIVE
    return verdict


# ---------------------------------------------------------------------------
# vector trees


@dataclass
class TreeNode:
    vec: Vector
    mass: Optional[Fraction] = None  # exact p-th power of the norm, when known
    terminal: bool = False           # certified atom: never splits
    splits: bool = False             # halves dyadically below every snapshot


@dataclass
class VectorTree:
    """Prefix-closed injective map from integer strings to vectors."""

    nodes: dict[Node, TreeNode] = field(default_factory=dict)
    label: str = ""

    def is_empty(self) -> bool:
        return not self.nodes

    @property
    def root(self) -> Node:
        return ()

    def children(self, nu: Node) -> list[Node]:
        out = [mu for mu in self.nodes if len(mu) == len(nu) + 1 and mu[: len(nu)] == nu]
        out.sort()
        return out

    def leaves(self) -> list[Node]:
        return sorted(nu for nu in self.nodes if not self.children(nu))

    def depth(self) -> int:
        return max((len(nu) for nu in self.nodes), default=0)

    def mass_of(self, nu: Node, pres: PresentationHandle) -> Optional[Fraction]:
        node = self.nodes[nu]
        if node.mass is None:
            node.mass = pres.p_mass_exact(pres.vector(node.vec))
        return node.mass


def _is_prefix(a: Node, b: Node) -> bool:
    return len(a) <= len(b) and b[: len(a)] == a


def validate_tree(tree: VectorTree, pres: PresentationHandle, k: int = 30) -> None:
    """Raise NotADisintegration unless the snapshot looks like one.

    Checks prefix closure, injectivity and nonvanishing as step vectors,
    and exact summativity (children tile their parent) at every node that
    has children.
    """
    seen: list[StepVector] = []
    for nu, node in tree.nodes.items():
        if nu != () and nu[:-1] not in tree.nodes:
            raise NotADisintegration(f"node {nu} has no parent in the tree")
        sv = pres.vector(node.vec)
        if sv.is_zero():
            raise NotADisintegration(f"node {nu} maps to the zero vector")
        for other in seen:
            if sv.equals(other):
                raise NotADisintegration("tree map is not injective")
        seen.append(sv)
    for nu in tree.nodes:
        kids = tree.children(nu)
        if not kids:
            continue
        total = StepVector()
        for mu in kids:
            total = total.plus(pres.vector(tree.nodes[mu].vec))
        diff = pres.vector(tree.nodes[nu].vec).plus(total.scaled(Fraction(-1)))
        if diff.is_zero():
            continue
        gap = pres.p_mass(diff, k)
        if gap.lo > 0:
            raise NotADisintegration(f"children of {nu} do not tile their parent")


def build_disintegration(desc: MeasureDescription, p, depth: int = 4) -> VectorTree:
    """Disintegrate a finitely described measure space.

    The root is the indicator of the whole space, each atom becomes a
    terminal leaf, and the nonatomic part splits dyadically to `depth`.
    The zero space has only the empty tree.
    """
    if depth < 0:
        raise DomainError("depth must be nonnegative")
    pres = measure_presentation(desc, p)
    if desc.is_zero():
        return VectorTree({}, label="empty")
    s = pres.summary()
    nodes: dict[Node, TreeNode] = {}
    total = desc.total_mass
    m = len(desc.atoms)
    cont = desc.nonatomic_mass

    def add_dyadic(base: Node, comp, mass: Fraction) -> None:
        frontier = [(base, 0, 0)]
        for _ in range(depth):
            nxt = []
            for anchor, level, pos in frontier:
                for b in (0, 1):
                    child = anchor + (b,)
                    vec = comp.piece(level + 1, 2 * pos + b)
                    nodes[child] = TreeNode(vec, mass / (1 << (level + 1)), splits=True)
                    nxt.append((child, level + 1, 2 * pos + b))
            frontier = nxt

    if m == 1 and cont == 0:
        nodes[()] = TreeNode(s.whole_coeffs, total, terminal=True)
        return VectorTree(nodes, label="single-atom")
    nodes[()] = TreeNode(s.whole_coeffs, total, splits=(m == 0))
    for i, atom in enumerate(s.atoms):
        nodes[(i,)] = TreeNode(atom.coeffs, atom.mass, terminal=True)
    if cont > 0:
        comp = s.nonatomic[0]
        if m == 0:
            add_dyadic((), comp, cont)
        else:
            top = (m,)
            nodes[top] = TreeNode(comp.piece(0, 0), cont, splits=True)
            add_dyadic(top, comp, cont)
    return VectorTree(nodes, label=f"disint({m} atoms, nonatomic {cont})")


# ---------------------------------------------------------------------------
# chain decomposition


@dataclass
class ChainDecomposition:
    chains: list[list[Node]]
    kappa: int
    complete: bool  # every leaf is terminal, so kappa is exact
    tree: Optional[VectorTree] = field(repr=False, default=None)


def _pick_child(tree: VectorTree, pres: PresentationHandle, nu: Node, kids: list[Node]) -> Node:
    """Largest-norm child, certified within the 2^-|nu| slack; lex least on ties."""
    masses = [tree.mass_of(mu, pres) for mu in kids]
    if all(w is not None for w in masses):
        best = max(masses)
        return kids[masses.index(best)]
    prec = len(nu) + 6
    encs = [pres.p_mass(pres.vector(tree.nodes[mu].vec), prec) for mu in kids]
    ceiling = max(e.hi for e in encs)
    slack = Fraction(1, 1 << len(nu))
    for mu, enc in zip(kids, encs):
        if ceiling <= enc.lo + slack:
            return mu
    raise NotADisintegration(f"no child of {nu} certifies the norm-maximizing slack")


def chain_decompose(tree: VectorTree, pres: PresentationHandle, p=None) -> ChainDecomposition:
    """Partition the tree into almost norm-maximizing chains.

    Each chain descends greedily through a largest child; the remaining
    children start chains of their own, ordered by where they split off.
    """
    h = _with_exponent(pres, p)
    if tree.is_empty():
        return ChainDecomposition([], 0, True, tree)
    validate_tree(tree, h)
    chains: list[list[Node]] = []
    queue: list[Node] = [tree.root]
    while queue:
        cur = queue.pop(0)
        chain = [cur]
        while True:
            kids = tree.children(cur)
            if not kids:
                break
            pick = _pick_child(tree, h, cur, kids)
            queue.extend(mu for mu in kids if mu != pick)
            chain.append(pick)
            cur = pick
        chains.append(chain)
    complete = all(tree.nodes[leaf].terminal for leaf in tree.leaves())
    return ChainDecomposition(chains, len(chains), complete, tree)


@dataclass
class ChainInfimum:
    chain: int
    norm_limit: Enclosure
    is_zero_certified: bool


def chain_infimum(dec: ChainDecomposition, n: int, pres: PresentationHandle,
                  p=None, depth: int = 20) -> ChainInfimum:
    """Limit of the norms along chain n, with structural zero certificates.

    Chains ending at an atom converge to its weight's p-th root; chains
    whose tail keeps splitting dyadically decay geometrically, which is the
    only zero certificate finitely many enclosures can justify.
    """
    if n >= dec.kappa:
        raise DomainError(f"chain {n} does not exist (kappa = {dec.kappa})")
    h = _with_exponent(pres, p)
    tail = dec.chains[n][-1]
    node = dec.tree.nodes[tail]
    k = max(depth, 10)
    mass = dec.tree.mass_of(tail, h)
    if node.terminal:
        if mass is not None:
            limit = h.p.root_interval(Enclosure.point(mass), k)
        else:
            limit = h.p.root_interval(h.p_mass(h.vector(node.vec), k + 2), k)
        return ChainInfimum(n, limit, False)
    if node.splits:
        extra = max(0, depth - len(tail))
        if mass is None:
            mass = h.p_mass(h.vector(node.vec), k + 2).hi
        shrunk = mass / (1 << extra)
        upper = h.p.root_interval(Enclosure.point(shrunk), k).hi
        return ChainInfimum(n, Enclosure(Fraction(0), upper), True)
    enc = h.p.root_interval(h.p_mass(h.vector(node.vec), k + 2), k)
    return ChainInfimum(n, Enclosure(Fraction(0), enc.hi), False)


@dataclass
class AntichainVerdict:
    kind: str  # "dimension" | "unbounded-at-budget"
    size: int


def antichain_dimension(tree: VectorTree, budget: int = 64) -> AntichainVerdict:
    """Largest antichain of the snapshot; Dimension only when it has stabilized.

    In a prefix tree the leaves form a maximum antichain.  A dimension is
    reported only when every leaf is terminal; leaves that keep splitting
    make the antichain grow with depth.
    """
    if tree.is_empty():
        return AntichainVerdict("dimension", 0)
    leaves = tree.leaves()
    stable = all(tree.nodes[leaf].terminal for leaf in leaves)
    if stable and len(leaves) <= budget:
        return AntichainVerdict("dimension", len(leaves))
    return AntichainVerdict("unbounded-at-budget", min(len(leaves), budget))


# ---------------------------------------------------------------------------
# reconstruction


@dataclass
class Reconstruction:
    intervals: dict[Node, tuple[Fraction, Fraction]]
    description: MeasureDescription


def reconstruct_measure_space(tree: VectorTree, pres: PresentationHandle,
                              p=None, depth: Optional[int] = None) -> Reconstruction:
    """Tile [0,1] by the tree: |I_nu| is the p-th power of the node's norm.

    Siblings tile their parent left to right in lexicographic order.  The
    root must have norm exactly 1; normalize before calling.
    """
    h = _with_exponent(pres, p)
    if tree.is_empty():
        return Reconstruction({}, MeasureDescription((), Fraction(0)))
    if depth is None:
        depth = tree.depth()
    root_mass = tree.mass_of(tree.root, h)
    if root_mass != 1:
        raise NotNormalized(f"root p-mass is {root_mass}, expected exactly 1")
    intervals: dict[Node, tuple[Fraction, Fraction]] = {(): (Fraction(0), Fraction(1))}
    order = sorted((nu for nu in tree.nodes if len(nu) <= depth), key=lambda nu: (len(nu), nu))
    for nu in order:
        kids = [mu for mu in tree.children(nu) if len(mu) <= depth]
        if not kids:
            continue
        left, right = intervals[nu]
        a = left
        for mu in kids:
            w = tree.mass_of(mu, h)
            if w is None:
                raise DomainError(f"node {mu} has no exact mass; cannot tile")
            intervals[mu] = (a, a + w)
            a += w
        if a != right:
            raise NotADisintegration(f"children of {nu} tile length {a - left}, parent has {right - left}")
    atoms = []
    nonatomic = Fraction(0)
    for nu in intervals:
        kids = [mu for mu in tree.children(nu) if len(mu) <= depth]
        if kids:
            continue
        lo, hi = intervals[nu]
        if tree.nodes[nu].terminal:
            atoms.append(hi - lo)
        else:
            nonatomic += hi - lo
    atoms.sort(reverse=True)
    return Reconstruction(intervals, MeasureDescription(tuple(atoms), nonatomic))


# ---------------------------------------------------------------------------
# lifting a tree isomorphism


@dataclass
class LiftWitness:
    norm_source: Enclosure
    norm_image: Enclosure
    approx_error: Enclosure  # norm of v minus its leaf-aligned approximation
    image: StepVector

    def gap(self) -> Fraction:
        return max(self.norm_image.lo - self.norm_source.hi,
                   self.norm_source.lo - self.norm_image.hi, Fraction(0))


def _check_match(tree_a: VectorTree, tree_b: VectorTree, match: dict,
                 pres_a: PresentationHandle, pres_b: PresentationHandle, k: int) -> None:
    if set(match) != set(tree_a.nodes):
        raise NotAnIsomorphism("match domain differs from the first tree")
    images = list(match.values())
    if len(set(images)) != len(images) or set(images) != set(tree_b.nodes):
        raise NotAnIsomorphism("match range differs from the second tree")
    items = list(match.items())
    for (nu, nb), (mu, mb) in itertools.combinations(items, 2):
        if _is_prefix(nu, mu) != _is_prefix(nb, mb) or _is_prefix(mu, nu) != _is_prefix(mb, nb):
            raise NotAnIsomorphism(f"match does not preserve the prefix order at {nu}, {mu}")
    for nu, nb in items:
        wa = tree_a.mass_of(nu, pres_a)
        wb = tree_b.mass_of(nb, pres_b)
        if wa is not None and wb is not None:
            if wa != wb:
                raise NotAnIsomorphism(f"norms differ at {nu} -> {nb}: {wa} vs {wb}")
            continue
        ea = pres_a.p_mass(pres_a.vector(tree_a.nodes[nu].vec), k + 4)
        eb = pres_b.p_mass(pres_b.vector(tree_b.nodes[nb].vec), k + 4)
        if ea.separated_from(eb):
            raise NotAnIsomorphism(f"norms separate at {nu} -> {nb}")


def lift_isomorphism(tree_a: VectorTree, tree_b: VectorTree, match: dict,
                     pres_a: PresentationHandle, pres_b: PresentationHandle,
                     v, k: int = 20) -> LiftWitness:
    """Carry a vector along a node bijection between two disintegrations.

    The vector is projected onto the leaf pieces of the first tree (value on
    each leaf = average over the leaf, an exact rational), the coefficients
    ride through the match, and the witness pair certifies norm preservation
    up to the projection error.
    """
    h_a, h_b = pres_a, pres_b
    _check_match(tree_a, tree_b, match, h_a, h_b, k)
    sv = _as_step(h_a, v)
    approx = StepVector()
    image = StepVector()
    for leaf in tree_a.leaves():
        leaf_sv = h_a.vector(tree_a.nodes[leaf].vec)
        w = tree_a.mass_of(leaf, h_a)
        if w is None or w == 0:
            raise DomainError(f"leaf {leaf} has no exact positive mass")
        coeff = h_a.dot_mass(sv, leaf_sv) / w
        if coeff == 0:
            continue
        approx = approx.plus(leaf_sv.scaled(coeff))
        image = image.plus(h_b.vector(tree_b.nodes[match[leaf]].vec).scaled(coeff))
    err = h_a.norm_step(sv.plus(approx.scaled(Fraction(-1))), k + 2)
    na = h_a.norm_step(sv, k + 2)
    nb = h_b.norm_step(image, k + 2)
    return LiftWitness(na, nb, err, image)
