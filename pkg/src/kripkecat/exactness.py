"""Pair selections and non-effective equivalence relations.

A pair selection assigns to every pair ``(a, b)`` of worlds a set of
admissible pairs. Given parallel p-morphisms ``g0, g1: U -> W`` it cuts out
the generated subframe ``U_A`` of worlds whose whole cone respects the
selection. If ``U_A`` misses some world while the coequalizer of the two
restricted maps already equalizes ``g0`` and ``g1``, the frame category of
any logic containing these frames fails to be Barr exact.

Only the reflexivity and symmetry parts of the equivalence-relation
structure (the diagonal and the swap) are verified on selection-induced
subframes of products. The transitivity part quantifies over all test
frames; it is inherited from the selection's composition axiom and is not
checked here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from . import frame_core as fc
from .frame_core import Frame, bits
from .limits import coequalizer
from .pmorph import PMorphism, inclusion
from .product import Cone, ProductLevel, mediate, product_levels

Pair = tuple[int, int]


class SelectionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PairSelection:
    base: Frame
    table: Mapping[Pair, frozenset[Pair]]

    def __post_init__(self):
        n = self.base.size
        keys = {(a, b) for a in range(n) for b in range(n)}
        if set(self.table) != keys:
            raise SelectionError("a pair selection needs an entry for every pair of worlds")
        for k, v in self.table.items():
            for a, b in v:
                if not (0 <= a < n and 0 <= b < n):
                    raise SelectionError(f"entry {k} contains a pair outside the base frame")
        object.__setattr__(self, "table", {k: frozenset(v) for k, v in self.table.items()})

    def admits(self, at: Pair, pair: Pair) -> bool:
        return pair in self.table[at]

    @classmethod
    def from_rule(cls, base: Frame, rule: Callable[[Pair, Pair], bool]) -> "PairSelection":
        pairs = [(a, b) for a in base.worlds for b in base.worlds]
        return cls(base, {k: frozenset(p for p in pairs if rule(k, p)) for k in pairs})


def full_selection(w: Frame) -> PairSelection:
    return PairSelection.from_rule(w, lambda k, p: True)


def diagonal_selection(w: Frame) -> PairSelection:
    return PairSelection.from_rule(w, lambda k, p: p[0] == p[1])


def selection_violation(sel: PairSelection) -> tuple[int, tuple] | None:
    """First failing axiom with a witness, or None.

    Axiom 1 witness ``(a, a')``; axiom 2 witness ``((a, b), (a', b'))``;
    axiom 3 witness ``((a, b, c), (a', b', c'))``.
    """
    w = sel.base
    for a in w.worlds:
        for a2 in bits(w.star_masks[a]):
            if (a2, a2) not in sel.table[(a, a)]:
                return 1, (a, a2)
    for (a, b), adm in sorted(sel.table.items()):
        for a2, b2 in sorted(adm):
            if (b2, a2) not in sel.table[(b, a)]:
                return 2, ((a, b), (a2, b2))
    n = w.size
    for a in range(n):
        for b in range(n):
            for c in range(n):
                target = sel.table[(a, c)]
                second = sel.table[(b, c)]
                for a2, b2 in sorted(sel.table[(a, b)]):
                    for b3, c2 in sorted(second):
                        if b3 == b2 and (a2, c2) not in target:
                            return 3, ((a, b, c), (a2, b2, c2))
    return None


def validate_pair_selection(sel: PairSelection) -> bool:
    return selection_violation(sel) is None


def _respecting(frame: Frame, labels: Callable[[int], Pair], sel: PairSelection) -> frozenset[int]:
    ok = {
        y: all(sel.admits(labels(y), labels(y2)) for y2 in bits(frame.star_masks[y]))
        for y in frame.worlds
    }
    return frozenset(u for u in frame.worlds if all(ok[y] for y in bits(frame.star_masks[u])))


def admissible_subframe(g0: PMorphism, g1: PMorphism, sel: PairSelection) -> frozenset[int]:
    """Worlds ``u`` such that every ``y`` in ``u*`` and ``y'`` in ``y*`` have ``pi(y')`` admissible at ``pi(y)``."""
    if g0.dom != g1.dom or g0.cod != g1.cod:
        raise ValueError("g0 and g1 must be parallel")
    if g0.cod != sel.base:
        raise ValueError("the selection must be based on the common codomain")
    return _respecting(g0.dom, lambda u: (g0.map[u], g1.map[u]), sel)


@dataclass(frozen=True)
class WitnessReport:
    admissible: frozenset[int]
    u_minus_ua_nonempty: bool
    sample_outside: int | None
    coequalizer_merges: bool
    f_A: PMorphism = field(repr=False)
    verdict: bool


def non_effectiveness_witness(g0: PMorphism, g1: PMorphism, sel: PairSelection) -> WitnessReport:
    members = admissible_subframe(g0, g1, sel)
    _, inc = inclusion(g0.dom, sorted(members))
    r0 = PMorphism(inc.dom, g0.cod, [g0.map[u] for u in inc.map])
    r1 = PMorphism(inc.dom, g1.cod, [g1.map[u] for u in inc.map])
    _, f_a = coequalizer(r0, r1)
    outside = sorted(set(g0.dom.worlds) - members)
    merges = g0.then(f_a).map == g1.then(f_a).map
    return WitnessReport(
        admissible=members,
        u_minus_ua_nonempty=bool(outside),
        sample_outside=outside[0] if outside else None,
        coequalizer_merges=merges,
        f_A=f_a,
        verdict=bool(outside) and merges,
    )


# -- equivalence relations inside products -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class SelectionRelation:
    level: ProductLevel
    members: frozenset[int]
    diagonal: PMorphism
    swap: PMorphism


def equivalence_from_selection(w: Frame, sel: PairSelection, depth: int,
                               levels: list[ProductLevel] | None = None) -> SelectionRelation:
    """The subframe ``X_A`` of the depth-truncated square of ``w`` with its diagonal and swap.

    ``diagonal`` is the mediator of the cone ``(id, id)`` and ``swap`` the
    mediator of the swapped projections restricted to ``X_A``. Both are
    checked to land inside ``X_A``.
    """
    if sel.base != w:
        raise SelectionError("the selection must be based on w")
    if depth < fc.frame_depth(w):
        raise SelectionError(f"depth {depth} is too shallow; the diagonal needs {fc.frame_depth(w)}")
    if levels is None:
        levels = product_levels(w, w, depth)
    top = levels[-1]
    members = _respecting(top.frame, top.labels, sel)
    ident = PMorphism(w, w, tuple(w.worlds))
    diagonal = mediate(Cone(w, ident, ident), levels)
    if not set(diagonal.map) <= members:
        raise SelectionError("the diagonal leaves the selected subframe")
    sub, inc = inclusion(top.frame, sorted(members))
    q0 = PMorphism(sub, w, [top.p1.map[x] for x in inc.map])
    q1 = PMorphism(sub, w, [top.p0.map[x] for x in inc.map])
    swap = mediate(Cone(sub, q0, q1), levels)
    if not set(swap.map) <= members:
        raise SelectionError("the swap leaves the selected subframe")
    return SelectionRelation(top, members, diagonal, swap)


# -- the five forbidden configurations ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Fixture:
    name: str
    forbidden: Frame
    g0: PMorphism
    g1: PMorphism
    selection: PairSelection
    world_labels: tuple[str, ...]
    pair_labels: tuple[tuple[str, str], ...]
    expected_admissible: frozenset[int]
    expected_quotient_size: int


def _fixture(name, forbidden, u, w, m0, m1, rule, w_labels, expected, quotient_size) -> Fixture:
    g0 = PMorphism(u, w, m0)
    g1 = PMorphism(u, w, m1)
    pairs = tuple((w_labels[a], w_labels[b]) for a, b in zip(m0, m1))
    return Fixture(name, forbidden, g0, g1, PairSelection.from_rule(w, rule), tuple(w_labels), pairs,
                   frozenset(expected), quotient_size)


def builtin_fixtures() -> list[Fixture]:
    """The five configurations excluded from Barr-exact frame categories.

    Frames use the library constructors, so world order follows them;
    ``pair_labels`` records each world of ``U`` by the labels of its images.
    """
    out = []

    # chain of four over a chain of three; world 0 is the root
    w = fc.chain(3)
    labels = ("3", "2", "1")

    def rule4(k, p):
        root_k = [a == 0 for a in k]
        if not any(root_k):
            return True
        if all(root_k):
            return p[0] == p[1]
        return False

    out.append(_fixture("chain4", fc.chain(4), fc.chain(4), w, (0, 1, 2, 2), (0, 1, 1, 2), rule4, labels,
                        {1, 2, 3}, 2))

    # fork over fork with the tops swapped by the second map
    w = fc.fork(2)

    def rule_fork(k, p):
        roots = [a == 0 for a in k]
        if not any(roots):
            return True
        if all(roots):
            return p[0] == p[1]
        return False

    out.append(_fixture("fork2", fc.fork(2), fc.fork(2), w, (0, 1, 2), (0, 2, 1), rule_fork,
                        ("rho", "1", "2"), {1, 2}, 2))

    # two 3-clusters over a 3-cluster; admissible pairs keep the difference mod 3
    w = fc.cluster(3)
    u = fc.copies(2, fc.cluster(3))

    def rule3(k, p):
        return (k[1] - k[0]) % 3 == (p[1] - p[0]) % 3

    out.append(_fixture("cluster3", fc.cluster(3), u, w, (0, 1, 2, 0, 1, 2), (1, 2, 0, 0, 2, 1), rule3,
                        ("1", "2", "3"), {0, 1, 2}, 1))

    # a 2-cluster above a root over a 2-cluster; difference mod 2
    w = fc.cluster(2)

    def rule2(k, p):
        return (k[1] - k[0]) % 2 == (p[1] - p[0]) % 2

    out.append(_fixture("cluster2-root", fc.add_root(fc.cluster(2)), fc.add_root(fc.cluster(2)), w,
                        (0, 0, 1), (0, 1, 0), rule2, ("1", "2"), {1, 2}, 1))

    # a 3-cluster and a 2-cluster below a final point, over a 2-cluster below a final point
    w = fc.add_final(fc.cluster(2))
    e = 2
    a_cluster = fc.cluster(3)
    b_cluster = fc.cluster(2)
    u = fc.add_final(fc.disjoint_sum(a_cluster, b_cluster))

    def rule_final(k, p):
        finals = [a == e for a in k]
        if all(finals):
            return p == (e, e)
        if any(finals):
            return False
        if p == (e, e):
            return True
        if e in p:
            return False
        return (k[1] - k[0]) % 2 == (p[1] - p[0]) % 2

    out.append(_fixture("cluster3-final", fc.add_final(fc.cluster(3)), u, w,
                        (0, 0, 1, 0, 1, 2), (0, 1, 0, 1, 0, 2), rule_final, ("1", "2", "e"), {3, 4, 5}, 2))
    return out


FIXTURE_NAMES = ("chain4", "fork2", "cluster3", "cluster2-root", "cluster3-final")


def fixture(name: str) -> Fixture:
    for fx in builtin_fixtures():
        if fx.name == name:
            return fx
    raise KeyError(f"unknown fixture {name!r}; expected one of {', '.join(FIXTURE_NAMES)}")
