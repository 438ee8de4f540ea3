"""Coamalgamation of cospans of surjective p-morphisms.

Solvers, tried in this order by :func:`coamalgamate`:

``horn``
    graph pullback, accepted when it lies in the logic;
``chain``
    explicit induction for cospans of finite reflexive chains;
``reflect``
    solve over the posetal reflections, then inflate every apex point to a
    cluster with a set-level coamalgamation;
``bruteforce``
    exhaustive search over small frames of the logic.

A solver returning ``None`` only means that route failed. Nothing here ever
concludes that a cospan has no coamalgamation.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

from . import frame_core as fc
from .frame_core import Frame, bits
from .limits import Cospan, dgrph_pullback
from .logic import OMEGA, LogicSpec, frame_in_logic
from .pmorph import DEFAULT_MAX_MAPS, PMorphism, SearchBudgetExceeded, inclusion, iter_pmorphisms

log = logging.getLogger(__name__)


class CoamalgamationError(ValueError):
    pass


class CapExceeded(CoamalgamationError):
    pass


@dataclass(frozen=True)
class Coamalgamation:
    apex: Frame
    g0: PMorphism
    g1: PMorphism
    route: str = field(default="", compare=False)

    def __post_init__(self):
        if self.g0.dom != self.apex or self.g1.dom != self.apex:
            raise CoamalgamationError("both legs must start at the apex")
        if not (self.g0.is_surjective and self.g1.is_surjective):
            raise CoamalgamationError("coamalgamation legs must be surjective")


def check_coamalgamation(result: Coamalgamation, cospan: Cospan, spec: LogicSpec | None = None) -> None:
    """Raise :class:`CoamalgamationError` unless ``result`` closes the square."""
    f0, f1 = cospan
    if result.g0.cod != f0.dom or result.g1.cod != f1.dom:
        raise CoamalgamationError("legs do not land in the cospan's domains")
    if result.g0.then(f0).map != result.g1.then(f1).map:
        raise CoamalgamationError("square does not commute")
    if spec is not None and not frame_in_logic(spec, result.apex):
        raise CoamalgamationError(f"apex is not a frame of {spec}")


def _require_surjective_cospan(cospan: Cospan) -> None:
    f0, f1 = cospan
    if f0.cod != f1.cod:
        raise CoamalgamationError("cospan legs must share their codomain")
    if not (f0.is_surjective and f1.is_surjective):
        raise CoamalgamationError("cospan legs must be surjective")


def _validated(apex, m0, m1, cospan, spec, route) -> Coamalgamation:
    f0, f1 = cospan
    out = Coamalgamation(apex, PMorphism(apex, f0.dom, m0), PMorphism(apex, f1.dom, m1), route)
    check_coamalgamation(out, cospan, spec)
    log.debug("coamalgamation found by %s route, apex size %d", route, apex.size)
    return out


# -- horn route -------------------------------------------------------------------------------

def coamalgamate_horn(cospan: Cospan, spec: LogicSpec) -> Coamalgamation | None:
    _require_surjective_cospan(cospan)
    pb = dgrph_pullback(*cospan)
    if pb.p0 is None or pb.p1 is None or not frame_in_logic(spec, pb.frame):
        return None
    return _validated(pb.frame, pb.p0.map, pb.p1.map, cospan, spec, "horn")


# -- chain route ---------------------------------------------------------------------------------

def _is_chain_map(f: PMorphism) -> bool:
    return f.dom == fc.chain(f.dom.size) and f.cod == fc.chain(f.cod.size)


def _first_merge(fmap: Sequence[int]) -> int:
    return next(x for x in range(len(fmap) - 1) if fmap[x] == fmap[x + 1])


def _chain_square(fmap: tuple[int, ...], gmap: tuple[int, ...], k: int):
    """Apex size and the two legs for chains; ``fmap``: [n]->[k], ``gmap``: [m]->[k]."""
    n, m = len(fmap), len(gmap)
    if n == k:
        # f is the identity
        return m, gmap, tuple(range(m))
    split = _first_merge(fmap)
    if n == k + 1:
        top = max(j for j in range(m) if gmap[j] == split)
        to_f = tuple(gmap[y] if y <= top else gmap[y - 1] + 1 for y in range(m + 1))
        to_g = tuple(y if y <= top else y - 1 for y in range(m + 1))
        return m + 1, to_f, to_g
    # factor f as [n] -> [n-1] -> [k], merging the first split point
    first = tuple(x if x <= split else x - 1 for x in range(n))
    rest = tuple(fmap[y] if y <= split else fmap[y + 1] for y in range(n - 1))
    t1, a, b = _chain_square(rest, gmap, k)
    t, c, d = _chain_square(first, a, n - 1)
    return t, c, tuple(b[z] for z in d)


def coamalgamate_chain(f: PMorphism, g: PMorphism) -> Coamalgamation:
    """Coamalgamate surjections ``[n] -> [k] <- [m]`` between reflexive chains."""
    if not (_is_chain_map(f) and _is_chain_map(g)):
        raise CoamalgamationError("chain route needs p-morphisms between reflexive chains")
    cospan = Cospan(f, g)
    _require_surjective_cospan(cospan)
    t, to_f, to_g = _chain_square(f.map, g.map, f.cod.size)
    return _validated(fc.chain(t), to_f, to_g, cospan, None, "chain")


def _as_chain(f: Frame) -> tuple[int, ...] | None:
    """Positions of ``f``'s worlds in an isomorphic reflexive chain, if any."""
    return fc.find_isomorphism(f, fc.chain(f.size))


def _via_chains(cospan: Cospan, spec: LogicSpec) -> Coamalgamation | None:
    """Chain route on frames that are chains up to renumbering."""
    f0, f1 = cospan
    p0, p1, pv = _as_chain(f0.dom), _as_chain(f1.dom), _as_chain(f0.cod)
    if p0 is None or p1 is None or pv is None:
        return None
    inv0 = {p: w for w, p in enumerate(p0)}
    inv1 = {p: w for w, p in enumerate(p1)}
    c0 = PMorphism(fc.chain(f0.dom.size), fc.chain(f0.cod.size), [pv[f0.map[inv0[i]]] for i in range(f0.dom.size)])
    c1 = PMorphism(fc.chain(f1.dom.size), fc.chain(f1.cod.size), [pv[f1.map[inv1[i]]] for i in range(f1.dom.size)])
    sol = coamalgamate_chain(c0, c1)
    m0 = [inv0[v] for v in sol.g0.map]
    m1 = [inv1[v] for v in sol.g1.map]
    if not frame_in_logic(spec, sol.apex):
        return None
    return _validated(sol.apex, m0, m1, cospan, spec, "chain")


# -- set-level coamalgamation ----------------------------------------------------------------------

@dataclass(frozen=True)
class SetCoamalgamation:
    size: int
    d0: tuple[int, ...]
    d1: tuple[int, ...]


def set_coamalgamation(s0: Sequence, s1: Sequence, size_cap: int | None = None) -> SetCoamalgamation:
    """Smallest common cover of two surjections given by their value lists.

    ``s0[i]`` is the image of element ``i``. Fibers are matched index by
    index and the shorter fiber repeats its last element, so the size is the
    sum over base points of the larger fiber.
    """
    if set(s0) != set(s1):
        raise CoamalgamationError("the two maps must be onto the same base set")
    d0: list[int] = []
    d1: list[int] = []
    for c in sorted(set(s0)):
        fib0 = [i for i, v in enumerate(s0) if v == c]
        fib1 = [i for i, v in enumerate(s1) if v == c]
        for i in range(max(len(fib0), len(fib1))):
            d0.append(fib0[min(i, len(fib0) - 1)])
            d1.append(fib1[min(i, len(fib1) - 1)])
    if size_cap is not None and len(d0) > size_cap:
        raise CapExceeded(f"set coamalgamation needs {len(d0)} elements, cap is {size_cap}")
    return SetCoamalgamation(len(d0), tuple(d0), tuple(d1))


# -- reflection route ------------------------------------------------------------------------------

def _reflected_map(f: PMorphism, q_dom: PMorphism, q_cod: PMorphism) -> PMorphism:
    owner = {}
    for w, c in enumerate(q_dom.map):
        owner.setdefault(c, q_cod.map[f.map[w]])
    return PMorphism(q_dom.cod, q_cod.cod, [owner[c] for c in range(q_dom.cod.size)])


def _cap(value) -> int | None:
    return None if value is OMEGA else value


def coamalgamate_reflect(cospan: Cospan, spec: LogicSpec,
                         inner: Callable[[Cospan, LogicSpec], Coamalgamation | None] | None = None,
                         ) -> Coamalgamation | None:
    """Solve over posetal reflections and re-inflate clusters.

    The inflated cluster over an apex point has size at most ``be`` when the
    point is final and at most ``bi`` otherwise; :class:`CapExceeded` is
    raised when the minimal set-level solution is larger.
    """
    if not spec.extends_s4:
        raise CoamalgamationError(f"{spec} does not extend S4")
    _require_surjective_cospan(cospan)
    f0, f1 = cospan
    r0, q0 = fc.posetal_reflection(f0.dom)
    r1, q1 = fc.posetal_reflection(f1.dom)
    rv, qv = fc.posetal_reflection(f0.cod)
    reflected = Cospan(_reflected_map(f0, q0, qv), _reflected_map(f1, q1, qv))
    poset_spec = replace(spec, be=1, bi=1)
    inner = inner or _reflect_inner
    sol = inner(reflected, poset_spec)
    if sol is None:
        return None
    u = sol.apex
    part = fc.clusters(u)
    is_final = {w: ext for c, ext in zip(part.clusters, part.external) for w in c}
    worlds: list[tuple[int, int]] = []
    m0: list[int] = []
    m1: list[int] = []
    for x in u.worlds:
        a0 = [w for w in f0.dom.worlds if q0.map[w] == sol.g0.map[x]]
        a1 = [w for w in f1.dom.worlds if q1.map[w] == sol.g1.map[x]]
        cap = _cap(spec.be if is_final[x] else spec.bi)
        s0, s1 = [f0.map[w] for w in a0], [f1.map[w] for w in a1]
        if set(s0) != set(s1):
            # the two clusters hit different parts of the common cluster below
            return None
        d = set_coamalgamation(s0, s1, cap)
        for i in range(d.size):
            worlds.append((x, i))
            m0.append(a0[d.d0[i]])
            m1.append(a1[d.d1[i]])
    rel = frozenset(
        (i, j) for i, (x, _) in enumerate(worlds) for j, (y, _) in enumerate(worlds) if u.related(x, y)
    )
    apex = Frame(len(worlds), rel)
    back, _ = fc.posetal_reflection(apex)
    if not fc.isomorphic(back, u):
        raise CoamalgamationError("inflated apex does not reflect back to the poset solution")
    return _validated(apex, m0, m1, cospan, spec, "reflect")


def _reflect_inner(cospan: Cospan, spec: LogicSpec) -> Coamalgamation | None:
    return coamalgamate_horn(cospan, spec) or _via_chains(cospan, spec)


# -- rooted decomposition --------------------------------------------------------------------------

def _rooted_piece(cospan: Cospan, w0: int, w1: int) -> tuple[Cospan, PMorphism, PMorphism]:
    f0, f1 = cospan
    s0, inc0 = inclusion(f0.dom, bits(f0.dom.star_masks[w0]))
    s1, inc1 = inclusion(f1.dom, bits(f1.dom.star_masks[w1]))
    sv, incv = inclusion(f0.cod, bits(f0.cod.star_masks[f0.map[w0]]))
    where = {v: i for i, v in enumerate(incv.map)}
    g0 = PMorphism(s0, sv, [where[f0.map[w]] for w in inc0.map])
    g1 = PMorphism(s1, sv, [where[f1.map[w]] for w in inc1.map])
    return Cospan(g0, g1), inc0, inc1


def amalgamate_rooted_reduction(cospan: Cospan, spec: LogicSpec,
                                inner_solver: Callable[[Cospan, LogicSpec], Coamalgamation | None],
                                ) -> Coamalgamation | None:
    """Solve one rooted cospan per matching pair of roots and take the disjoint union."""
    _require_surjective_cospan(cospan)
    f0, f1 = cospan
    if fc.is_rooted(f0.dom) and fc.is_rooted(f1.dom) and fc.is_rooted(f0.cod):
        return inner_solver(cospan, spec)
    pieces, maps0, maps1, routes = [], [], [], []
    for w0 in f0.dom.worlds:
        for w1 in f1.dom.worlds:
            if f0.map[w0] != f1.map[w1]:
                continue
            piece, inc0, inc1 = _rooted_piece(cospan, w0, w1)
            sol = inner_solver(piece, spec)
            if sol is None:
                return None
            pieces.append(sol.apex)
            maps0.extend(inc0.map[v] for v in sol.g0.map)
            maps1.extend(inc1.map[v] for v in sol.g1.map)
            routes.append(sol.route)
    apex = fc.disjoint_sum(*pieces)
    route = "rooted[" + ",".join(sorted(set(routes))) + "]"
    return _validated(apex, maps0, maps1, cospan, spec, route)


# -- brute force ---------------------------------------------------------------------------------

def frames_in_logic(spec: LogicSpec, max_size: int) -> Iterable[Frame]:
    """Frames of the logic up to isomorphism, by increasing size."""
    for s in range(max_size + 1):
        pool = (
            fc.enumerate_frames(s, transitive=True, reflexive=spec.extends_s4, up_to_iso=True)
            if spec.base != "K"
            else fc.enumerate_frames(s, up_to_iso=True)
        )
        for f in pool:
            if frame_in_logic(spec, f):
                yield f


def coamalgamate_bruteforce(cospan: Cospan, spec: LogicSpec, max_size: int = 5,
                            budget: int | None = DEFAULT_MAX_MAPS,
                            frames: Iterable[Frame] | None = None) -> Coamalgamation | None:
    """First commuting pair of surjections from a small frame of the logic.

    ``frames`` overrides the candidate apexes; by default every frame of the
    logic up to ``max_size`` worlds is tried. Raises
    :class:`SearchBudgetExceeded` when the total search exceeds ``budget``
    candidate assignments, which is different from returning ``None``.
    """
    _require_surjective_cospan(cospan)
    f0, f1 = cospan
    spent = 0
    lower = max(f0.dom.size, f1.dom.size)
    pool = frames if frames is not None else frames_in_logic(spec, max_size)
    for apex in pool:
        if apex.size < lower or not frame_in_logic(spec, apex):
            continue
        legs1 = list(iter_pmorphisms(apex, f1.dom, surjective_only=True, budget=budget))
        by_base: dict[tuple[int, ...], PMorphism] = {}
        for g1 in legs1:
            by_base.setdefault(g1.then(f1).map, g1)
        spent += len(legs1)
        for g0 in iter_pmorphisms(apex, f0.dom, surjective_only=True, budget=budget):
            spent += 1
            if budget is not None and spent > budget:
                raise SearchBudgetExceeded(f"coamalgamation search exceeded {budget} candidates")
            g1 = by_base.get(g0.then(f0).map)
            if g1 is not None:
                return _validated(apex, g0.map, g1.map, cospan, spec, "bruteforce")
    return None


# -- combined solver and audit -------------------------------------------------------------------

STRATEGIES = ("auto", "horn", "chain", "reflect", "bruteforce")


def _rooted_auto(cospan: Cospan, spec: LogicSpec, bruteforce_size: int, budget) -> Coamalgamation | None:
    sol = coamalgamate_horn(cospan, spec) or _via_chains(cospan, spec)
    if sol is None and spec.extends_s4:
        try:
            sol = coamalgamate_reflect(cospan, spec)
        except CapExceeded:
            sol = None
    if sol is None:
        sol = coamalgamate_bruteforce(cospan, spec, bruteforce_size, budget)
    return sol


def coamalgamate(cospan: Cospan, spec: LogicSpec, strategy: str = "auto",
                 bruteforce_size: int = 5, budget: int | None = DEFAULT_MAX_MAPS) -> Coamalgamation | None:
    if strategy == "horn":
        return coamalgamate_horn(cospan, spec)
    if strategy == "chain":
        return _via_chains(cospan, spec)
    if strategy == "reflect":
        return coamalgamate_reflect(cospan, spec)
    if strategy == "bruteforce":
        return coamalgamate_bruteforce(cospan, spec, bruteforce_size, budget)
    if strategy != "auto":
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {', '.join(STRATEGIES)}")
    return amalgamate_rooted_reduction(
        cospan, spec, lambda c, s: _rooted_auto(c, s, bruteforce_size, budget)
    )


@dataclass
class AuditReport:
    spec: LogicSpec
    size_bound: int
    cospans: int = 0
    routes: Counter = field(default_factory=Counter)
    failures: list[Cospan] = field(default_factory=list)
    over_budget: list[Cospan] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and not self.over_budget


def rooted_cospans(spec: LogicSpec, size_bound: int) -> Iterable[Cospan]:
    """Every cospan of surjections between rooted frames of the logic.

    Frames are taken up to isomorphism; maps are all surjective p-morphisms.
    Each unordered pair of legs is produced once.
    """
    rooted = [f for f in frames_in_logic(spec, size_bound) if fc.is_rooted(f)]
    for v in rooted:
        legs = [g for w in rooted if w.size >= v.size
                for g in iter_pmorphisms(w, v, surjective_only=True)]
        for i, a in enumerate(legs):
            for b in legs[i:]:
                yield Cospan(a, b)


def audit_amalgamability(spec: LogicSpec, size_bound: int, bruteforce_size: int = 5,
                         budget: int | None = DEFAULT_MAX_MAPS) -> AuditReport:
    report = AuditReport(spec, size_bound)
    if spec.base == "Inconsistent":
        # only the empty frame; the dual property holds vacuously
        return report
    for cospan in rooted_cospans(spec, size_bound):
        report.cospans += 1
        try:
            sol = _rooted_auto(cospan, spec, bruteforce_size, budget)
        except SearchBudgetExceeded:
            report.over_budget.append(cospan)
            continue
        if sol is None:
            report.failures.append(cospan)
        else:
            report.routes[sol.route] += 1
    return report
