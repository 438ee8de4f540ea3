"""Finite limits and colimits of frames and p-morphisms."""

from __future__ import annotations

from typing import NamedTuple, Sequence

from . import frame_core as fc
from .frame_core import Frame
from .pmorph import (
    DEFAULT_MAX_MAPS,
    PMorphism,
    SearchBudgetExceeded,
    inclusion,
    is_pmorphism,
    iter_pmorphisms,
)


class ParallelPair(NamedTuple):
    f: PMorphism
    g: PMorphism


class Span(NamedTuple):
    f0: PMorphism
    f1: PMorphism


class Cospan(NamedTuple):
    f0: PMorphism
    f1: PMorphism


def _same_ends(f: PMorphism, g: PMorphism) -> None:
    if f.dom != g.dom or f.cod != g.cod:
        raise ValueError("parallel pair must share domain and codomain")


def terminal() -> Frame:
    return fc.chain(1)


def to_terminal(f: Frame) -> PMorphism:
    """The constant map; it fails openness when ``f`` has a point without successors."""
    return PMorphism(f, terminal(), (0,) * f.size)


# -- equalizer and coequalizer ----------------------------------------------------------

def equalizer(f: PMorphism, g: PMorphism):
    """Largest generated subframe on which ``f`` and ``g`` agree, with its inclusion."""
    _same_ends(f, g)
    dom = f.dom
    agree = fc.to_mask(w for w in dom.worlds if f.map[w] == g.map[w])
    members = frozenset(w for w in dom.worlds if dom.star_masks[w] & ~agree == 0)
    _, inc = inclusion(dom, members)
    return members, inc


def _classes(size: int, pairs) -> list[int]:
    parent = list(range(size))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = sorted({find(x) for x in range(size)})
    index = {r: i for i, r in enumerate(roots)}
    return [index[find(x)] for x in range(size)]


def quotient(f: Frame, pairs) -> tuple[Frame, PMorphism]:
    """Set quotient by the equivalence generated by ``pairs`` with the image relation.

    The quotient map is validated; a :class:`~kripkecat.pmorph.PMorphismError`
    means the generated equivalence was not a bisimulation-compatible one.
    """
    cls = _classes(f.size, pairs)
    q = Frame(max(cls) + 1 if cls else 0, frozenset((cls[a], cls[b]) for a, b in f.rel))
    return q, PMorphism(f, q, cls)


def coequalizer(f: PMorphism, g: PMorphism) -> tuple[Frame, PMorphism]:
    _same_ends(f, g)
    return quotient(f.cod, zip(f.map, g.map))


# -- coproducts and pushouts ---------------------------------------------------------------

def coproduct(frames: Sequence[Frame]) -> tuple[Frame, list[PMorphism]]:
    total = fc.disjoint_sum(*frames)
    out, off = [], 0
    for g in frames:
        out.append(PMorphism(g, total, tuple(range(off, off + g.size))))
        off += g.size
    return total, out


def copairing(total: Frame, legs: Sequence[PMorphism]) -> PMorphism:
    mapping = []
    for leg in legs:
        mapping.extend(leg.map)
    return PMorphism(total, legs[0].cod, mapping)


class PushoutResult(NamedTuple):
    frame: Frame
    j0: PMorphism
    j1: PMorphism
    verified: bool | None = None


def pushout(f0: PMorphism, f1: PMorphism, verify: bool = False, probe_frames: Sequence[Frame] = (),
            budget: int | None = DEFAULT_MAX_MAPS) -> PushoutResult:
    """Pushout of a span as a coequalizer of the two routes into the coproduct.

    With ``verify`` the universal property is checked against every cocone on
    ``probe_frames``; ``verified`` is ``None`` when the search ran out of budget.
    """
    if f0.dom != f1.dom:
        raise ValueError("span legs must share their domain")
    total, (c0, c1) = coproduct([f0.cod, f1.cod])
    q_frame, q = coequalizer(f0.then(c0), f1.then(c1))
    j0, j1 = c0.then(q), c1.then(q)
    verified = None
    if verify:
        try:
            verified = all(
                _pushout_cocones_factor(f0, f1, j0, j1, t, budget) for t in probe_frames
            )
        except SearchBudgetExceeded:
            verified = None
    return PushoutResult(q_frame, j0, j1, verified)


def _pushout_cocones_factor(f0, f1, j0, j1, target: Frame, budget) -> bool:
    for h0 in iter_pmorphisms(f0.cod, target, budget=budget):
        for h1 in iter_pmorphisms(f1.cod, target, budget=budget):
            if f0.then(h0).map != f1.then(h1).map:
                continue
            hits = [
                k for k in iter_pmorphisms(j0.cod, target, budget=budget)
                if j0.then(k).map == h0.map and j1.then(k).map == h1.map
            ]
            if len(hits) != 1:
                return False
    return True


def cokernel_pair(f: PMorphism) -> tuple[Frame, PMorphism, PMorphism]:
    """Explicit cokernel pair; worlds are the ``(v, 1)`` block then ``(v, 0)`` for ``v`` outside the image."""
    v_frame = f.cod
    img = f.image_mask()
    points = [(v, 1) for v in v_frame.worlds] + [(v, 0) for v in v_frame.worlds if not img >> v & 1]
    index = {p: i for i, p in enumerate(points)}
    rel = set()
    for (v, i), a in index.items():
        for (v2, i2), b in index.items():
            if v_frame.related(v, v2) and (i == i2 or (i < i2 and img >> v2 & 1)):
                rel.add((a, b))
    u = Frame(len(points), frozenset(rel))
    i0 = PMorphism(v_frame, u, tuple(index[(v, 1)] if img >> v & 1 else index[(v, 0)] for v in v_frame.worlds))
    i1 = PMorphism(v_frame, u, tuple(index[(v, 1)] for v in v_frame.worlds))
    return u, i0, i1


# -- pullbacks ---------------------------------------------------------------------------------

class PullbackResult(NamedTuple):
    frame: Frame
    p0: PMorphism | None
    p1: PMorphism | None
    pairs: tuple[tuple[int, int], ...]


def dgrph_pullback(f0: PMorphism, f1: PMorphism) -> PullbackResult:
    """Pullback of the underlying graphs with the componentwise relation.

    A projection that fails to be a p-morphism is returned as ``None``.
    """
    if f0.cod != f1.cod:
        raise ValueError("cospan legs must share their codomain")
    pairs = tuple((a, b) for a in f0.dom.worlds for b in f1.dom.worlds if f0.map[a] == f1.map[b])
    index = {p: i for i, p in enumerate(pairs)}
    rel = frozenset(
        (index[p], index[q])
        for p in pairs
        for q in pairs
        if f0.dom.related(p[0], q[0]) and f1.dom.related(p[1], q[1])
    )
    u = Frame(len(pairs), rel)
    m0 = tuple(p[0] for p in pairs)
    m1 = tuple(p[1] for p in pairs)
    p0 = PMorphism(u, f0.dom, m0) if is_pmorphism(u, f0.dom, m0) else None
    p1 = PMorphism(u, f1.dom, m1) if is_pmorphism(u, f1.dom, m1) else None
    return PullbackResult(u, p0, p1, pairs)


def pullback_along_injective(surj: PMorphism, inj: PMorphism) -> tuple[Frame, PMorphism, PMorphism]:
    """Inverse image of ``inj``'s image under ``surj``.

    Returns the subframe, the restricted map into ``inj.dom`` and the inclusion
    into ``surj.dom``.
    """
    if surj.cod != inj.cod:
        raise ValueError("legs must share their codomain")
    if not inj.is_injective:
        raise ValueError("second leg must be injective")
    back = {v: i for i, v in enumerate(inj.map)}
    members = [w for w in surj.dom.worlds if surj.map[w] in back]
    sub, inc = inclusion(surj.dom, members)
    restricted = PMorphism(sub, inj.dom, tuple(back[surj.map[w]] for w in inc.map))
    return sub, restricted, inc


def image_subframe(f: PMorphism) -> frozenset[int]:
    return frozenset(f.map)
