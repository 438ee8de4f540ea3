"""Level-by-level binary products of preorders and the mediating-morphism algorithm.

Level ``n`` holds exactly the product points of depth at most ``n``. Each
level extends the previous one positionally: worlds ``0..prev.size-1`` of
level ``n`` are the worlds of level ``n-1`` with the same relation and the
same projections.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from . import frame_core as fc
from .frame_core import Frame, bits, to_mask
from .logic import LogicSpec, frame_in_logic
from .pmorph import PMorphism

DEFAULT_MAX_CANDIDATES = 200_000

Pair = tuple[int, int]


class ProductBudgetExceeded(RuntimeError):
    pass


class ProductError(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    """Origin of a product world: ``y`` inside the fresh cluster of ``(Y, G)``."""

    y: Pair
    Y: tuple[Pair, ...]
    G: frozenset[int]
    level: int


@dataclass(frozen=True, eq=False)
class ProductLevel:
    n: int
    frame: Frame
    p0: PMorphism
    p1: PMorphism
    prev_embedding: PMorphism | None
    tokens: tuple[Token, ...]
    # (Y, G) -> worlds of the fresh cluster, ordered as Y
    fresh: dict = field(repr=False)
    # up-set of a world -> worlds with that up-set
    by_up: dict = field(repr=False)

    @property
    def size(self) -> int:
        return self.frame.size

    def new_worlds(self) -> range:
        start = self.prev_embedding.dom.size if self.prev_embedding is not None else 0
        return range(start, self.size)

    def labels(self, x: int) -> Pair:
        return self.p0.map[x], self.p1.map[x]

    def genealogy(self, x: int) -> Token | None:
        """None for inherited worlds, else the token of a world born at this level."""
        return self.tokens[x] if x in self.new_worlds() else None


def _require_s4(f: Frame, what: str) -> None:
    if not (fc.is_reflexive(f) and fc.is_transitive(f)):
        raise ProductError(f"{what} must be reflexive and transitive")


def _empty_level(w0: Frame, w1: Frame) -> ProductLevel:
    e = fc.empty()
    return ProductLevel(0, e, PMorphism(e, w0, ()), PMorphism(e, w1, ()), None, (), {}, {})


def _clusters_with_up(w: Frame) -> list[tuple[int, int]]:
    """(cluster mask, up-set mask) for each cluster of a preorder."""
    out = []
    for c in fc.clusters(w).clusters:
        m = to_mask(c)
        out.append((m, w.succ[next(iter(c))]))
    return out


def _candidates_for(G: int, prev: ProductLevel, w0: Frame, w1: Frame, cl0, cl1, budget_left: list[int],
                    max_star: int | None = None):
    """Admissible ``Y`` for a fixed ``G`` (as a world mask of the previous level)."""
    P0 = to_mask(prev.p0.map[x] for x in bits(G))
    P1 = to_mask(prev.p1.map[x] for x in bits(G))
    excluded = set()
    for x in prev.by_up.get(G, ()):
        excluded.add(prev.labels(x))
    for (c0, up0), (c1, up1) in itertools.product(cl0, cl1):
        # condition (ii): every y shares the up-set pi_i(Y) | p_i(G) with its own cluster
        if up0 & ~c0 & ~P0 or P0 & ~up0 or up1 & ~c1 & ~P1 or P1 & ~up1:
            continue
        need0, need1 = c0 & ~P0, c1 & ~P1
        pool = [(a, b) for a in bits(c0) for b in bits(c1)]
        top_r = len(pool)
        if max_star is not None:
            top_r = min(top_r, max_star - bin(G).count("1"))
        for r in range(1, top_r + 1):
            for Y in itertools.combinations(pool, r):
                budget_left[0] -= 1
                if budget_left[0] < 0:
                    raise ProductBudgetExceeded("product candidate enumeration exceeded its budget")
                m0 = to_mask(a for a, _ in Y)
                m1 = to_mask(b for _, b in Y)
                if m0 & need0 != need0 or m1 & need1 != need1:
                    continue
                if (m0 | P0) != up0 or (m1 | P1) != up1:
                    continue
                # condition (iii)
                if all(y in excluded for y in Y):
                    continue
                yield Y


def next_level(prev: ProductLevel, w0: Frame, w1: Frame, max_candidates: int = DEFAULT_MAX_CANDIDATES,
               max_star: int | None = None) -> ProductLevel:
    """Level ``n+1`` from level ``n``.

    With ``max_star`` only worlds whose cone has at most that many points are
    built. Those worlds form a generated subframe of the full level, and it
    receives every p-morphism from a frame with at most ``max_star`` worlds.
    """
    n = prev.n
    x = prev.frame
    budget = [max_candidates]
    cl0, cl1 = _clusters_with_up(w0), _clusters_with_up(w1)
    depth_n = to_mask(v for v in range(x.size) if prev.tokens[v].level == n)
    if n == 0:
        gs = [0]
    else:
        try:
            cap = None if max_star is None else max_star - 1
            gs = [g for g in fc.generated_subframe_masks(x, limit=max_candidates, max_size=cap) if g & depth_n]
        except fc.TooManySubframes:
            raise ProductBudgetExceeded(
                f"level {n} has more than {max_candidates} generated subframes"
            ) from None
        budget[0] -= len(gs)
    rel = set(x.rel)
    map0, map1 = list(prev.p0.map), list(prev.p1.map)
    tokens = list(prev.tokens)
    fresh = dict(prev.fresh)
    by_up = {k: list(v) for k, v in prev.by_up.items()}
    size = x.size
    for g in gs:
        gset = frozenset(bits(g))
        for Y in _candidates_for(g, prev, w0, w1, cl0, cl1, budget, max_star):
            members = list(range(size, size + len(Y)))
            size += len(Y)
            for wid, y in zip(members, Y):
                tokens.append(Token(y, Y, gset, n + 1))
                map0.append(y[0])
                map1.append(y[1])
                for other in members:
                    rel.add((wid, other))
                for t in gset:
                    rel.add((wid, t))
            fresh[(Y, gset)] = tuple(members)
            by_up.setdefault(g | to_mask(members), []).extend(members)
    frame = Frame(size, frozenset(rel))
    p0 = PMorphism(frame, w0, map0)
    p1 = PMorphism(frame, w1, map1)
    emb = PMorphism(x, frame, tuple(range(x.size)))
    by_up_frozen = {k: tuple(v) for k, v in by_up.items()}
    return ProductLevel(n + 1, frame, p0, p1, emb, tuple(tokens), fresh, by_up_frozen)


def product_levels(w0: Frame, w1: Frame, max_depth: int,
                   max_candidates: int = DEFAULT_MAX_CANDIDATES,
                   max_star: int | None = None) -> list[ProductLevel]:
    """Levels ``X^0 .. X^max_depth`` of the product of two preorders."""
    _require_s4(w0, "first factor")
    _require_s4(w1, "second factor")
    levels = [_empty_level(w0, w1)]
    for _ in range(max_depth):
        levels.append(next_level(levels[-1], w0, w1, max_candidates, max_star))
    return levels


def levels_until_stable(w0: Frame, w1: Frame, max_depth: int,
                        max_candidates: int = DEFAULT_MAX_CANDIDATES) -> tuple[list[ProductLevel], bool]:
    """Grow levels until one adds nothing; the flag says whether that happened."""
    _require_s4(w0, "first factor")
    _require_s4(w1, "second factor")
    levels = [_empty_level(w0, w1)]
    for _ in range(max_depth):
        nxt = next_level(levels[-1], w0, w1, max_candidates)
        levels.append(nxt)
        if nxt.size == levels[-2].size:
            return levels, True
    return levels, False


# -- mediation ------------------------------------------------------------------------------------

@dataclass(frozen=True)
class Cone:
    apex: Frame
    f0: PMorphism
    f1: PMorphism

    def __post_init__(self):
        if self.f0.dom != self.apex or self.f1.dom != self.apex:
            raise ValueError("cone legs must start at the apex")


def mediate(cone: Cone, levels: Sequence[ProductLevel]) -> PMorphism:
    """The unique p-morphism ``m`` into the top level with ``p_i . m = f_i``."""
    u = cone.apex
    _require_s4(u, "cone apex")
    top = levels[-1]
    if top.p0.cod != cone.f0.cod or top.p1.cod != cone.f1.cod:
        raise ProductError("cone legs do not land in the product factors")
    d = fc.depths(u)
    if u.size and max(d) > top.n:
        raise ProductError(f"levels reach depth {top.n}, the apex needs {max(d)}")
    part = fc.clusters(u)
    order = sorted(range(len(part.clusters)), key=lambda i: d[min(part.clusters[i])])
    image = [-1] * u.size
    for ci in order:
        c = part.clusters[ci]
        w = min(c)
        below = [v for v in bits(u.succ[w]) if v not in c]
        gset = frozenset(image[v] for v in below)
        ys = {u_: (cone.f0.map[u_], cone.f1.map[u_]) for u_ in c}
        Y = tuple(sorted(set(ys.values())))
        cluster = top.fresh.get((Y, gset))
        if cluster is not None:
            # case a: the cluster of (Y, G) is a fresh cluster of the product
            where = {top.labels(x): x for x in cluster}
            for u_ in c:
                image[u_] = where[ys[u_]]
            continue
        # case b: land in the existing cluster whose up-set is G
        where = {top.labels(x): x for x in top.by_up.get(to_mask(gset), ())}
        for u_ in c:
            if ys[u_] not in where:
                raise ProductError(f"no product point over {ys[u_]} with up-set {sorted(gset)}")
            image[u_] = where[ys[u_]]
    return PMorphism(u, top.frame, image)


# -- restriction to a logic ----------------------------------------------------------------------

def _restrict_level(level: ProductLevel, keep: list[int], prev_keep: list[int] | None,
                    prev_frame: Frame | None) -> ProductLevel:
    sub, emb = fc.restrict(level.frame, keep)
    index = {w: i for i, w in enumerate(emb)}
    p0 = PMorphism(sub, level.p0.cod, tuple(level.p0.map[w] for w in emb))
    p1 = PMorphism(sub, level.p1.cod, tuple(level.p1.map[w] for w in emb))
    tokens = []
    for w in emb:
        t = level.tokens[w]
        tokens.append(Token(t.y, t.Y, frozenset(index[g] for g in t.G), t.level))
    fresh = {}
    for (Y, G), members in level.fresh.items():
        if all(m in index for m in members):
            fresh[(Y, frozenset(index[g] for g in G))] = tuple(index[m] for m in members)
    by_up = {}
    for x in emb:
        key = to_mask(index[v] for v in bits(level.frame.succ[x]))
        by_up.setdefault(key, []).append(index[x])
    prev_emb = None
    if prev_keep is not None:
        prev_emb = PMorphism(prev_frame, sub, tuple(index[w] for w in prev_keep))
    return ProductLevel(level.n, sub, p0, p1, prev_emb, tuple(tokens), fresh,
                        {k: tuple(v) for k, v in by_up.items()})


def restrict_to_logic(levels: Sequence[ProductLevel], spec: LogicSpec) -> list[ProductLevel]:
    """Keep the worlds whose cone lies in the logic, level by level."""
    if not spec.extends_s4:
        raise ProductError(f"{spec} does not extend S4")
    out = []
    prev_keep, prev_frame = None, None
    for level in levels:
        keep = []
        for x in range(level.size):
            cone, _ = fc.restrict(level.frame, bits(level.frame.star_masks[x]))
            if frame_in_logic(spec, cone):
                keep.append(x)
        restricted = _restrict_level(level, keep, prev_keep, prev_frame)
        out.append(restricted)
        prev_keep, prev_frame = keep, restricted.frame
    return out


def product_levels_in_logic(w0: Frame, w1: Frame, max_depth: int, spec: LogicSpec,
                            max_candidates: int = DEFAULT_MAX_CANDIDATES) -> list[ProductLevel]:
    """Build levels while discarding, at every step, fresh clusters whose cone leaves the logic."""
    _require_s4(w0, "first factor")
    _require_s4(w1, "second factor")
    levels = [_empty_level(w0, w1)]
    for _ in range(max_depth):
        grown = next_level(levels[-1], w0, w1, max_candidates)
        keep = list(range(levels[-1].size))
        for x in grown.new_worlds():
            cone, _ = fc.restrict(grown.frame, bits(grown.frame.star_masks[x]))
            if frame_in_logic(spec, cone):
                keep.append(x)
        lvl = _restrict_level(grown, keep, list(range(levels[-1].size)), levels[-1].frame)
        levels.append(lvl)
    return levels


def depth_slice(f: Frame, n: int) -> frozenset[int]:
    d = fc.depths(f)
    return frozenset(w for w in f.worlds if d[w] <= n)
