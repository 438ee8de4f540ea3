"""Presheaves on finite categories and their frames of elements.

Conventions: an arrow ``h: d -> c`` acts on a presheaf contravariantly,
``F(h): F(c) -> F(d)``, written ``x . h``. The frame of elements has a world
``(c, x)`` for every object ``c`` and ``x`` in ``F(c)``, and
``(c, x) -> (d, x . h)`` for every arrow ``h: d -> c``. The strict variant
keeps only arrows ``h: d -> c`` with no arrow ``c -> d``.

Sets ``F(c)`` are ``range(n)``; functions are tuples.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

from . import frame_core as fc
from .frame_core import Frame
from .logic import LogicSpec, frame_in_logic
from .pmorph import DEFAULT_MAX_MAPS, PMorphism, enumerate_pmorphisms, iter_pmorphisms


class CategoryError(ValueError):
    pass


class PresheafError(ValueError):
    pass


# -- finite categories ------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FinCategory:
    """Objects ``0..n-1``; arrow ``i`` goes ``src[i] -> tgt[i]``.

    ``compose[(g, f)]`` is ``g . f`` (first ``f``, then ``g``) for composable pairs.
    """

    name: str
    objects: tuple[str, ...]
    src: tuple[int, ...]
    tgt: tuple[int, ...]
    compose: dict = field(repr=False)
    identity: tuple[int, ...]
    arrow_names: tuple[str, ...] = ()

    def __post_init__(self):
        n_arr = len(self.src)
        if len(self.tgt) != n_arr:
            raise CategoryError("src and tgt must list every arrow")
        for c, i in enumerate(self.identity):
            if self.src[i] != c or self.tgt[i] != c:
                raise CategoryError(f"identity of object {c} is not an endo-arrow of it")
        for g in range(n_arr):
            for f in range(n_arr):
                if self.tgt[f] != self.src[g]:
                    if (g, f) in self.compose:
                        raise CategoryError(f"composite of non-composable arrows {g} . {f}")
                    continue
                k = self.compose.get((g, f))
                if k is None:
                    raise CategoryError(f"missing composite {g} . {f}")
                if self.src[k] != self.src[f] or self.tgt[k] != self.tgt[g]:
                    raise CategoryError(f"composite {g} . {f} has the wrong type")
        for f in range(n_arr):
            if self.compose[(self.identity[self.tgt[f]], f)] != f or self.compose[(f, self.identity[self.src[f]])] != f:
                raise CategoryError(f"identity law fails for arrow {f}")
        for h, g, f in itertools.product(range(n_arr), repeat=3):
            if self.tgt[f] == self.src[g] and self.tgt[g] == self.src[h]:
                if self.compose[(h, self.compose[(g, f)])] != self.compose[(self.compose[(h, g)], f)]:
                    raise CategoryError(f"associativity fails for {h} . {g} . {f}")

    @property
    def arrows(self) -> range:
        return range(len(self.src))

    def hom(self, a: int, b: int) -> list[int]:
        return [i for i in self.arrows if self.src[i] == a and self.tgt[i] == b]

    def into(self, c: int) -> list[int]:
        """Arrows with codomain ``c``, in arrow order."""
        return [i for i in self.arrows if self.tgt[i] == c]

    @cached_property
    def is_poset(self) -> bool:
        return all(len(self.hom(a, b)) <= 1 for a in range(len(self.objects)) for b in range(len(self.objects))) and all(
            not (self.hom(a, b) and self.hom(b, a)) or a == b
            for a in range(len(self.objects)) for b in range(len(self.objects))
        )


def monoid(name: str, elements: Sequence[str], mult, unit: int) -> FinCategory:
    """One-object category; ``mult(g, f)`` is the composite ``g . f``."""
    n = len(elements)
    compose = {(g, f): mult(g, f) for g in range(n) for f in range(n)}
    return FinCategory(name, ("*",), (0,) * n, (0,) * n, compose, (unit,), tuple(elements))


def chain_poset(n: int) -> FinCategory:
    """Objects ``0..n-1`` with one arrow ``i -> j`` whenever ``i <= j``."""
    pairs = [(i, j) for i in range(n) for j in range(n) if i <= j]
    index = {p: k for k, p in enumerate(pairs)}
    compose = {}
    for g, (b, c) in enumerate(pairs):
        for f, (a, b2) in enumerate(pairs):
            if b2 == b:
                compose[(g, f)] = index[(a, c)]
    return FinCategory(
        f"chain-poset:{n}", tuple(str(i) for i in range(n)),
        tuple(a for a, _ in pairs), tuple(b for _, b in pairs), compose,
        tuple(index[(i, i)] for i in range(n)), tuple(f"{a}<={b}" for a, b in pairs),
    )


def builtin_category(name: str) -> FinCategory:
    if name == "z2-mult":
        return monoid(name, ("0", "1"), lambda g, f: (g * f) % 2, 1)
    if name == "z3-mult":
        return monoid(name, ("0", "1", "2"), lambda g, f: (g * f) % 3, 1)
    if name == "trivial":
        return monoid(name, ("1",), lambda g, f: 0, 0)
    if name == "z2-add":
        return monoid(name, ("0", "1"), lambda g, f: (g + f) % 2, 0)
    if name.startswith("chain-poset:"):
        try:
            n = int(name.split(":", 1)[1])
        except ValueError:
            raise CategoryError(f"bad chain poset size in {name!r}") from None
        if n < 0:
            raise CategoryError("chain poset size must be non-negative")
        return chain_poset(n)
    raise CategoryError(f"unknown category {name!r}; expected z2-mult, z3-mult, trivial, z2-add or chain-poset:<n>")


BUILTIN_CATEGORIES = ("z2-mult", "z3-mult", "trivial", "z2-add", "chain-poset:<n>")


# -- presheaves and natural transformations ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Presheaf:
    category: FinCategory
    sizes: tuple[int, ...]
    # action[h] maps F(tgt h) -> F(src h)
    action: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        C = self.category
        if len(self.sizes) != len(C.objects) or len(self.action) != len(C.src):
            raise PresheafError("presheaf must give a set per object and a function per arrow")
        for h in C.arrows:
            fn = self.action[h]
            if len(fn) != self.sizes[C.tgt[h]] or any(not 0 <= v < self.sizes[C.src[h]] for v in fn):
                raise PresheafError(f"action of arrow {h} has the wrong type")
        for c, i in enumerate(C.identity):
            if self.action[i] != tuple(range(self.sizes[c])):
                raise PresheafError(f"identity of object {c} does not act as the identity")
        for (g, f), k in C.compose.items():
            # x . (g f) == (x . g) . f
            if self.action[k] != tuple(self.action[f][v] for v in self.action[g]):
                raise PresheafError(f"contravariance fails for {g} . {f}")

    def act(self, x: int, h: int) -> int:
        return self.action[h][x]

    def key(self) -> tuple:
        return self.sizes, self.action


def representable(C: FinCategory, c: int) -> Presheaf:
    """``C[-, c]``: elements of ``F(d)`` index the arrows ``d -> c`` in arrow order."""
    homs = [[h for h in C.hom(d, c)] for d in range(len(C.objects))]
    pos = [{h: i for i, h in enumerate(hs)} for hs in homs]
    action = []
    for h in C.arrows:
        d, e = C.src[h], C.tgt[h]
        # h: d -> e acts F(e) -> F(d) by precomposition
        action.append(tuple(pos[d][C.compose[(k, h)]] for k in homs[e]))
    return Presheaf(C, tuple(len(hs) for hs in homs), tuple(action))


def terminal_presheaf(C: FinCategory) -> Presheaf:
    return Presheaf(C, (1,) * len(C.objects), tuple((0,) for _ in C.arrows))


@dataclass(frozen=True, eq=False)
class NatTrans:
    source: Presheaf
    target: Presheaf
    components: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        C = self.source.category
        if self.target.category is not C:
            raise PresheafError("natural transformation between presheaves on different categories")
        for c, comp in enumerate(self.components):
            if len(comp) != self.source.sizes[c] or any(not 0 <= v < self.target.sizes[c] for v in comp):
                raise PresheafError(f"component at object {c} has the wrong type")
        for h in C.arrows:
            d, c = C.src[h], C.tgt[h]
            for x in range(self.source.sizes[c]):
                if self.components[d][self.source.act(x, h)] != self.target.act(self.components[c][x], h):
                    raise PresheafError(f"naturality fails at arrow {h}, element {x}")

    def then(self, other: "NatTrans") -> "NatTrans":
        return NatTrans(self.source, other.target,
                        tuple(tuple(other.components[c][v] for v in comp) for c, comp in enumerate(self.components)))

    @property
    def is_identity(self) -> bool:
        return self.source is self.target and all(comp == tuple(range(len(comp))) for comp in self.components)


def identity_nat(F: Presheaf) -> NatTrans:
    return NatTrans(F, F, tuple(tuple(range(n)) for n in F.sizes))


# -- frames of elements ---------------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ElementsFrame:
    frame: Frame
    labels: tuple[tuple[int, int], ...]
    index: dict = field(repr=False)


def _visible(C: FinCategory, h: int, strict: bool) -> bool:
    return not strict or not C.hom(C.tgt[h], C.src[h])


def elements_frame(F: Presheaf, strict: bool = False) -> ElementsFrame:
    C = F.category
    labels = tuple((c, x) for c in range(len(C.objects)) for x in range(F.sizes[c]))
    index = {lab: i for i, lab in enumerate(labels)}
    rel = set()
    for h in C.arrows:
        if not _visible(C, h, strict):
            continue
        d, c = C.src[h], C.tgt[h]
        for x in range(F.sizes[c]):
            rel.add((index[(c, x)], index[(d, F.act(x, h))]))
    return ElementsFrame(Frame(len(labels), frozenset(rel)), labels, index)


def k_on_morphism(alpha: NatTrans, strict: bool = False) -> PMorphism:
    src = elements_frame(alpha.source, strict)
    tgt = elements_frame(alpha.target, strict)
    mapping = [tgt.index[(c, alpha.components[c][x])] for c, x in src.labels]
    return PMorphism(src.frame, tgt.frame, mapping)


def representable_frame(C: FinCategory, c: int, strict: bool = False) -> ElementsFrame:
    return elements_frame(representable(C, c), strict)


def _identity_world(C: FinCategory, c: int, rep: ElementsFrame) -> int:
    pos = C.hom(c, c).index(C.identity[c])
    return rep.index[(c, pos)]


# -- the frame-to-presheaf functor, unit and counit ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FramePresheaf:
    """``F(W)(c)`` lists the p-morphisms from the representable frame at ``c`` into ``W``."""

    presheaf: Presheaf
    frame: Frame
    maps: tuple[tuple[tuple[int, ...], ...], ...]


def _rep_arrow_map(C: FinCategory, h: int, reps: list[ElementsFrame], strict: bool) -> tuple[int, ...]:
    """World map of K(C[-, h]) from the frame at ``src h`` to the frame at ``tgt h``."""
    d, c = C.src[h], C.tgt[h]
    out = []
    for e, k_pos in reps[d].labels:
        k = C.hom(e, d)[k_pos]
        out.append(reps[c].index[(e, C.hom(e, c).index(C.compose[(h, k)]))])
    return tuple(out)


def frame_presheaf(C: FinCategory, W: Frame, strict: bool = False,
                   budget: int | None = DEFAULT_MAX_MAPS) -> FramePresheaf:
    reps = [representable_frame(C, c, strict) for c in range(len(C.objects))]
    maps = tuple(
        tuple(g.map for g in enumerate_pmorphisms(reps[c].frame, W, budget=budget)) for c in range(len(C.objects))
    )
    where = [{m: i for i, m in enumerate(ms)} for ms in maps]
    action = []
    for h in C.arrows:
        d, c = C.src[h], C.tgt[h]
        kh = _rep_arrow_map(C, h, reps, strict)
        action.append(tuple(where[d][tuple(g[v] for v in kh)] for g in maps[c]))
    return FramePresheaf(Presheaf(C, tuple(len(ms) for ms in maps), tuple(action)), W, maps)


def frame_presheaf_map(C: FinCategory, f: PMorphism, strict: bool = False,
                       source: FramePresheaf | None = None, target: FramePresheaf | None = None) -> NatTrans:
    """``F(f)``: post-composition with ``f``."""
    source = source or frame_presheaf(C, f.dom, strict)
    target = target or frame_presheaf(C, f.cod, strict)
    where = [{m: i for i, m in enumerate(ms)} for ms in target.maps]
    comps = tuple(
        tuple(where[c][tuple(f.map[v] for v in g)] for g in source.maps[c]) for c in range(len(C.objects))
    )
    return NatTrans(source.presheaf, target.presheaf, comps)


def counit(C: FinCategory, W: Frame, strict: bool = False, fp: FramePresheaf | None = None) -> PMorphism:
    """``K(F(W)) -> W`` evaluating each arrow at the identity world."""
    fp = fp or frame_presheaf(C, W, strict)
    ef = elements_frame(fp.presheaf, strict)
    ids = [_identity_world(C, c, representable_frame(C, c, strict)) for c in range(len(C.objects))]
    return PMorphism(ef.frame, W, [fp.maps[c][g][ids[c]] for c, g in ef.labels])


def unit(F: Presheaf, strict: bool = False) -> tuple[NatTrans, FramePresheaf]:
    """``F -> F(K(F))`` sending ``x`` in ``F(c)`` to ``K`` of its Yoneda arrow."""
    C = F.category
    ef = elements_frame(F, strict)
    fp = frame_presheaf(C, ef.frame, strict)
    where = [{m: i for i, m in enumerate(ms)} for ms in fp.maps]
    comps = []
    for c in range(len(C.objects)):
        rep = representable_frame(C, c, strict)
        row = []
        for x in range(F.sizes[c]):
            # (e, k) with k: e -> c goes to (e, x . k)
            mapping = tuple(ef.index[(e, F.act(x, C.hom(e, c)[k_pos]))] for e, k_pos in rep.labels)
            row.append(where[c][mapping])
        comps.append(tuple(row))
    return NatTrans(F, fp.presheaf, tuple(comps)), fp


def triangle_on_presheaf(F: Presheaf, strict: bool = False) -> bool:
    """``eps_{K(F)} . K(eta_F)`` is the identity of ``K(F)``."""
    eta, fp = unit(F, strict)
    k_eta = k_on_morphism(eta, strict)
    eps = counit(F.category, elements_frame(F, strict).frame, strict, fp)
    return k_eta.then(eps).map == tuple(range(k_eta.dom.size))


def triangle_on_frame(C: FinCategory, W: Frame, strict: bool = False) -> bool:
    """``F(eps_W) . eta_{F(W)}`` is the identity of ``F(W)``."""
    fp = frame_presheaf(C, W, strict)
    eps = counit(C, W, strict, fp)
    eta, fkf = unit(fp.presheaf, strict)
    f_eps = frame_presheaf_map(C, eps, strict, source=fkf, target=fp)
    return eta.then(f_eps).components == tuple(tuple(range(n)) for n in fp.presheaf.sizes)


# -- enumeration of presheaves ---------------------------------------------------------------------------

def _canonical(F: Presheaf) -> tuple:
    C = F.category
    best = None
    perms = [list(itertools.permutations(range(n))) for n in F.sizes]
    for choice in itertools.product(*perms):
        # relabel x in F(c) as choice[c][x]
        act = []
        for h in C.arrows:
            d, c = C.src[h], C.tgt[h]
            inv = [0] * F.sizes[c]
            for x, y in enumerate(choice[c]):
                inv[y] = x
            act.append(tuple(choice[d][F.action[h][inv[y]]] for y in range(F.sizes[c])))
        key = tuple(act)
        if best is None or key < best:
            best = key
    return F.sizes, best


def enumerate_presheaves(C: FinCategory, max_elements: int, up_to_iso: bool = True) -> list[Presheaf]:
    """Presheaves with at most ``max_elements`` elements in total."""
    n_obj = len(C.objects)
    out = []
    seen = set()
    free = [h for h in C.arrows if h not in C.identity]
    for sizes in itertools.product(range(max_elements + 1), repeat=n_obj):
        if sum(sizes) > max_elements:
            continue
        action: list[tuple[int, ...] | None] = [None] * len(C.src)
        for c, i in enumerate(C.identity):
            action[i] = tuple(range(sizes[c]))

        def consistent() -> bool:
            for (g, f), k in C.compose.items():
                if action[g] is None or action[f] is None or action[k] is None:
                    continue
                if action[k] != tuple(action[f][v] for v in action[g]):
                    return False
            return True

        def rec(i: int):
            if i == len(free):
                yield Presheaf(C, sizes, tuple(action))
                return
            h = free[i]
            for fn in itertools.product(range(sizes[C.src[h]]), repeat=sizes[C.tgt[h]]):
                action[h] = fn
                if consistent():
                    yield from rec(i + 1)
            action[h] = None

        for F in rec(0):
            if up_to_iso:
                key = _canonical(F)
                if key in seen:
                    continue
                seen.add(key)
            out.append(F)
    return out


# -- equivalence checks -----------------------------------------------------------------------------------

def counit_injective(C: FinCategory, W: Frame, strict: bool = False) -> bool:
    eps = counit(C, W, strict)
    return eps.is_injective


def all_relations(n: int):
    """Every frame on ``n`` labelled worlds."""
    pairs = [(a, b) for a in range(n) for b in range(n)]
    for code in range(1 << len(pairs)):
        yield Frame(n, frozenset(p for i, p in enumerate(pairs) if code >> i & 1))


def counit_injective_on_all_frames(C: FinCategory, max_size: int, strict: bool = False) -> tuple[bool, Frame | None]:
    """Injectivity of the counit on every frame with at most ``max_size`` worlds.

    An arrow from a representable frame sends its root onto a world ``w``
    and, being open, its image is exactly the subframe generated by ``w``.
    Two arrows with the same value at the root therefore both land inside a
    point-generated subframe no larger than the representable frames, so
    only frames up to that size can exhibit a collision. The check runs over
    every labelled frame up to ``min(max_size, largest representable)``.
    """
    largest = max((representable_frame(C, c, strict).frame.size for c in range(len(C.objects))), default=0)
    for n in range(min(max_size, largest) + 1):
        for W in all_relations(n):
            if not counit_injective(C, W, strict):
                return False, W
    return True, None


@dataclass
class EquivalenceReport:
    category: str
    spec: LogicSpec
    strict: bool
    presheaves: int = 0
    frames: int = 0
    outside_logic: list[Presheaf] = field(default_factory=list)
    counit_not_bijective: list[Frame] = field(default_factory=list)
    unit_not_iso: list[Presheaf] = field(default_factory=list)
    triangle_failures: list[object] = field(default_factory=list)
    counit_collision: Frame | None = None

    @property
    def ok(self) -> bool:
        return not (self.outside_logic or self.counit_not_bijective or self.unit_not_iso
                    or self.triangle_failures or self.counit_collision is not None)


def _frames_of(spec: LogicSpec, bound: int):
    from .amalgamation import frames_in_logic

    return frames_in_logic(spec, bound)


def verify_equivalence(C: FinCategory, spec: LogicSpec, frame_bound: int, presheaf_bound: int,
                       strict: bool = False) -> EquivalenceReport:
    """Check that the frames of elements functor is an equivalence onto the frames of ``spec``.

    For strict mode on categories that are not posets this is run without
    any expectation about the outcome.
    """
    report = EquivalenceReport(C.name, spec, strict)
    for F in enumerate_presheaves(C, presheaf_bound):
        report.presheaves += 1
        ef = elements_frame(F, strict)
        if not frame_in_logic(spec, ef.frame):
            report.outside_logic.append(F)
        eta, _ = unit(F, strict)
        if not all(len(set(comp)) == len(comp) == m for comp, m in zip(eta.components, eta.target.sizes)):
            report.unit_not_iso.append(F)
        if not triangle_on_presheaf(F, strict):
            report.triangle_failures.append(F)
    for W in _frames_of(spec, frame_bound):
        report.frames += 1
        eps = counit(C, W, strict)
        if not (eps.is_injective and eps.is_surjective):
            report.counit_not_bijective.append(W)
        if not triangle_on_frame(C, W, strict):
            report.triangle_failures.append(W)
    ok, witness = counit_injective_on_all_frames(C, frame_bound, strict)
    if not ok:
        report.counit_collision = witness
    return report


def strict_chain_endomorphisms(m: int) -> list[PMorphism]:
    f = fc.strict_chain(m)
    return list(iter_pmorphisms(f, f))
