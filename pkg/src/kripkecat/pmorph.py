"""Validated p-morphisms, enumeration and subreduction search."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .frame_core import Frame, bits, enumerate_frames, generated_subframe_masks, restrict, to_mask

DEFAULT_MAX_MAPS = 10**6


class PMorphismError(ValueError):
    """A map fails to be stable or open; ``kind`` and ``witness`` pinpoint where."""

    def __init__(self, kind: str, witness: tuple, message: str):
        super().__init__(message)
        self.kind = kind
        self.witness = witness


class SearchBudgetExceeded(RuntimeError):
    """A search visited more candidates than its budget allows."""


def violation(dom: Frame, cod: Frame, mapping: Sequence[int]) -> PMorphismError | None:
    if len(mapping) != dom.size:
        return PMorphismError("shape", (len(mapping),), f"map has {len(mapping)} entries, domain has {dom.size} worlds")
    for w, v in enumerate(mapping):
        if not 0 <= v < cod.size:
            return PMorphismError("shape", (w, v), f"world {w} maps to {v}, outside the codomain")
    for a, b in sorted(dom.rel):
        if not cod.related(mapping[a], mapping[b]):
            return PMorphismError(
                "stability", (a, b),
                f"stability fails on edge {a}->{b}: {mapping[a]}->{mapping[b]} is not an edge",
            )
    for w in dom.worlds:
        reached = to_mask(mapping[x] for x in bits(dom.succ[w]))
        missing = cod.succ[mapping[w]] & ~reached
        if missing:
            v = next(bits(missing))
            return PMorphismError(
                "openness", (w, v),
                f"openness fails at world {w}: successor {v} of {mapping[w]} has no preimage above {w}",
            )
    return None


def is_pmorphism(dom: Frame, cod: Frame, mapping: Sequence[int]) -> bool:
    return violation(dom, cod, mapping) is None


@dataclass(frozen=True)
class PMorphism:
    dom: Frame
    cod: Frame
    map: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "map", tuple(int(v) for v in self.map))
        err = violation(self.dom, self.cod, self.map)
        if err is not None:
            raise err

    def __call__(self, w: int) -> int:
        return self.map[w]

    def then(self, other: "PMorphism") -> "PMorphism":
        """Diagrammatic composite: first ``self`` then ``other``."""
        if other.dom != self.cod:
            raise ValueError("composite of non-composable p-morphisms")
        return PMorphism(self.dom, other.cod, tuple(other.map[v] for v in self.map))

    def __matmul__(self, other: "PMorphism") -> "PMorphism":
        # g @ f means g after f
        return other.then(self)

    @property
    def is_injective(self) -> bool:
        return len(set(self.map)) == len(self.map)

    @property
    def is_surjective(self) -> bool:
        return len(set(self.map)) == self.cod.size

    def image_mask(self) -> int:
        return to_mask(self.map)


def make_pmorphism(dom: Frame, cod: Frame, mapping: Sequence[int]) -> PMorphism:
    return PMorphism(dom, cod, tuple(mapping))


def identity(f: Frame) -> PMorphism:
    return PMorphism(f, f, tuple(f.worlds))


def inclusion(f: Frame, members) -> tuple[Frame, PMorphism]:
    """Generated subframe on ``members`` with its inclusion arrow."""
    sub, emb = restrict(f, members)
    return sub, PMorphism(sub, f, emb)


def image(f: PMorphism):
    """Image factorisation ``f = m . e`` with e surjective and m an inclusion."""
    members = frozenset(f.map)
    sub, m = inclusion(f.cod, members)
    index = {w: i for i, w in enumerate(m.map)}
    e = PMorphism(f.dom, sub, tuple(index[v] for v in f.map))
    return members, e, m


# -- enumeration ----------------------------------------------------------------

def _candidates(dom: Frame, cod: Frame) -> list[list[int]]:
    # cheap necessary conditions: reflexive points go to reflexive points, and
    # openness forces |succ(f(w))| <= |succ(w)| with emptiness preserved
    out = []
    for w in dom.worlds:
        ns = bin(dom.succ[w]).count("1")
        refl = dom.related(w, w)
        cand = []
        for v in cod.worlds:
            nv = bin(cod.succ[v]).count("1")
            if refl and not cod.related(v, v):
                continue
            if nv > ns or (ns > 0) != (nv > 0):
                continue
            cand.append(v)
        out.append(cand)
    return out


def iter_pmorphisms(dom: Frame, cod: Frame, surjective_only: bool = False,
                    budget: int | None = DEFAULT_MAX_MAPS,
                    allowed: Sequence | None = None) -> Iterator[PMorphism]:
    """Yield p-morphisms in lexicographic order of their map sequence.

    ``budget`` bounds the number of partial assignments tried; ``allowed``
    optionally restricts, per domain world, the admissible images.
    """
    n = dom.size
    if n == 0:
        if not surjective_only or cod.size == 0:
            yield PMorphism(dom, cod, ())
        return
    if cod.size == 0 or (surjective_only and cod.size > n):
        return
    cands = _candidates(dom, cod)
    if allowed is not None:
        cands = [[v for v in c if v in ok] for c, ok in zip(cands, map(set, allowed))]
    # openness of w can be checked once w and all its successors are assigned
    ready: list[list[int]] = [[] for _ in range(n)]
    for w in dom.worlds:
        last = max([w, *bits(dom.succ[w])])
        ready[last].append(w)
    mapping = [0] * n
    visited = 0
    cod_succ, dom_succ, dom_pred = cod.succ, dom.succ, dom.pred

    def rec(k: int, hit: int) -> Iterator[tuple[int, ...]]:
        nonlocal visited
        if k == n:
            if not surjective_only or hit == cod.full:
                yield tuple(mapping)
            return
        lower = (1 << k) - 1
        for v in cands[k]:
            visited += 1
            if budget is not None and visited > budget:
                raise SearchBudgetExceeded(f"p-morphism search exceeded {budget} candidates")
            ok = True
            for u in bits(dom_succ[k] & lower):
                if not cod_succ[v] >> mapping[u] & 1:
                    ok = False
                    break
            if ok:
                for u in bits(dom_pred[k] & lower):
                    if not cod_succ[mapping[u]] >> v & 1:
                        ok = False
                        break
            if ok and dom_succ[k] >> k & 1 and not cod_succ[v] >> v & 1:
                ok = False
            if not ok:
                continue
            mapping[k] = v
            for w in ready[k]:
                reached = 0
                for x in bits(dom_succ[w]):
                    reached |= 1 << mapping[x]
                if cod_succ[mapping[w]] & ~reached:
                    ok = False
                    break
            if not ok:
                continue
            new_hit = hit | (1 << v)
            if surjective_only and bin(cod.full & ~new_hit).count("1") > n - k - 1:
                continue
            yield from rec(k + 1, new_hit)

    for m in rec(0, 0):
        yield PMorphism(dom, cod, m)


def enumerate_pmorphisms(dom: Frame, cod: Frame, surjective_only: bool = False,
                         budget: int | None = DEFAULT_MAX_MAPS) -> list[PMorphism]:
    return list(iter_pmorphisms(dom, cod, surjective_only, budget))


def first_pmorphism(dom: Frame, cod: Frame, surjective_only: bool = False,
                    budget: int | None = DEFAULT_MAX_MAPS) -> PMorphism | None:
    return next(iter_pmorphisms(dom, cod, surjective_only, budget), None)


def validate_maps(dom: Frame, cod: Frame, maps) -> np.ndarray:
    """Which rows of ``maps`` (one candidate map per row) are p-morphisms."""
    maps = np.atleast_2d(np.asarray(maps, dtype=np.int64))
    if maps.size and (maps.min() < 0 or maps.max() >= cod.size):
        raise ValueError("a candidate map leaves the codomain")
    dom_succ = np.asarray(dom.succ, dtype=np.int64).reshape(dom.size)
    cod_succ = np.asarray(cod.succ, dtype=np.int64).reshape(cod.size)
    return _kernels.batch_is_pmorphism(dom_succ, cod_succ, maps)


def pmorphisms_by_filter(dom: Frame, cod: Frame, surjective_only: bool = False,
                         budget: int | None = DEFAULT_MAX_MAPS) -> list[PMorphism]:
    """All p-morphisms by checking every map in one batch; same order as :func:`enumerate_pmorphisms`."""
    total = cod.size ** dom.size
    if budget is not None and total > budget:
        raise SearchBudgetExceeded(f"{total} candidate maps exceed the budget of {budget}")
    maps = _kernels.all_maps(dom.size, cod.size)
    keep = maps[validate_maps(dom, cod, maps)]
    out = [PMorphism(dom, cod, tuple(row)) for row in keep.tolist()]
    if surjective_only:
        out = [f for f in out if f.is_surjective]
    return out


# -- subreduction -----------------------------------------------------------------

def subreduces(w: Frame, v: Frame, budget: int | None = DEFAULT_MAX_MAPS):
    """A generated subframe of ``w`` with a surjection onto ``v``, or None.

    Returns ``(members, p)`` where ``p`` maps the restricted subframe onto ``v``.
    """
    for mask in generated_subframe_masks(w):
        members = list(bits(mask))
        if len(members) < v.size:
            continue
        sub, _ = restrict(w, members)
        p = first_pmorphism(sub, v, surjective_only=True, budget=budget)
        if p is not None:
            return frozenset(members), p
    return None


def subreduces_from_cone(w: Frame, v: Frame, budget: int | None = DEFAULT_MAX_MAPS):
    """Like :func:`subreduces` but only inside single cones ``x*``."""
    for x in w.worlds:
        sub, emb = restrict(w, bits(w.star_masks[x]))
        found = subreduces(sub, v, budget)
        if found is not None:
            members, p = found
            return frozenset(emb[i] for i in members), p
    return None


# -- mono / epi oracles -------------------------------------------------------------

def _probe_frames(probe_size: int, transitive: bool) -> list[Frame]:
    out = []
    for k in range(1, probe_size + 1):
        out.extend(enumerate_frames(k, transitive=transitive, up_to_iso=True))
    return out


def is_monomorphism_oracle(f: PMorphism, probe_size: int, transitive: bool = True,
                           budget: int | None = DEFAULT_MAX_MAPS) -> bool:
    """No two distinct parallel arrows from a probe frame are merged by ``f``."""
    for probe in _probe_frames(probe_size, transitive):
        seen: dict[tuple[int, ...], tuple[int, ...]] = {}
        for g in pmorphisms_by_filter(probe, f.dom, budget=budget):
            key = tuple(f.map[x] for x in g.map)
            if key in seen and seen[key] != g.map:
                return False
            seen[key] = g.map
    return True


def is_epimorphism(f: PMorphism) -> bool:
    from .limits import cokernel_pair

    _, i0, i1 = cokernel_pair(f)
    return i0.map == i1.map
