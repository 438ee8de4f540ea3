"""Finite Kripke frames and their basic combinatorics.

Worlds are the integers ``0..size-1``. Sets of worlds are returned as
``frozenset`` values; internally most algorithms work on integer bitmasks
(bit ``i`` stands for world ``i``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

PROPERTIES = (
    "reflexive",
    "transitive",
    "irreflexive",
    "confluent",
    "locally-linear",
    "antisymmetric",
    "equivalence-relation",
)


class FrameError(ValueError):
    """Raised when a frame operation's precondition does not hold."""


def bits(mask: int) -> Iterator[int]:
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def to_mask(worlds: Iterable[int]) -> int:
    m = 0
    for w in worlds:
        m |= 1 << w
    return m


@dataclass(frozen=True)
class Frame:
    size: int
    rel: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.size < 0:
            raise FrameError(f"negative frame size {self.size}")
        rel = frozenset((int(a), int(b)) for a, b in self.rel)
        for a, b in rel:
            if not (0 <= a < self.size and 0 <= b < self.size):
                raise FrameError(f"edge ({a}, {b}) out of range for size {self.size}")
        object.__setattr__(self, "rel", rel)

    @classmethod
    def from_succ(cls, succ: Sequence[int]) -> "Frame":
        return cls(len(succ), frozenset((a, b) for a, m in enumerate(succ) for b in bits(m)))

    @cached_property
    def succ(self) -> tuple[int, ...]:
        out = [0] * self.size
        for a, b in self.rel:
            out[a] |= 1 << b
        return tuple(out)

    @cached_property
    def pred(self) -> tuple[int, ...]:
        out = [0] * self.size
        for a, b in self.rel:
            out[b] |= 1 << a
        return tuple(out)

    @cached_property
    def star_masks(self) -> tuple[int, ...]:
        # iterate to a fixpoint; frames are small
        reach = [self.succ[w] | (1 << w) for w in range(self.size)]
        changed = True
        while changed:
            changed = False
            for w in range(self.size):
                m = reach[w]
                for v in bits(m):
                    m |= reach[v]
                if m != reach[w]:
                    reach[w] = m
                    changed = True
        return tuple(reach)

    @property
    def full(self) -> int:
        return (1 << self.size) - 1

    def related(self, a: int, b: int) -> bool:
        return bool(self.succ[a] >> b & 1)

    @property
    def worlds(self) -> range:
        return range(self.size)

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.size, self.size), dtype=np.bool_)
        for a, b in self.rel:
            adj[a, b] = True
        return adj

    def __repr__(self) -> str:
        return f"Frame({self.size}, {sorted(self.rel)})"


def _check_world(f: Frame, w: int) -> None:
    if not 0 <= w < f.size:
        raise FrameError(f"world {w} out of range for frame of size {f.size}")


# -- structural predicates ---------------------------------------------------

def is_reflexive(f: Frame) -> bool:
    return all(f.succ[w] >> w & 1 for w in f.worlds)


def is_irreflexive(f: Frame) -> bool:
    return not any(f.succ[w] >> w & 1 for w in f.worlds)


def is_transitive(f: Frame) -> bool:
    for w in f.worlds:
        s = f.succ[w]
        for v in bits(s):
            if f.succ[v] & ~s:
                return False
    return True


def is_antisymmetric(f: Frame) -> bool:
    return all(not (a != b and f.related(b, a)) for a, b in f.rel)


def is_symmetric(f: Frame) -> bool:
    return all(f.related(b, a) for a, b in f.rel)


def is_confluent(f: Frame) -> bool:
    for w in f.worlds:
        succ = list(bits(f.succ[w]))
        for v1, v2 in itertools.combinations(succ, 2):
            if not f.succ[v1] & f.succ[v2]:
                return False
    return True


def is_locally_linear(f: Frame) -> bool:
    for w in f.worlds:
        for v1, v2 in itertools.combinations(bits(f.succ[w]), 2):
            if not (f.related(v1, v2) or f.related(v2, v1)):
                return False
    return True


_PREDICATES = {
    "reflexive": is_reflexive,
    "transitive": is_transitive,
    "irreflexive": is_irreflexive,
    "confluent": is_confluent,
    "locally-linear": is_locally_linear,
    "antisymmetric": is_antisymmetric,
    "equivalence-relation": lambda f: is_reflexive(f) and is_transitive(f) and is_symmetric(f),
}


def check_property(f: Frame, prop: str) -> bool:
    try:
        pred = _PREDICATES[prop]
    except KeyError:
        raise FrameError(f"unknown property {prop!r}; expected one of {', '.join(PROPERTIES)}") from None
    return pred(f)


def _require_transitive(f: Frame, what: str) -> None:
    if not is_transitive(f):
        raise FrameError(f"{what} is only defined for transitive frames")


# -- sets of worlds -------------------------------------------------------------

def up_set(f: Frame, w: int) -> frozenset[int]:
    _check_world(f, w)
    return frozenset(bits(f.succ[w]))


def star(f: Frame, w: int) -> frozenset[int]:
    _check_world(f, w)
    return frozenset(bits(f.star_masks[w]))


def is_up_closed(f: Frame, members: Iterable[int]) -> bool:
    m = to_mask(members)
    return all(not (f.succ[w] & ~m) for w in bits(m))


def up_closure(f: Frame, members: Iterable[int]) -> frozenset[int]:
    m = 0
    for w in members:
        m |= f.star_masks[w]
    return frozenset(bits(m))


class TooManySubframes(RuntimeError):
    """Generated-subframe enumeration passed its limit."""


def generated_subframe_masks(f: Frame, limit: int | None = None, max_size: int | None = None) -> list[int]:
    """All up-closed subsets as bitmasks, sorted by (popcount, mask).

    ``max_size`` keeps only subsets with at most that many worlds.
    """
    # every up-closed set is a union of stars; close the star family under union
    found = {0}
    frontier = [0]
    stars = set(f.star_masks)
    if max_size is not None:
        stars = {s for s in stars if bin(s).count("1") <= max_size}
    while frontier:
        nxt = []
        for m in frontier:
            for s in stars:
                u = m | s
                if max_size is not None and bin(u).count("1") > max_size:
                    continue
                if u not in found:
                    found.add(u)
                    nxt.append(u)
                    if limit is not None and len(found) > limit:
                        raise TooManySubframes(f"more than {limit} generated subframes")
        frontier = nxt
    return sorted(found, key=lambda m: (bin(m).count("1"), m))


def generated_subframes(f: Frame) -> list[frozenset[int]]:
    return [frozenset(bits(m)) for m in generated_subframe_masks(f)]


def restrict(f: Frame, members: Iterable[int]) -> tuple[Frame, tuple[int, ...]]:
    """The subframe on ``members`` (renumbered in increasing order) and its embedding."""
    emb = tuple(sorted(set(members)))
    index = {w: i for i, w in enumerate(emb)}
    rel = frozenset((index[a], index[b]) for a, b in f.rel if a in index and b in index)
    return Frame(len(emb), rel), emb


# -- depth and clusters --------------------------------------------------------

def depths(f: Frame) -> tuple[int, ...]:
    _require_transitive(f, "depth")
    memo: dict[int, int] = {}

    def go(w: int) -> int:
        if w in memo:
            return memo[w]
        best = 0
        for v in bits(f.succ[w]):
            if v != w and not f.related(v, w):
                best = max(best, go(v))
        memo[w] = best + 1
        return memo[w]

    return tuple(go(w) for w in f.worlds)


def depth(f: Frame, w: int) -> int:
    _check_world(f, w)
    return depths(f)[w]


def frame_depth(f: Frame) -> int:
    return max(depths(f), default=0)


@dataclass(frozen=True)
class ClusterPartition:
    clusters: tuple[frozenset[int], ...]
    external: tuple[bool, ...]
    irreflexive_points: frozenset[int]

    def cluster_of(self, w: int) -> int | None:
        for i, c in enumerate(self.clusters):
            if w in c:
                return i
        return None


def clusters(f: Frame) -> ClusterPartition:
    _require_transitive(f, "clusters")
    d = depths(f)
    seen = 0
    out, ext = [], []
    irr = []
    for w in f.worlds:
        if not f.related(w, w):
            irr.append(w)
            continue
        if seen >> w & 1:
            continue
        c = frozenset(v for v in bits(f.succ[w]) if f.related(v, w))
        seen |= to_mask(c)
        out.append(c)
        ext.append(d[w] == 1)
    return ClusterPartition(tuple(out), tuple(ext), frozenset(irr))


def posetal_reflection(f: Frame):
    """Quotient of a preorder by its clusters, with the quotient p-morphism."""
    from .pmorph import make_pmorphism

    if not (is_reflexive(f) and is_transitive(f)):
        raise FrameError("posetal reflection needs a reflexive transitive frame")
    part = clusters(f)
    owner = [0] * f.size
    for i, c in enumerate(part.clusters):
        for w in c:
            owner[w] = i
    rel = frozenset((owner[a], owner[b]) for a, b in f.rel)
    q = Frame(len(part.clusters), rel)
    return q, make_pmorphism(f, q, owner)


def is_rooted(f: Frame) -> bool:
    return any(m == f.full for m in f.star_masks) if f.size else False


# -- constructors -----------------------------------------------------------

def empty() -> Frame:
    return Frame(0)


def cluster(n: int) -> Frame:
    return Frame(n, frozenset(itertools.product(range(n), repeat=2)))


def chain(n: int) -> Frame:
    """Reflexive linear order; world 0 is the root."""
    return Frame(n, frozenset((i, j) for i in range(n) for j in range(i, n)))


def strict_chain(n: int) -> Frame:
    return Frame(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)))


def add_root(f: Frame) -> Frame:
    """New reflexive root as world 0; old worlds shift up by one."""
    rel = {(0, 0)} | {(0, w + 1) for w in f.worlds} | {(a + 1, b + 1) for a, b in f.rel}
    return Frame(f.size + 1, frozenset(rel))


def add_final(f: Frame) -> Frame:
    """New reflexive final point appended as the last world."""
    e = f.size
    rel = set(f.rel) | {(w, e) for w in f.worlds} | {(e, e)}
    return Frame(f.size + 1, frozenset(rel))


def disjoint_sum(*frames: Frame) -> Frame:
    rel, off = set(), 0
    for g in frames:
        rel |= {(a + off, b + off) for a, b in g.rel}
        off += g.size
    return Frame(off, frozenset(rel))


def copies(k: int, f: Frame) -> Frame:
    return disjoint_sum(*([f] * k))


def fork(n: int) -> Frame:
    """A reflexive root below an n-point reflexive antichain."""
    return add_root(copies(n, chain(1)))


CONSTRUCTORS = {
    "cluster": cluster,
    "chain": chain,
    "strict_chain": strict_chain,
    "add_root": add_root,
    "add_final": add_final,
    "disjoint_sum": disjoint_sum,
    "copies": copies,
    "fork": fork,
}


def construct(kind: str, *params) -> Frame:
    try:
        return CONSTRUCTORS[kind](*params)
    except KeyError:
        raise FrameError(f"unknown frame kind {kind!r}") from None


# -- finite duality -------------------------------------------------------------

@dataclass(frozen=True)
class ModalAlgebraFin:
    """Powerset algebra over ``atoms`` points with a diamond table indexed by bitmask."""

    atoms: int
    diamond: tuple[int, ...]

    def __post_init__(self):
        if len(self.diamond) != 1 << self.atoms:
            raise FrameError("diamond table must cover every subset of the atoms")

    @property
    def top(self) -> int:
        return (1 << self.atoms) - 1

    def box(self, x: int) -> int:
        return self.top & ~self.diamond[self.top & ~x]

    def is_normal_additive(self) -> bool:
        if self.diamond[0] != 0:
            return False
        n = 1 << self.atoms
        return all(
            self.diamond[x | y] == self.diamond[x] | self.diamond[y]
            for x in range(n)
            for y in range(n)
        )


def complex_algebra(f: Frame) -> ModalAlgebraFin:
    table = []
    for x in range(1 << f.size):
        table.append(to_mask(w for w in f.worlds if f.succ[w] & x))
    return ModalAlgebraFin(f.size, tuple(table))


def atom_frame(a: ModalAlgebraFin) -> Frame:
    if not a.is_normal_additive():
        raise FrameError("algebra is not a normal additive powerset algebra")
    rel = frozenset((i, j) for i in range(a.atoms) for j in range(a.atoms) if a.diamond[1 << j] >> i & 1)
    return Frame(a.atoms, rel)


# -- isomorphism and enumeration --------------------------------------------------

def _refined_colours(h: Frame) -> list[int]:
    """Colour refinement on successors and predecessors, until the partition stops splitting."""
    succ = [list(bits(m)) for m in h.succ]
    pred = [list(bits(m)) for m in h.pred]
    colour = [int(h.related(w, w)) for w in h.worlds]
    count = len(set(colour))
    while True:
        keys = [
            (colour[w], tuple(sorted([colour[u] for u in succ[w]])), tuple(sorted([colour[u] for u in pred[w]])))
            for w in h.worlds
        ]
        table = {k: i for i, k in enumerate(sorted(set(keys)))}
        colour = [table[k] for k in keys]
        if len(table) == count:
            return colour
        count = len(table)


def find_isomorphism(f: Frame, g: Frame) -> tuple[int, ...] | None:
    if f.size != g.size or len(f.rel) != len(g.rel):
        return None
    if f.size == 0:
        return ()
    # refine both frames jointly so colour names are comparable
    joint = disjoint_sum(f, g)
    colour = _refined_colours(joint)
    fc_, gc = colour[: f.size], colour[f.size:]
    if sorted(fc_) != sorted(gc):
        return None

    # visit worlds of f so that each one (where possible) touches an earlier one
    order: list[int] = []
    seen = 0
    for start in sorted(f.worlds, key=lambda w: (sum(1 for c in fc_ if c == fc_[w]), w)):
        if seen >> start & 1:
            continue
        queue = [start]
        seen |= 1 << start
        while queue:
            w = queue.pop(0)
            order.append(w)
            for u in bits((f.succ[w] | f.pred[w]) & ~seen):
                seen |= 1 << u
                queue.append(u)

    by_colour: dict[int, list[int]] = {}
    for v in g.worlds:
        by_colour.setdefault(gc[v], []).append(v)

    perm = [-1] * f.size
    mapped = 0
    used = 0

    def candidates(w: int) -> list[int]:
        pool = by_colour.get(fc_[w], [])
        for u in bits((f.succ[w] | f.pred[w]) & mapped):
            near = g.succ[perm[u]] | g.pred[perm[u]]
            return [v for v in pool if near >> v & 1 and not used >> v & 1]
        return [v for v in pool if not used >> v & 1]

    def consistent(w: int, v: int) -> bool:
        if f.related(w, w) != g.related(v, v):
            return False
        fs, fp = f.succ[w] & mapped, f.pred[w] & mapped
        if bin(fs).count("1") != bin(g.succ[v] & used).count("1"):
            return False
        if bin(fp).count("1") != bin(g.pred[v] & used).count("1"):
            return False
        return all(g.related(v, perm[u]) for u in bits(fs)) and all(g.related(perm[u], v) for u in bits(fp))

    stack = [iter(candidates(order[0]))]
    while stack:
        depth = len(stack) - 1
        w = order[depth]
        if perm[w] >= 0:
            mapped &= ~(1 << w)
            used &= ~(1 << perm[w])
            perm[w] = -1
        for v in stack[-1]:
            if consistent(w, v):
                perm[w] = v
                mapped |= 1 << w
                used |= 1 << v
                break
        else:
            stack.pop()
            continue
        if depth + 1 == f.size:
            return tuple(perm)
        stack.append(iter(candidates(order[depth + 1])))
    return None


def isomorphic(f: Frame, g: Frame) -> bool:
    return find_isomorphism(f, g) is not None


def canonical_codes(adj: np.ndarray) -> np.ndarray:
    """Isomorphism-invariant codes for a batch of adjacency matrices ``(N, n, n)``.

    The code is the minimum over all relabellings of the row-major bit
    encoding, so two frames share a code exactly when they are isomorphic.
    """
    n_frames, n, _ = adj.shape
    if n == 0:
        return np.zeros(n_frames, dtype=np.int64)
    weights = (np.int64(1) << np.arange(n * n, dtype=np.int64)).reshape(n, n)
    best = None
    for perm in itertools.permutations(range(n)):
        p = np.asarray(perm)
        permuted = adj[:, p][:, :, p]
        code = (permuted * weights).sum(axis=(1, 2))
        best = code if best is None else np.minimum(best, code)
    return best


def _adj_from_succ(succs: Sequence[Sequence[int]], n: int) -> np.ndarray:
    arr = np.asarray(succs, dtype=np.int64).reshape(len(succs), n)
    shifts = np.arange(n, dtype=np.int64)
    return ((arr[:, :, None] >> shifts[None, None, :]) & 1).astype(np.bool_)


def _transitive_succs(n: int, reflexive: bool = False) -> list[tuple[int, ...]]:
    """All labelled transitive relations on n points, as successor-mask tuples."""
    layer: list[tuple[int, ...]] = [()]
    for k in range(n):
        nxt = []
        new_bit = 1 << k
        for succ in layer:
            frame = Frame.from_succ(succ)
            ups = generated_subframe_masks(frame)
            pred_masks = [0] * k
            for a in range(k):
                for b in bits(succ[a]):
                    pred_masks[b] |= 1 << a
            downs = []
            for d in range(1 << k):
                if all(not (pred_masks[b] & ~d) for b in bits(d)):
                    downs.append(d)
            for up in ups:
                for down in downs:
                    # every predecessor must see every successor
                    if any(succ[p] & up != up for p in bits(down)):
                        continue
                    for refl in ((1,) if reflexive else (0, 1)):
                        if up & down and not refl:
                            continue
                        row = list(succ)
                        for p in bits(down):
                            row[p] |= new_bit
                        own = up | (new_bit if refl else 0)
                        row.append(own)
                        nxt.append(tuple(row))
        layer = nxt
    return layer


@lru_cache(maxsize=None)
def enumerate_frames(n: int, *, transitive: bool = False, reflexive: bool = False,
                     up_to_iso: bool = False) -> tuple[Frame, ...]:
    """All frames on ``n`` labelled worlds, optionally one per isomorphism class."""
    if transitive:
        succs = _transitive_succs(n, reflexive)
    else:
        succs = []
        for code in range(1 << (n * n)):
            succs.append(tuple((code >> (i * n)) & ((1 << n) - 1) for i in range(n)))
    if reflexive:
        succs = [s for s in succs if all(s[w] >> w & 1 for w in range(n))]
    if up_to_iso and succs and n > 1:
        codes = canonical_codes(_adj_from_succ(succs, n))
        _, first = np.unique(codes, return_index=True)
        succs = [succs[i] for i in sorted(first)]
    return tuple(Frame.from_succ(s) for s in succs)
