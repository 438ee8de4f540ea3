"""Logics of the supported vocabulary: a base frame condition plus numeric bounds.

Bounds are checked on every cone ``w*``:

* ``bd`` depth,
* ``bw`` branching width (see :func:`cone_width`),
* ``bf`` number of external (final) clusters,
* ``be`` size of external clusters,
* ``bi`` size of internal clusters.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, replace
from functools import lru_cache

from . import frame_core as fc
from .frame_core import Frame, bits
from .pmorph import DEFAULT_MAX_MAPS, subreduces, subreduces_from_cone


class _Omega:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "OMEGA"

    def __str__(self):
        return "ω"

    def __reduce__(self):
        return (_Omega, ())


OMEGA = _Omega()

BASES = ("K", "K4", "S4", "S4.2", "S4.3", "Grz", "Grz.3", "S5", "GL", "GL.3", "Inconsistent")
BOUNDS = ("bd", "bw", "bf", "be", "bi")

TRANSITIVE_BASES = frozenset(BASES) - {"K"}
S4_BASES = frozenset({"S4", "S4.2", "S4.3", "Grz", "Grz.3", "S5", "Inconsistent"})


class UnsupportedLogic(ValueError):
    pass


def _le(a, b) -> bool:
    """Order on naturals extended by OMEGA at the top."""
    if b is OMEGA:
        return True
    if a is OMEGA:
        return False
    return a <= b


def _min(a, b):
    return a if _le(a, b) else b


@dataclass(frozen=True)
class LogicSpec:
    base: str
    bd: object = OMEGA
    bw: object = OMEGA
    bf: object = OMEGA
    be: object = OMEGA
    bi: object = OMEGA

    def __post_init__(self):
        if self.base not in BASES:
            raise UnsupportedLogic(f"unknown base logic {self.base!r}")
        for name in BOUNDS:
            v = getattr(self, name)
            if v is OMEGA:
                continue
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise UnsupportedLogic(f"bound {name} must be a positive integer or OMEGA, got {v!r}")
            if self.base == "K":
                raise UnsupportedLogic("bounds need a transitive base")

    def bounds(self) -> dict[str, object]:
        return {name: getattr(self, name) for name in BOUNDS}

    def finite_bounds(self) -> dict[str, int]:
        return {k: v for k, v in self.bounds().items() if v is not OMEGA}

    def __str__(self):
        if self.base == "Inconsistent":
            return "inconsistent"
        return self.base + "".join(f"+{k}{v}" for k, v in self.finite_bounds().items())

    @property
    def extends_s4(self) -> bool:
        return self.base in S4_BASES


_BOUND_RE = re.compile(r"^(bd|bw|bf|be|bi)(\d+|w|ω|omega)$")


def parse_logic(text: str) -> LogicSpec:
    parts = [p.strip() for p in text.strip().split("+")]
    head = parts[0]
    if head.lower() == "inconsistent":
        head = "Inconsistent"
    if head not in BASES:
        raise UnsupportedLogic(f"unknown base logic {parts[0]!r}; expected one of {', '.join(BASES)}")
    values = {}
    for part in parts[1:]:
        m = _BOUND_RE.match(part)
        if not m:
            raise UnsupportedLogic(f"cannot read bound {part!r}; expected e.g. bd2 or be1")
        name, raw = m.groups()
        if name in values:
            raise UnsupportedLogic(f"bound {name} given twice")
        values[name] = int(raw) if raw.isdigit() else OMEGA
    return LogicSpec(head, **values)


# -- normalisation ---------------------------------------------------------------------

def normalize(spec: LogicSpec) -> LogicSpec:
    """Canonical representative over finite frames.

    Rewrites, each an equality of finite-frame classes:

    * ``Grz = S4 + be1 + bi1`` and ``Grz.3 = S4.3 + be1 + bi1`` (posets are
      exactly the preorders with singleton clusters);
    * ``S5 = S4 + bd1`` (a preorder of depth one is an equivalence);
    * ``S4.2 = S4 + bf1`` (confluence means one final cluster per cone);
    * ``bw1 = bf1`` over S4, and ``bw = bf`` when ``bd <= 2``;
    * bounds implied by the rest are dropped: with ``bd1`` the bounds
      ``bw, bf, bi``; over ``S4.3`` the bounds ``bw, bf``; ``bw`` whenever
      ``bf <= bw``; over ``GL``/``GL.3`` the cluster bounds ``bf, be, bi``;
    * the inconsistent logic carries no bounds.
    """
    b = spec.bounds()
    base = spec.base
    if base == "Inconsistent":
        return LogicSpec("Inconsistent")
    if base == "Grz":
        base, b["be"], b["bi"] = "S4", _min(b["be"], 1), _min(b["bi"], 1)
    elif base == "Grz.3":
        base, b["be"], b["bi"] = "S4.3", _min(b["be"], 1), _min(b["bi"], 1)
    elif base == "S5":
        base, b["bd"] = "S4", _min(b["bd"], 1)
    elif base == "S4.2":
        base, b["bf"] = "S4", _min(b["bf"], 1)
    if base in ("GL", "GL.3"):
        b["bf"] = b["be"] = b["bi"] = OMEGA
    if base == "S4.3":
        b["bf"] = b["bw"] = OMEGA
    if base == "S4" and b["bw"] == 1:
        b["bf"], b["bw"] = 1, OMEGA
    if base == "S4" and _le(b["bd"], 2) and b["bw"] is not OMEGA:
        b["bf"], b["bw"] = _min(b["bf"], b["bw"]), OMEGA
    if b["bd"] == 1 and base in ("S4", "S4.3"):
        b["bw"] = b["bf"] = b["bi"] = OMEGA
        base = "S4"  # depth one preorders are locally linear
    if b["bw"] is not OMEGA and _le(b["bf"], b["bw"]):
        b["bw"] = OMEGA
    return LogicSpec(base, **b)


# -- structural membership -------------------------------------------------------------

def _base_holds(base: str, f: Frame) -> bool:
    if base == "Inconsistent":
        return f.size == 0
    if base == "K":
        return True
    if not fc.is_transitive(f):
        return False
    refl = fc.is_reflexive(f)
    return {
        "K4": lambda: True,
        "S4": lambda: refl,
        "S4.2": lambda: refl and fc.is_confluent(f),
        "S4.3": lambda: refl and fc.is_locally_linear(f),
        "Grz": lambda: refl and fc.is_antisymmetric(f),
        "Grz.3": lambda: refl and fc.is_antisymmetric(f) and fc.is_locally_linear(f),
        "S5": lambda: refl and fc.is_symmetric(f),
        "GL": lambda: fc.is_irreflexive(f),
        "GL.3": lambda: fc.is_irreflexive(f) and fc.is_locally_linear(f),
    }[base]()


def final_clusters_in_cone(f: Frame, w: int) -> list[frozenset[int]]:
    part = fc.clusters(f)
    cone = f.star_masks[w]
    return [c for c, ext in zip(part.clusters, part.external) if ext and fc.to_mask(c) & cone]


def cone_width(f: Frame, w: int) -> int:
    """Branching width of ``w*``.

    The largest k such that the final points of ``w*`` split into k nonempty
    groups with every point of the cone seeing final points of exactly one
    group or of all k groups. This is precisely when ``w*`` subreduces to a
    reflexive root under k reflexive final points.
    """
    d = fc.depths(f)
    cone = f.star_masks[w]
    finals = [v for v in bits(cone) if d[v] == 1 and f.related(v, v)]
    # group final points by cluster; a cluster is never split
    groups: list[int] = []
    for v in finals:
        if not any(m >> v & 1 for m in groups):
            groups.append(f.succ[v])
    if not groups:
        return 0
    seen = [frozenset(i for i, m in enumerate(groups) if f.star_masks[v] & m) for v in bits(cone)]
    if not all(seen):
        # a point that sees no reflexive final point blocks any branching
        return 1
    r = len(groups)
    for k in range(r, 1, -1):
        for labels in _surjective_labelings(r, k):
            if all(len({labels[i] for i in s}) in (1, k) for s in seen):
                return k
    return 1


def _surjective_labelings(r: int, k: int):
    # restricted growth strings give each set partition once
    def rec(i: int, cur: list[int], used: int):
        if i == r:
            if used == k:
                yield tuple(cur)
            return
        for lab in range(min(used + 1, k)):
            cur.append(lab)
            yield from rec(i + 1, cur, max(used, lab + 1))
            cur.pop()

    yield from rec(0, [], 0)


def antichain_width(f: Frame, w: int) -> int:
    """Size of the largest set of pairwise incomparable points in ``w*``."""
    cone = list(bits(f.star_masks[w]))
    best = 1 if cone else 0
    for k in range(2, len(cone) + 1):
        found = False
        for combo in itertools.combinations(cone, k):
            if all(not f.related(a, b) and not f.related(b, a) for a, b in itertools.combinations(combo, 2)):
                found = True
                break
        if not found:
            break
        best = k
    return best


def bound_value(f: Frame, which: str) -> int:
    """The largest value of the named parameter over all cones of ``f``."""
    if not fc.is_transitive(f):
        raise fc.FrameError("bounds are defined on transitive frames")
    if f.size == 0:
        return 0
    if which == "bd":
        return fc.frame_depth(f)
    if which == "bw":
        return max(cone_width(f, w) for w in f.worlds)
    part = fc.clusters(f)
    if which == "bf":
        best = 0
        for w in f.worlds:
            cone = f.star_masks[w]
            best = max(best, sum(1 for c, e in zip(part.clusters, part.external) if e and fc.to_mask(c) & cone))
        return best
    if which == "be":
        return max((len(c) for c, e in zip(part.clusters, part.external) if e), default=0)
    if which == "bi":
        return max((len(c) for c, e in zip(part.clusters, part.external) if not e), default=0)
    raise UnsupportedLogic(f"unknown bound {which!r}")


def frame_in_logic(spec: LogicSpec, f: Frame) -> bool:
    if not _base_holds(spec.base, f):
        return False
    for name, n in spec.finite_bounds().items():
        if bound_value(f, name) > n:
            return False
    return True


def canonical_frame(which: str, n: int) -> Frame:
    """The frame whose exclusion expresses the bound ``which`` at value ``n``."""
    k = n + 1
    return {
        "bd": lambda: fc.chain(k),
        "bw": lambda: fc.fork(k),
        "bf": lambda: fc.copies(k, fc.chain(1)),
        "be": lambda: fc.cluster(k),
        "bi": lambda: fc.add_final(fc.cluster(k)),
    }[which]()


def bound_via_subreduction(f: Frame, which: str, n: int, budget: int | None = DEFAULT_MAX_MAPS) -> bool:
    """True iff no cone of ``f`` subreduces to the canonical frame of the bound."""
    if which not in BOUNDS:
        raise UnsupportedLogic(f"unknown bound {which!r}")
    if not fc.is_transitive(f):
        raise fc.FrameError("bounds are defined on transitive frames")
    target = canonical_frame(which, n)
    if which == "bf":
        # the target is not rooted, so the search must stay inside single cones
        return subreduces_from_cone(f, target, budget) is None
    return subreduces(f, target, budget) is None


# -- catalogs -------------------------------------------------------------------------------

_FAMILY_BASES = (
    LogicSpec("S4"),
    LogicSpec("S4.2"),
    LogicSpec("S4", bd=2),
    LogicSpec("S4", bd=2, bw=2),
    LogicSpec("S4.2", bd=2),
)
_PARAMS = (1, 2, OMEGA)


def regular_catalog() -> list[LogicSpec]:
    out = [LogicSpec("Inconsistent")]
    for head in _FAMILY_BASES:
        for m, n in itertools.product(_PARAMS, repeat=2):
            out.append(replace(head, be=m, bi=n))
    out.append(LogicSpec("Grz.3"))
    out.extend(LogicSpec("S5", be=m) for m in _PARAMS)
    return out


def exact_catalog() -> list[LogicSpec]:
    return [
        LogicSpec("Inconsistent"),
        LogicSpec("S4.2", bd=2, be=1, bi=1),
        LogicSpec("S4.2", bd=2, be=1, bi=2),
        LogicSpec("S5", be=1),
        LogicSpec("S5", be=2),
    ]


@lru_cache(maxsize=None)
def _normalized(kind: str) -> frozenset[LogicSpec]:
    cat = regular_catalog() if kind == "regular" else exact_catalog()
    return frozenset(normalize(L) for L in cat)


def _classifiable(spec: LogicSpec) -> LogicSpec:
    if not spec.extends_s4:
        raise UnsupportedLogic(f"{spec} does not extend S4; the classification covers extensions of S4 only")
    return normalize(spec)


def is_regular(spec: LogicSpec) -> bool:
    return _classifiable(spec) in _normalized("regular")


def is_barr_exact(spec: LogicSpec) -> bool:
    return _classifiable(spec) in _normalized("exact")


def catalog_entry(spec: LogicSpec, kind: str) -> LogicSpec | None:
    """The catalog entry matching ``spec`` after normalisation, if any."""
    target = _classifiable(spec)
    cat = regular_catalog() if kind == "regular" else exact_catalog()
    for L in cat:
        if normalize(L) == target:
            return L
    return None

