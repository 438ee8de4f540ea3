"""Hypothesis strategies for small frames and maps."""

from hypothesis import strategies as st

from kripkecat import frame_core as fc
from kripkecat.frame_core import Frame


def _close(n: int, rel: set, reflexive: bool, transitive: bool) -> Frame:
    if reflexive:
        rel |= {(w, w) for w in range(n)}
    if transitive:
        changed = True
        while changed:
            extra = {(a, c) for a, b in rel for b2, c in rel if b == b2} - rel
            rel |= extra
            changed = bool(extra)
    return Frame(n, frozenset(rel))


@st.composite
def frames(draw, min_size=0, max_size=4, reflexive=False, transitive=False):
    n = draw(st.integers(min_size, max_size))
    pairs = [(a, b) for a in range(n) for b in range(n)]
    rel = {p for p in pairs if draw(st.booleans())}
    return _close(n, rel, reflexive, transitive)


def preorders(min_size=0, max_size=4):
    return frames(min_size=min_size, max_size=max_size, reflexive=True, transitive=True)


@st.composite
def posets(draw, min_size=0, max_size=4):
    n = draw(st.integers(min_size, max_size))
    rel = {(a, b) for a in range(n) for b in range(a + 1, n) if draw(st.booleans())}
    return _close(n, rel, True, True)


@st.composite
def strict_posets(draw, min_size=0, max_size=4):
    n = draw(st.integers(min_size, max_size))
    rel = {(a, b) for a in range(n) for b in range(a + 1, n) if draw(st.booleans())}
    return _close(n, rel, False, True)


NAMED = {
    "chain1": fc.chain(1),
    "chain2": fc.chain(2),
    "cluster2": fc.cluster(2),
    "fork2": fc.fork(2),
}
