import pytest
from hypothesis import given, settings

import oracles
from strategies import frames, preorders
from kripkecat import frame_core as fc
from kripkecat.limits import (
    cokernel_pair,
    coequalizer,
    coproduct,
    copairing,
    dgrph_pullback,
    equalizer,
    pullback_along_injective,
    pushout,
    terminal,
    to_terminal,
)
from kripkecat.pmorph import PMorphism, enumerate_pmorphisms, first_pmorphism, identity

SMALL = oracles.small_frames(2)


def test_terminal():
    assert terminal() == fc.chain(1)
    assert to_terminal(fc.chain(3)).map == (0, 0, 0)
    assert to_terminal(fc.empty()).map == ()
    for f in (fc.chain(3), fc.cluster(2), fc.fork(2)):
        assert len(enumerate_pmorphisms(f, terminal())) == 1


def test_equalizer_examples():
    f = identity(fc.fork(2))
    members, inc = equalizer(f, f)
    assert members == {0, 1, 2}
    swap = PMorphism(fc.fork(2), fc.fork(2), (0, 2, 1))
    members, inc = equalizer(f, swap)
    # they agree on the root, but the root's cone is not inside the agreement set
    assert members == frozenset() and inc.dom == fc.empty()


def test_equalizer_of_cokernel_pair_is_image():
    f = PMorphism(fc.chain(1), fc.chain(2), (1,))
    u, i0, i1 = cokernel_pair(f)
    assert u.size == 3
    members, _ = equalizer(i0, i1)
    assert members == set(f.map)


def test_coproduct_examples():
    total, legs = coproduct([fc.empty(), fc.chain(2)])
    assert total == fc.chain(2)
    total, legs = coproduct([fc.cluster(2)] * 3)
    assert total == fc.copies(3, fc.cluster(2))
    assert all(leg.is_injective for leg in legs)
    assert copairing(total, [identity(fc.cluster(2))] * 3).map == (0, 1) * 3


def test_coequalizer_examples():
    f = identity(fc.chain(3))
    q, m = coequalizer(f, f)
    assert q == fc.chain(3) and m.map == (0, 1, 2)
    a = PMorphism(fc.chain(1), fc.copies(2, fc.chain(1)), (0,))
    b = PMorphism(fc.chain(1), fc.copies(2, fc.chain(1)), (1,))
    q, m = coequalizer(a, b)
    assert q == fc.chain(1)


def test_cokernel_pair_of_surjection_is_trivial():
    f = PMorphism(fc.chain(3), fc.chain(2), (0, 1, 1))
    u, i0, i1 = cokernel_pair(f)
    assert i0.map == i1.map and fc.isomorphic(u, f.cod)


def test_pushout_along_identity():
    g = PMorphism(fc.chain(1), fc.chain(2), (1,))
    res = pushout(identity(fc.chain(1)), g)
    assert fc.isomorphic(res.frame, fc.chain(2))


def test_pushout_verification_flags_budget():
    g = PMorphism(fc.chain(1), fc.chain(2), (1,))
    res = pushout(g, g, verify=True, probe_frames=[fc.chain(3)], budget=1)
    assert res.verified is None


def test_dgrph_pullback_examples():
    f = identity(fc.chain(2))
    res = dgrph_pullback(f, f)
    assert fc.isomorphic(res.frame, fc.chain(2))
    f0 = PMorphism(fc.chain(2), fc.chain(1), (0, 0))
    res = dgrph_pullback(f0, f0)
    assert res.p0 is not None and res.p1 is not None


def test_pullback_along_injective_examples():
    total, legs = coproduct([fc.chain(1), fc.chain(2)])
    # distinct coprojections pull back to the empty frame
    z, _, _ = pullback_along_injective(legs[0], legs[1])
    assert z.size == 0
    sub, restricted, inc = pullback_along_injective(identity(total), legs[1])
    assert inc.map == (1, 2) and restricted.map == (0, 1)
    f = PMorphism(fc.chain(3), fc.chain(2), (0, 1, 1))
    sub, restricted, inc = pullback_along_injective(f, identity(fc.chain(2)))
    assert restricted.map == f.map
    top = PMorphism(fc.chain(1), fc.chain(2), (1,))
    sub, restricted, inc = pullback_along_injective(f, top)
    assert inc.map == (1, 2) and restricted.is_surjective
    with pytest.raises(ValueError):
        pullback_along_injective(f, PMorphism(fc.chain(2), fc.chain(2), (1, 1)))


# -- properties ------------------------------------------------------------------------------------

@given(frames(max_size=3), frames(max_size=3))
@settings(max_examples=40, deadline=None)
def test_equalizer_universal(a, b):
    homs = enumerate_pmorphisms(a, b)
    for f in homs[:4]:
        for g in homs[:4]:
            members, inc = equalizer(f, g)
            assert fc.is_up_closed(a, members)
            assert oracles.equalizer_universal(f, g, members)


@given(frames(max_size=3), frames(max_size=3))
@settings(max_examples=40, deadline=None)
def test_coequalizer_validates_and_is_universal(a, b):
    homs = enumerate_pmorphisms(a, b)
    for f in homs[:4]:
        for g in homs[:4]:
            q, m = coequalizer(f, g)
            assert oracles.is_pmorphism(b, q, m.map)
            assert oracles.coequalizer_universal(f, g, m.map, q, SMALL)


@given(frames(max_size=3), frames(max_size=3))
@settings(max_examples=60, deadline=None)
def test_cokernel_pair_is_self_pushout(a, b):
    for f in enumerate_pmorphisms(a, b)[:4]:
        u, i0, i1 = cokernel_pair(f)
        res = pushout(f, f)
        assert fc.isomorphic(u, res.frame)
        assert (i0.map == i1.map) == f.is_surjective
        members, _ = equalizer(i0, i1)
        assert members == set(f.map)


@given(frames(max_size=2), frames(max_size=2), frames(max_size=2))
@settings(max_examples=30, deadline=None)
def test_pushout_universal(a, b, c):
    f0 = first_pmorphism(a, b)
    f1 = first_pmorphism(a, c)
    if f0 is None or f1 is None:
        return
    res = pushout(f0, f1, verify=True, probe_frames=SMALL)
    assert res.verified


@given(preorders(min_size=1, max_size=3), preorders(min_size=1, max_size=3), preorders(min_size=1, max_size=2))
@settings(max_examples=40, deadline=None)
def test_pullback_projections_of_surjections_validate(a, b, c):
    f0 = first_pmorphism(a, c, surjective_only=True)
    f1 = first_pmorphism(b, c, surjective_only=True)
    if f0 is None or f1 is None:
        return
    res = dgrph_pullback(f0, f1)
    assert res.p0 is not None and res.p1 is not None
    assert res.p0.is_surjective and res.p1.is_surjective


@given(frames(max_size=3), frames(max_size=3), frames(max_size=3))
@settings(max_examples=40, deadline=None)
def test_coproducts_are_extensive(a, b, c):
    # a map into a sum splits into the inverse images of the summands
    total, legs = coproduct([b, c])
    for h in enumerate_pmorphisms(a, total)[:6]:
        parts = [pullback_along_injective(h, leg) for leg in legs]
        assert sum(p[0].size for p in parts) == a.size
        for sub, restricted, inc in parts:
            assert fc.is_up_closed(a, inc.map)
