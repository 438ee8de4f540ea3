import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from strategies import frames
from kripkecat import _kernels
from kripkecat import frame_core as fc
from kripkecat.pmorph import (
    PMorphism,
    PMorphismError,
    SearchBudgetExceeded,
    enumerate_pmorphisms,
    first_pmorphism,
    identity,
    image,
    is_epimorphism,
    is_monomorphism_oracle,
    iter_pmorphisms,
    make_pmorphism,
    pmorphisms_by_filter,
    subreduces,
    subreduces_from_cone,
)


def test_identity_on_chain_validates():
    assert identity(fc.chain(3)).map == (0, 1, 2)


def test_collapse_chain_onto_point():
    assert make_pmorphism(fc.chain(2), fc.chain(1), (0, 0)).is_surjective


def test_openness_failure_is_reported():
    with pytest.raises(PMorphismError) as err:
        make_pmorphism(fc.strict_chain(2), fc.strict_chain(1), (0, 0))
    # both points land on the single irreflexive point, so the edge 0->1 has no image edge
    assert err.value.kind == "stability"
    with pytest.raises(PMorphismError) as err:
        make_pmorphism(fc.chain(2), fc.chain(2), (0, 0))
    assert err.value.kind == "openness" and err.value.witness == (0, 1)


def test_shape_errors():
    with pytest.raises(PMorphismError):
        make_pmorphism(fc.chain(2), fc.chain(1), (0,))
    with pytest.raises(PMorphismError):
        make_pmorphism(fc.chain(1), fc.chain(1), (3,))


def test_image_examples():
    members, e, m = image(identity(fc.chain(3)))
    assert members == {0, 1, 2}
    collapse = make_pmorphism(fc.chain(2), fc.chain(2), (1, 1))
    members, e, m = image(collapse)
    assert members == {1}
    assert e.is_surjective and m.is_injective
    assert e.then(m).map == collapse.map


def test_chain2_endomorphisms():
    maps = [f.map for f in enumerate_pmorphisms(fc.chain(2), fc.chain(2))]
    assert maps == [(0, 1), (1, 1)]
    assert maps == oracles.pmorphisms(fc.chain(2), fc.chain(2))


def test_empty_frame_maps():
    assert enumerate_pmorphisms(fc.chain(1), fc.empty()) == []
    assert [f.map for f in enumerate_pmorphisms(fc.empty(), fc.cluster(3))] == [()]


def test_budget_is_an_error_not_a_no():
    with pytest.raises(SearchBudgetExceeded):
        enumerate_pmorphisms(fc.cluster(4), fc.cluster(3), budget=5)


def test_allowed_restricts_images():
    maps = list(iter_pmorphisms(fc.cluster(2), fc.cluster(2), allowed=[[1], [0, 1]]))
    expected = [m for m in oracles.pmorphisms(fc.cluster(2), fc.cluster(2)) if m[0] == 1]
    assert [f.map for f in maps] == expected == [(1, 0)]


def test_subreduction_examples():
    assert subreduces(fc.chain(3), fc.chain(2)) is not None
    assert subreduces(fc.chain(2), fc.chain(3)) is None
    for w in (fc.chain(3), fc.cluster(2), fc.fork(2)):
        members, p = subreduces(w, w)
        assert p.is_surjective


def test_subreduction_witness_is_a_generated_subframe():
    members, p = subreduces(fc.add_root(fc.cluster(2)), fc.cluster(2))
    assert fc.is_up_closed(fc.add_root(fc.cluster(2)), members)
    assert p.is_surjective


def test_mono_examples():
    assert is_monomorphism_oracle(identity(fc.chain(3)), 3)
    inj = make_pmorphism(fc.chain(1), fc.chain(2), (1,))
    assert is_monomorphism_oracle(inj, 3)
    collapse = make_pmorphism(fc.chain(2), fc.chain(1), (0, 0))
    assert not is_monomorphism_oracle(collapse, 2)


# -- properties ------------------------------------------------------------------------------

@given(frames(max_size=3), frames(max_size=3))
@settings(max_examples=80)
def test_enumeration_matches_brute_force(dom, cod):
    lib = [f.map for f in enumerate_pmorphisms(dom, cod)]
    assert lib == oracles.pmorphisms(dom, cod)
    onto = [f.map for f in enumerate_pmorphisms(dom, cod, surjective_only=True)]
    assert onto == oracles.pmorphisms(dom, cod, surjective=True)


@given(frames(max_size=3), frames(max_size=3), st.data())
@settings(max_examples=60)
def test_validation_matches_oracle(dom, cod, data):
    if cod.size == 0 and dom.size:
        return
    m = tuple(data.draw(st.integers(0, cod.size - 1)) for _ in dom.worlds)
    try:
        PMorphism(dom, cod, m)
        ok = True
    except PMorphismError:
        ok = False
    assert ok == oracles.is_pmorphism(dom, cod, m)


@given(frames(max_size=3), frames(max_size=3), frames(max_size=3))
@settings(max_examples=40)
def test_composites_validate(a, b, c):
    for f in enumerate_pmorphisms(a, b):
        for g in enumerate_pmorphisms(b, c):
            h = f.then(g)
            assert oracles.is_pmorphism(a, c, h.map)
            assert (g @ f).map == h.map
            assert identity(a).then(f).map == f.map == f.then(identity(b)).map


@given(frames(max_size=3), frames(max_size=3))
@settings(max_examples=60)
def test_image_is_up_closed(dom, cod):
    f = first_pmorphism(dom, cod)
    if f is None:
        return
    members, e, m = image(f)
    assert fc.is_up_closed(cod, members)
    assert e.is_surjective


@given(frames(max_size=4, transitive=True), frames(max_size=3, transitive=True))
@settings(max_examples=60, deadline=None)
def test_subreduction_matches_brute_force(w, v):
    assert (subreduces(w, v) is not None) == oracles.subreduces(w, v)


@given(frames(max_size=4, transitive=True), frames(max_size=3, transitive=True))
@settings(max_examples=40, deadline=None)
def test_cone_subreduction_implies_subreduction(w, v):
    if subreduces_from_cone(w, v) is not None:
        assert subreduces(w, v) is not None


@given(frames(max_size=3), frames(max_size=3))
@settings(max_examples=60)
def test_epi_iff_surjective(dom, cod):
    for f in enumerate_pmorphisms(dom, cod):
        assert is_epimorphism(f) == f.is_surjective


@given(frames(max_size=4), frames(min_size=1, max_size=3))
@settings(max_examples=60, deadline=None)
def test_batch_kernel_backends_agree(dom, cod):
    maps = _kernels.all_maps(dom.size, cod.size)
    dom_succ = np.asarray(dom.succ, dtype=np.int64).reshape(dom.size)
    cod_succ = np.asarray(cod.succ, dtype=np.int64).reshape(cod.size)
    a = _kernels.batch_is_pmorphism_numpy(dom_succ, cod_succ, maps)
    b = _kernels.batch_is_pmorphism_numba(dom_succ, cod_succ, maps) if _kernels.njit else a
    assert np.array_equal(a, b)
    assert [tuple(m) for m in maps[a].tolist()] == oracles.pmorphisms(dom, cod)
    assert [f.map for f in pmorphisms_by_filter(dom, cod)] == [f.map for f in enumerate_pmorphisms(dom, cod)]
