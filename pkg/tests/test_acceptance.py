"""Acceptance suite: one pass/fail line per criterion.

Run under pytest (the lines are repeated in the terminal summary) or directly
with ``python3 tests/test_acceptance.py``.
"""
import itertools
import sys
import time
from functools import lru_cache
from pathlib import Path

import pytest
from click.testing import CliRunner

sys.path.insert(0, str(Path(__file__).parent))
import oracles  # noqa: E402
from kripkecat import frame_core as fc  # noqa: E402
from kripkecat.amalgamation import (  # noqa: E402
    audit_amalgamability,
    check_coamalgamation,
    coamalgamate_bruteforce,
    coamalgamate_chain,
)
from kripkecat.cli import cli  # noqa: E402
from kripkecat.exactness import builtin_fixtures, non_effectiveness_witness  # noqa: E402
from kripkecat.formula import validates_base_axioms  # noqa: E402
from kripkecat.limits import Cospan, coequalizer, equalizer  # noqa: E402
from kripkecat.logic import (  # noqa: E402
    BOUNDS,
    OMEGA,
    LogicSpec,
    frame_in_logic,
    is_barr_exact,
    is_regular,
    normalize,
    parse_logic,
    regular_catalog,
)
from kripkecat.pmorph import (  # noqa: E402
    PMorphism,
    enumerate_pmorphisms,
    is_epimorphism,
    is_monomorphism_oracle,
    iter_pmorphisms,
    subreduces,
)
from kripkecat.presheaf import (  # noqa: E402
    builtin_category,
    counit,
    counit_injective_on_all_frames,
    enumerate_presheaves,
    representable_frame,
    strict_chain_endomorphisms,
    verify_equivalence,
)
from kripkecat.product import Cone, mediate, product_levels, restrict_to_logic  # noqa: E402

CRITERIA = []
RESULTS = {}


def criterion(key, title, expected_failure=False):
    def register(fn):
        CRITERIA.append((key, title, fn, expected_failure))
        return fn
    return register


def run_criterion(key):
    if key not in RESULTS:
        for k, title, fn, _ in CRITERIA:
            if k == key:
                start = time.perf_counter()
                passed, detail = fn()
                RESULTS[key] = (title, passed, detail, time.perf_counter() - start)
    return RESULTS[key]


def result_line(key):
    title, passed, detail, seconds = RESULTS[key]
    return f"criterion {key}: {'PASS' if passed else 'FAIL'}  {title}: {detail} [{seconds:.1f}s]"


@lru_cache(maxsize=None)
def frames_up_to_iso(max_size, transitive=False, reflexive=False):
    return tuple(f for n in range(max_size + 1)
                 for f in fc.enumerate_frames(n, transitive=transitive, reflexive=reflexive, up_to_iso=True))


# -- 1: structural rows against their axioms --------------------------------------------------------

TABLE_ROWS = ("K", "K4", "S4", "S4.2", "S4.3", "Grz", "Grz.3", "S5", "GL", "GL.3")


@criterion("1", "frame condition <=> axiom validity, every labelled frame of size <= 4, every table row")
def table_cross_check():
    discrepancies = 0
    checked = 0
    for n in range(5):
        every = fc.enumerate_frames(n)
        for base in TABLE_ROWS:
            by_axioms = validates_base_axioms(every, base)
            condition = oracles.BASE_CONDITIONS[base]
            for f, ok in zip(every, by_axioms):
                checked += 1
                structural = frame_in_logic(LogicSpec(base), f)
                if not (bool(ok) == structural == condition(f)):
                    discrepancies += 1
    return discrepancies == 0, f"{checked} frame/row checks, {discrepancies} discrepancies"


# -- 2: epis and monos --------------------------------------------------------------------------------

def restricted_growth_strings(n):
    def grow(prefix, blocks):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for b in range(blocks + 1):
            yield from grow(prefix + [b], blocks + (b == blocks))
    yield from grow([], 0)


def quotient_maps(a):
    # every partition whose image relation makes the projection a p-morphism
    for labels in restricted_growth_strings(a.size):
        q = fc.Frame(max(labels, default=-1) + 1, frozenset((labels[x], labels[y]) for x, y in a.rel))
        if oracles.is_pmorphism(a, q, labels):
            yield PMorphism(a, q, labels)


def inclusion_maps(b):
    for members in oracles.up_closed_sets(b):
        sub, order = oracles.restrict(b, members)
        yield PMorphism(sub, b, tuple(order))


@criterion("2", "surjective <=> epi on frames <= 4; injective <=> mono on transitive frames <= 4")
def epi_mono():
    epi_bad = epi_count = 0
    for a in frames_up_to_iso(4):
        for f in itertools.chain(quotient_maps(a), inclusion_maps(a)):
            epi_count += 1
            epi_bad += is_epimorphism(f) != f.is_surjective
    mono_bad = mono_count = 0
    for a in frames_up_to_iso(4, transitive=True):
        for f in itertools.chain(quotient_maps(a), inclusion_maps(a)):
            mono_count += 1
            mono_bad += is_monomorphism_oracle(f, f.dom.size) != f.is_injective
    # every p-morphism between small frames, found by the brute-force oracle
    pair_bad = pair_count = 0
    small = frames_up_to_iso(3)
    for a, b in itertools.product(small, repeat=2):
        for m in oracles.pmorphisms(a, b):
            f = PMorphism(a, b, m)
            pair_count += 1
            pair_bad += is_epimorphism(f) != f.is_surjective
            if oracles.transitive_(a) and oracles.transitive_(b):
                pair_bad += is_monomorphism_oracle(f, a.size) != f.is_injective
    bad = epi_bad + mono_bad + pair_bad
    detail = (f"epi {epi_count} maps/{epi_bad} discrepancies, mono {mono_count}/{mono_bad}, "
              f"all maps between frames <= 3: {pair_count}/{pair_bad}")
    return bad == 0, detail


# -- 3: equalizers and coequalizers -----------------------------------------------------------------

@criterion("3", "equalizer and coequalizer universal properties, all parallel pairs between frames <= 3")
def equalizers_and_coequalizers():
    frames = frames_up_to_iso(3)

    @lru_cache(maxsize=None)
    def homs(a, b):
        return tuple(oracles.pmorphisms(a, b))

    pairs = bad = quotient_bad = 0
    for a, b in itertools.product(frames, repeat=2):
        maps = enumerate_pmorphisms(a, b)
        for f, g in itertools.product(maps, repeat=2):
            pairs += 1
            members, _ = equalizer(f, g)
            if any(f.map[w] != g.map[w] for w in members) or not fc.is_up_closed(a, members):
                bad += 1
            # a probe only needs as many worlds as the image it must hit, so frames <= 3 suffice
            for z in frames:
                for h in homs(z, a):
                    if oracles.compose(h, f.map) == oracles.compose(h, g.map) and not set(h) <= set(members):
                        bad += 1
            q, proj = coequalizer(f, g)
            if not oracles.is_pmorphism(b, q, proj.map):
                quotient_bad += 1
                continue
            if oracles.compose(f.map, proj.map) != oracles.compose(g.map, proj.map):
                bad += 1
            for z in frames:
                out_of_q = homs(q, z)
                for h in homs(b, z):
                    if oracles.compose(f.map, h) == oracles.compose(g.map, h):
                        bad += sum(oracles.compose(proj.map, k) == h for k in out_of_q) != 1
    return bad == 0 and quotient_bad == 0, f"{pairs} parallel pairs, {bad} failures, {quotient_bad} invalid quotients"


# -- 4: products ---------------------------------------------------------------------------------------

FACTORS = {"chain(1)": fc.chain(1), "chain(2)": fc.chain(2), "cluster(2)": fc.cluster(2), "fork(2)": fc.fork(2)}
POSET_FACTORS = ("chain(1)", "chain(2)", "fork(2)")


@criterion("4", "unique mediator for every cone with apex <= 4 into the depth-3 levels; Grz restriction is inert")
def products():
    apexes = [f for f in frames_up_to_iso(4, transitive=True, reflexive=True) if 0 < fc.frame_depth(f) <= 3]
    cones = bad = 0
    for (n0, w0), (n1, w1) in itertools.combinations_with_replacement(FACTORS.items(), 2):
        # the image of a cone is no larger than the cone, so apexes of size 4 only reach worlds with cones <= 4
        bound = 4 if n0 == n1 == "cluster(2)" else None
        levels = product_levels(w0, w1, 3, max_star=bound)
        top = levels[-1]
        by_label = {}
        for x in range(top.size):
            by_label.setdefault(top.labels(x), []).append(x)
        for apex in apexes:
            for f0 in enumerate_pmorphisms(apex, w0):
                for f1 in enumerate_pmorphisms(apex, w1):
                    cones += 1
                    allowed = [by_label.get((f0.map[u], f1.map[u]), []) for u in apex.worlds]
                    found = [m.map for m in iter_pmorphisms(apex, top.frame, allowed=allowed, budget=None)]
                    bad += found != [mediate(Cone(apex, f0, f1), levels).map]
        if n0 in POSET_FACTORS and n1 in POSET_FACTORS:
            restricted = restrict_to_logic(levels, parse_logic("Grz"))
            bad += [lvl.frame for lvl in restricted] != [lvl.frame for lvl in levels]
    return bad == 0, f"{cones} cones over 10 factor pairs, {bad} failures (cluster(2) squared bounded to cones <= 4)"


# -- 5: chain coamalgamation -------------------------------------------------------------------------

@criterion("5", "chain route validated and agreeing with brute force on every chain cospan with n, m, k <= 5")
def chain_coamalgamation():
    spec = parse_logic("Grz.3")
    count = bad = 0
    for k in range(1, 6):
        legs = {n: enumerate_pmorphisms(fc.chain(n), fc.chain(k), surjective_only=True) for n in range(k, 6)}
        for n, m in itertools.product(range(k, 6), repeat=2):
            for f, g in itertools.product(legs[n], legs[m]):
                count += 1
                cospan = Cospan(f, g)
                sol = coamalgamate_chain(f, g)
                check_coamalgamation(sol, cospan, spec)
                # every Grz.3 frame up to the chain apex's size, one per isomorphism class
                pool = (p for s in range(max(n, m), sol.apex.size + 1) for p in oracles.linear_cone_posets(s))
                bad += coamalgamate_bruteforce(cospan, spec, frames=pool, budget=None) is None
    return bad == 0 and count == 251, f"{count} cospans, {bad} disagreements"


# -- 6: regularity audit -----------------------------------------------------------------------------

AUDITED = ("Grz.3", "S5+be1", "S5+be2", "S4+be1+bi1")


@criterion("6", "audit at bound 4 reports no failures for Grz.3, S5+be1, S5+be2, S4+be1+bi1")
def regularity_audit():
    parts, ok = [], True
    for text in AUDITED:
        report = audit_amalgamability(parse_logic(text), 4)
        ok &= report.ok and report.cospans > 0
        parts.append(f"{text} {report.cospans} cospans/{len(report.failures) + len(report.over_budget)} failed")
    return ok, ", ".join(parts)


# -- 7: non-effectiveness witnesses -----------------------------------------------------------------

@criterion("7", "all five forbidden-frame fixtures give a witness; chain4 collapses [3] onto [2] merging 1 and 2")
def witnesses():
    verdicts = {}
    merged = None
    for fx in builtin_fixtures():
        report = non_effectiveness_witness(fx.g0, fx.g1, fx.selection)
        verdicts[fx.name] = report.verdict
        if fx.name == "chain4":
            f_a = report.f_A
            fibres = sorted(sorted(fx.world_labels[a] for a in fx.g0.cod.worlds if f_a.map[a] == v)
                            for v in f_a.cod.worlds)
            merged = fibres if fc.isomorphic(f_a.cod, fc.chain(2)) else None
    ok = len(verdicts) == 5 and all(verdicts.values()) and merged == [["1", "2"], ["3"]]
    return ok, f"verdicts {verdicts}, chain4 fibres {merged}"


# -- 8: classification endpoints ---------------------------------------------------------------------

def _bounds_text(m, n):
    return "".join(f"+{name}{v}" for name, v in (("be", m), ("bi", n)) if v != "w")


REGULAR_TEXTS = (
    ["Inconsistent", "Grz.3"]
    + [base + _bounds_text(m, n) for base in ("S4", "S4.2", "S4+bd2", "S4+bd2+bw2", "S4.2+bd2")
       for m in ("1", "2", "w") for n in ("1", "2", "w")]
    + ["S5" + _bounds_text(m, "w") for m in ("1", "2", "w")]
)
EXACT_TEXTS = ("Inconsistent", "S4.2+bd2+be1+bi1", "S4.2+bd2+be1+bi2", "S5+be1", "S5+be2")


def classify_line(text):
    res = CliRunner().invoke(cli, ["classify", "--logic", text])
    return res.output.splitlines()[0] if res.exit_code == 0 and res.output else f"exit {res.exit_code}"


def vocabulary():
    for base in ("S4", "S4.2", "S4.3", "Grz", "Grz.3", "S5"):
        for values in itertools.product((1, 2, 3, OMEGA), repeat=len(BOUNDS)):
            yield LogicSpec(base, **dict(zip(BOUNDS, values)))
    yield LogicSpec("Inconsistent")


@criterion("8", "classify: regular for all 50 catalogue logics, barr-exact exactly for the five")
def classification():
    wrong = [t for t in REGULAR_TEXTS
             if classify_line(t) != f"regular: yes; barr-exact: {'yes' if t in EXACT_TEXTS else 'no'}"]
    same_catalog = {normalize(parse_logic(t)) for t in REGULAR_TEXTS} == {normalize(s) for s in regular_catalog()}
    exact_forms = {normalize(parse_logic(t)) for t in EXACT_TEXTS}
    specs = list(vocabulary())
    stray = [s for s in specs if is_barr_exact(s) and (normalize(s) not in exact_forms or not is_regular(s))]
    ok = not wrong and same_catalog and len(set(REGULAR_TEXTS)) == 50 and not stray
    return ok, (f"{len(REGULAR_TEXTS)} catalogue lines, {len(wrong)} wrong; catalogue matches: {same_catalog}; "
                f"{len(specs)} vocabulary specs, {len(stray)} exact outside the five or not regular")


# -- 9: presheaf equivalences -------------------------------------------------------------------------

EQUIVALENCES = (
    ("z2-mult", "S4.2+bd2+be1+bi1"),
    ("z3-mult", "S4.2+bd2+be1+bi2"),
    ("trivial", "S5+be1"),
    ("z2-add", "S5+be2"),
)


@criterion("9", "presheaf equivalences at frame bound 5 / presheaf bound 4, star frame, counit, strict chains")
def presheaf_equivalences():
    parts, ok = [], True
    for name, text in EQUIVALENCES:
        C = builtin_category(name)
        report = verify_equivalence(C, parse_logic(text), 5, 4)
        injective, _ = counit_injective_on_all_frames(C, 5)
        ok &= report.ok and injective
        parts.append(f"{name}/{text} {'ok' if report.ok and injective else 'FAILED'}")
    star = representable_frame(builtin_category("z2-mult"), 0).frame
    ok &= fc.isomorphic(star, fc.chain(2))
    # the reduction behind the counit check, confirmed directly on every labelled frame <= 3
    direct = all(counit(builtin_category(name), W).is_injective
                 for name, _ in EQUIVALENCES for n in range(4) for W in oracles.all_relations(n))
    chains = builtin_category("chain-poset:3")
    reps = all(fc.isomorphic(representable_frame(chains, m, strict=True).frame, fc.strict_chain(m + 1))
               for m in range(3))
    rigid = all(len(strict_chain_endomorphisms(m)) == 1 for m in range(1, 6))
    strict = verify_equivalence(chains, parse_logic("GL.3+bd3"), 5, 4, strict=True)
    ok &= direct and reps and rigid and strict.ok
    parts.append(f"K(star) = [2]: {fc.isomorphic(star, fc.chain(2))}, direct counit sweep: {direct}, "
                 f"K'(m) = [m+1]': {reps}, rigid strict chains: {rigid}, GL.3+bd3 strict: {strict.ok}")
    return ok, "; ".join(parts)


# -- 10: subreduction controls depth ----------------------------------------------------------------

def depth_failures(frames):
    failures = 0
    for w in frames:
        for n in (1, 2, 3):
            blocked = subreduces(w, fc.chain(n + 1), budget=None) is None
            failures += blocked != (oracles.depth(w) <= n)
    return failures


@criterion("10", "no subreduction onto [n+1] <=> depth <= n, all transitive frames <= 5", expected_failure=True)
def depth_literal():
    frames = frames_up_to_iso(5, transitive=True)
    failures = depth_failures(frames)
    return failures == 0, f"{len(frames)} frames, {failures} counterexamples (frames with irreflexive worlds)"


@criterion("10r", "the same equivalence on reflexive transitive frames <= 5")
def depth_reflexive():
    frames = frames_up_to_iso(5, transitive=True, reflexive=True)
    failures = depth_failures(frames)
    return failures == 0, f"{len(frames)} frames, {failures} counterexamples"


# -- pytest -----------------------------------------------------------------------------------------------

def _params():
    for key, _, _, expected_failure in CRITERIA:
        marks = [pytest.mark.xfail(strict=True, reason="false on frames with irreflexive worlds")] \
            if expected_failure else []
        yield pytest.param(key, id=f"criterion_{key}", marks=marks)


@pytest.mark.parametrize("key", list(_params()))
def test_criterion(key):
    _, passed, detail, _ = run_criterion(key)
    assert passed, detail


def main():
    failed = 0
    for key, _, _, expected_failure in CRITERIA:
        run_criterion(key)
        print(result_line(key), flush=True)
        failed += (not RESULTS[key][1]) and not expected_failure
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
