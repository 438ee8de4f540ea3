"""Command-line front end.

Frame documents::

    # comments and blank lines are ignored
    worlds: 3
    label: 0 root
    edge: 0 1
    edge: 1 2

Morphism documents hold two frame blocks and a map::

    [dom]
    worlds: 2
    edge: 0 0
    ...
    [cod]
    worlds: 1
    edge: 0 0
    map: 0 0

Exit codes: 0 success, 1 the checked property fails, 2 input error,
3 a search budget was exhausted.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass

import click

from . import frame_core as fc
from .amalgamation import STRATEGIES, CoamalgamationError, audit_amalgamability, coamalgamate
from .exactness import FIXTURE_NAMES, PairSelection, SelectionError, fixture, non_effectiveness_witness
from .formula import FormulaSyntaxError, ValidityBudgetExceeded, counter_model, frame_validates, parse
from .frame_core import Frame, FrameError, TooManySubframes
from .limits import Cospan, cokernel_pair, coequalizer, dgrph_pullback, equalizer, pushout
from .logic import (
    UnsupportedLogic,
    catalog_entry,
    frame_in_logic,
    is_barr_exact,
    is_regular,
    normalize,
    parse_logic,
)
from .pmorph import PMorphism, PMorphismError, SearchBudgetExceeded, subreduces
from .presheaf import CategoryError, builtin_category, verify_equivalence
from .product import (
    Cone,
    ProductBudgetExceeded,
    ProductError,
    levels_until_stable,
    mediate,
    product_levels,
    restrict_to_logic,
)

EXIT_OK, EXIT_FAILS, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3

DEFAULT_MAX_SIZE = 6
DEFAULT_MAX_DEPTH = 4
DEFAULT_MAX_MAPS = 10**6


class DocumentError(ValueError):
    def __init__(self, line: int | None, message: str):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


# -- documents ---------------------------------------------------------------------------------

_KEY = re.compile(r"^([a-z0-9]+)\s*:\s*(.*)$")


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def _ints(no: int, value: str, count: int | None = None) -> list[int]:
    try:
        out = [int(t) for t in value.split()]
    except ValueError:
        raise DocumentError(no, f"expected integers, got {value!r}") from None
    if count is not None and len(out) != count:
        raise DocumentError(no, f"expected {count} integers, got {len(out)}")
    return out


@dataclass(frozen=True)
class FrameDocument:
    frame: Frame
    labels: dict[int, str]


def _frame_from_lines(lines) -> FrameDocument:
    size = None
    edges = []
    labels: dict[int, str] = {}
    for no, line in lines:
        m = _KEY.match(line)
        if not m:
            raise DocumentError(no, f"cannot read {line!r}; expected 'worlds:', 'edge:' or 'label:'")
        key, value = m.groups()
        if key == "worlds":
            if size is not None:
                raise DocumentError(no, "world count given twice")
            (size,) = _ints(no, value, 1)
            if size < 0:
                raise DocumentError(no, "world count must be non-negative")
        elif key == "edge":
            if size is None:
                raise DocumentError(no, "edge before the world count")
            a, b = _ints(no, value, 2)
            if not (0 <= a < size and 0 <= b < size):
                raise DocumentError(no, f"edge {a} {b} uses a world outside 0..{size - 1}")
            edges.append((a, b))
        elif key == "label":
            if size is None:
                raise DocumentError(no, "label before the world count")
            parts = value.split(None, 1)
            if len(parts) != 2:
                raise DocumentError(no, "label needs a world and a name")
            (w,) = _ints(no, parts[0], 1)
            if not 0 <= w < size:
                raise DocumentError(no, f"label for world {w} outside 0..{size - 1}")
            labels[w] = parts[1]
        else:
            raise DocumentError(no, f"unknown key {key!r}")
    if size is None:
        raise DocumentError(None, "missing 'worlds:' line")
    return FrameDocument(Frame(size, frozenset(edges)), labels)


def parse_frame_document(text: str) -> Frame:
    return _frame_from_lines(_lines(text)).frame


def parse_frame_document_labels(text: str) -> FrameDocument:
    return _frame_from_lines(_lines(text))


def print_frame(f: Frame, labels: dict[int, str] | None = None) -> str:
    out = [f"worlds: {f.size}"]
    for w in sorted(labels or {}):
        out.append(f"label: {w} {labels[w]}")
    out.extend(f"edge: {a} {b}" for a, b in sorted(f.rel))
    return "\n".join(out) + "\n"


def print_dot(f: Frame, name: str = "frame") -> str:
    out = [f"digraph {name} {{"]
    out.extend(f"  {w};" for w in f.worlds)
    out.extend(f"  {a} -> {b};" for a, b in sorted(f.rel))
    out.append("}")
    return "\n".join(out) + "\n"


def parse_morphism_document(text: str) -> PMorphism:
    blocks: dict[str, list] = {}
    current = None
    mapping = None
    for no, line in _lines(text):
        if line in ("[dom]", "[cod]"):
            current = line[1:-1]
            if current in blocks:
                raise DocumentError(no, f"section {line} given twice")
            blocks[current] = []
            continue
        m = _KEY.match(line)
        if m and m.group(1) == "map":
            mapping = (no, _ints(no, m.group(2)))
            current = None
            continue
        if current is None:
            raise DocumentError(no, f"{line!r} is outside the [dom] and [cod] sections")
        blocks[current].append((no, line))
    for sec in ("dom", "cod"):
        if sec not in blocks:
            raise DocumentError(None, f"missing [{sec}] section")
    if mapping is None:
        raise DocumentError(None, "missing 'map:' line")
    dom = _frame_from_lines(blocks["dom"]).frame
    cod = _frame_from_lines(blocks["cod"]).frame
    no, values = mapping
    try:
        return PMorphism(dom, cod, values)
    except PMorphismError as e:
        raise DocumentError(no, str(e)) from None


def print_morphism(f: PMorphism) -> str:
    return (
        "[dom]\n" + print_frame(f.dom) + "[cod]\n" + print_frame(f.cod)
        + "map: " + " ".join(map(str, f.map)) + "\n"
    )


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise DocumentError(None, f"cannot read {path}: {e.strerror}") from None


def _frame_arg(path: str) -> Frame:
    try:
        return parse_frame_document(_read(path))
    except DocumentError as e:
        raise DocumentError(None, f"{path}: {e}") from None


def _morphism_arg(path: str) -> PMorphism:
    try:
        return parse_morphism_document(_read(path))
    except DocumentError as e:
        raise DocumentError(None, f"{path}: {e}") from None


# -- command plumbing -------------------------------------------------------------------------------

_BUDGET_ERRORS = (SearchBudgetExceeded, ProductBudgetExceeded, ValidityBudgetExceeded, TooManySubframes)
_INPUT_ERRORS = (DocumentError, FormulaSyntaxError, UnsupportedLogic, FrameError, PMorphismError,
                 ProductError, CoamalgamationError, SelectionError, CategoryError)


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except _BUDGET_ERRORS as e:
            click.echo(f"budget exceeded: {e}", err=True)
            ctx.exit(EXIT_BUDGET)
        except _INPUT_ERRORS as e:
            click.echo(f"input error: {e}", err=True)
            ctx.exit(EXIT_INPUT)


@dataclass
class Budgets:
    max_size: int
    max_depth: int
    max_maps: int
    dot: bool


def _emit_frame(ctx, f: Frame, name: str = "frame") -> None:
    click.echo(print_dot(f, name) if ctx.obj.dot else print_frame(f), nl=False)


def _logic(text: str):
    return parse_logic(text)


@click.group(cls=_Group)
@click.option("--max-size", default=DEFAULT_MAX_SIZE, show_default=True, help="Largest frame explored by exhaustive searches.")
@click.option("--max-depth", default=DEFAULT_MAX_DEPTH, show_default=True, help="Deepest product level built.")
@click.option("--max-maps", default=DEFAULT_MAX_MAPS, show_default=True, help="Candidate budget for map searches.")
@click.option("--dot", is_flag=True, help="Print frames as graph descriptions.")
@click.pass_context
def cli(ctx, max_size, max_depth, max_maps, dot):
    """Finite Kripke frames, p-morphisms and their categorical constructions."""
    ctx.obj = Budgets(max_size, max_depth, max_maps, dot)


@cli.command()
@click.argument("frame")
@click.option("--logic", "logic_text", required=True)
@click.pass_context
def check(ctx, frame, logic_text):
    """Is FRAME a frame of the logic?"""
    f = _frame_arg(frame)
    spec = _logic(logic_text)
    ok = frame_in_logic(spec, f)
    click.echo(f"{spec}: {'yes' if ok else 'no'}")
    ctx.exit(EXIT_OK if ok else EXIT_FAILS)


@cli.command()
@click.argument("frame")
@click.option("--formula", "formula_text", required=True)
@click.pass_context
def validate(ctx, frame, formula_text):
    """Does FRAME validate the formula?"""
    f = _frame_arg(frame)
    phi = parse(formula_text)
    ok = frame_validates(f, phi, max_size=ctx.obj.max_size)
    if ok:
        click.echo("valid")
        ctx.exit(EXIT_OK)
    valuation, world = counter_model(f, phi)
    shown = ", ".join(f"{k}={sorted(fc.bits(v))}" for k, v in sorted(valuation.items()))
    click.echo(f"not valid: fails at world {world} under {shown or 'the empty valuation'}")
    ctx.exit(EXIT_FAILS)


@cli.command("equalizer")
@click.argument("f")
@click.argument("g")
@click.pass_context
def equalizer_cmd(ctx, f, g):
    """Largest generated subframe on which the maps F and G agree."""
    members, inc = equalizer(_morphism_arg(f), _morphism_arg(g))
    click.echo("members: " + " ".join(map(str, sorted(members))))
    _emit_frame(ctx, inc.dom, "equalizer")


@cli.command("coequalizer")
@click.argument("f")
@click.argument("g")
@click.pass_context
def coequalizer_cmd(ctx, f, g):
    """Quotient of the common codomain of F and G."""
    q, qmap = coequalizer(_morphism_arg(f), _morphism_arg(g))
    click.echo("map: " + " ".join(map(str, qmap.map)))
    _emit_frame(ctx, q, "coequalizer")


@cli.command("cokernel-pair")
@click.argument("f")
@click.pass_context
def cokernel_pair_cmd(ctx, f):
    """Two copies of the codomain of F glued along its image."""
    u, i0, i1 = cokernel_pair(_morphism_arg(f))
    click.echo("i0: " + " ".join(map(str, i0.map)))
    click.echo("i1: " + " ".join(map(str, i1.map)))
    _emit_frame(ctx, u, "cokernel_pair")


@cli.command("pushout")
@click.argument("f0")
@click.argument("f1")
@click.option("--verify", is_flag=True, help="Check the universal property on frames up to --max-size 3.")
@click.pass_context
def pushout_cmd(ctx, f0, f1, verify):
    """Pushout of two maps with a common domain."""
    a, b = _morphism_arg(f0), _morphism_arg(f1)
    probes = []
    if verify:
        for n in range(min(ctx.obj.max_size, 3) + 1):
            probes.extend(fc.enumerate_frames(n, up_to_iso=True))
    res = pushout(a, b, verify=verify, probe_frames=probes, budget=ctx.obj.max_maps)
    click.echo("j0: " + " ".join(map(str, res.j0.map)))
    click.echo("j1: " + " ".join(map(str, res.j1.map)))
    _emit_frame(ctx, res.frame, "pushout")
    if verify:
        if res.verified is None:
            click.echo("universal property: budget exceeded")
            ctx.exit(EXIT_BUDGET)
        click.echo(f"universal property: {'holds' if res.verified else 'fails'}")
        ctx.exit(EXIT_OK if res.verified else EXIT_FAILS)


@cli.command("pullback")
@click.argument("f0")
@click.argument("f1")
@click.pass_context
def pullback_cmd(ctx, f0, f1):
    """Pullback of two maps over stable maps; reports whether the projections are p-morphisms."""
    res = dgrph_pullback(_morphism_arg(f0), _morphism_arg(f1))
    click.echo("pairs: " + " ".join(f"({a},{b})" for a, b in res.pairs))
    _emit_frame(ctx, res.frame, "pullback")
    valid = res.p0 is not None and res.p1 is not None
    click.echo(f"projections are p-morphisms: {'yes' if valid else 'no'}")
    ctx.exit(EXIT_OK if valid else EXIT_FAILS)


@cli.command("product")
@click.argument("f0")
@click.argument("f1")
@click.option("--depth", type=int, default=None, help="Levels to build (default --max-depth).")
@click.option("--logic", "logic_text", default=None)
@click.option("--until-stable", is_flag=True, help="Stop when a level adds nothing.")
@click.option("--show", is_flag=True, help="Print the top level frame.")
@click.pass_context
def product_cmd(ctx, f0, f1, depth, logic_text, until_stable, show):
    """Depth levels of the product of two frames."""
    w0, w1 = _frame_arg(f0), _frame_arg(f1)
    depth = ctx.obj.max_depth if depth is None else depth
    if until_stable:
        levels, stable = levels_until_stable(w0, w1, depth)
    else:
        levels, stable = product_levels(w0, w1, depth), None
    if logic_text:
        levels = restrict_to_logic(levels, _logic(logic_text))
    for lvl in levels[1:]:
        click.echo(f"level {lvl.n}: {lvl.size} worlds")
    if until_stable:
        click.echo("stable: two consecutive levels agree" if stable
                   else f"truncated at depth {depth} without stabilising")
    if show:
        top = levels[-1]
        _emit_frame(ctx, top.frame, "product")
        click.echo("p0: " + " ".join(map(str, top.p0.map)))
        click.echo("p1: " + " ".join(map(str, top.p1.map)))


@cli.command("mediate")
@click.argument("leg0")
@click.argument("leg1")
@click.option("--depth", type=int, default=None, help="Product depth (default: depth of the apex).")
@click.pass_context
def mediate_cmd(ctx, leg0, leg1, depth):
    """Mediating morphism from the cone given by LEG0 and LEG1 into the product."""
    a, b = _morphism_arg(leg0), _morphism_arg(leg1)
    if a.dom != b.dom:
        raise DocumentError(None, "the two legs must share their domain")
    depth = fc.frame_depth(a.dom) if depth is None else depth
    levels = product_levels(a.cod, b.cod, depth)
    m = mediate(Cone(a.dom, a, b), levels)
    click.echo("map: " + " ".join(map(str, m.map)))
    click.echo("labels: " + " ".join(f"({levels[-1].labels(x)[0]},{levels[-1].labels(x)[1]})" for x in m.map))


@cli.command("subreduce")
@click.argument("w")
@click.argument("v")
@click.pass_context
def subreduce_cmd(ctx, w, v):
    """Does W subreduce onto V?"""
    found = subreduces(_frame_arg(w), _frame_arg(v), budget=ctx.obj.max_maps)
    if found is None:
        click.echo("no subreduction")
        ctx.exit(EXIT_FAILS)
    members, p = found
    click.echo("members: " + " ".join(map(str, sorted(members))))
    click.echo("map: " + " ".join(map(str, p.map)))


@cli.command("coamalgamate")
@click.argument("f0")
@click.argument("f1")
@click.option("--logic", "logic_text", required=True)
@click.option("--strategy", type=click.Choice(STRATEGIES), default="auto", show_default=True)
@click.pass_context
def coamalgamate_cmd(ctx, f0, f1, logic_text, strategy):
    """Common cover of two surjections onto one frame."""
    spec = _logic(logic_text)
    sol = coamalgamate(Cospan(_morphism_arg(f0), _morphism_arg(f1)), spec, strategy,
                       bruteforce_size=min(ctx.obj.max_size, 5), budget=ctx.obj.max_maps)
    if sol is None:
        click.echo("no coamalgamation found within the search budget")
        ctx.exit(EXIT_FAILS)
    click.echo(f"route: {sol.route}")
    click.echo("g0: " + " ".join(map(str, sol.g0.map)))
    click.echo("g1: " + " ".join(map(str, sol.g1.map)))
    _emit_frame(ctx, sol.apex, "apex")


@cli.command("audit")
@click.option("--logic", "logic_text", required=True)
@click.option("--bound", type=int, required=True)
@click.pass_context
def audit_cmd(ctx, logic_text, bound):
    """Try to coamalgamate every small rooted cospan of the logic."""
    report = audit_amalgamability(_logic(logic_text), bound, bruteforce_size=min(ctx.obj.max_size, 5),
                                  budget=ctx.obj.max_maps)
    click.echo(f"{report.spec}: {report.cospans} rooted cospans up to size {bound}")
    for route, n in sorted(report.routes.items()):
        click.echo(f"  solved by {route}: {n}")
    click.echo(f"  unsolved: {len(report.failures)}")
    click.echo(f"  over budget: {len(report.over_budget)}")
    if report.over_budget and not report.failures:
        ctx.exit(EXIT_BUDGET)
    ctx.exit(EXIT_OK if report.ok else EXIT_FAILS)


def _parse_witness_input(text: str):
    """Witness documents: a morphism-style [dom]/[cod] pair, ``g0:``/``g1:`` maps and ``admit:`` lines.

    ``admit: a b : c d`` puts the pair ``(c, d)`` into the entry for ``(a, b)``.
    """
    blocks: dict[str, list] = {}
    current = None
    maps: dict[str, tuple[int, list[int]]] = {}
    admits: list[tuple[int, tuple[int, int], tuple[int, int]]] = []
    for no, line in _lines(text):
        if line in ("[dom]", "[cod]"):
            current = line[1:-1]
            blocks[current] = []
            continue
        m = _KEY.match(line)
        if m and m.group(1) in ("g0", "g1"):
            maps[m.group(1)] = (no, _ints(no, m.group(2)))
            current = None
            continue
        if m and m.group(1) == "admit":
            parts = m.group(2).split(":")
            if len(parts) != 2:
                raise DocumentError(no, "admit lines look like 'admit: a b : c d'")
            a, b = _ints(no, parts[0], 2)
            c, d = _ints(no, parts[1], 2)
            admits.append((no, (a, b), (c, d)))
            current = None
            continue
        if current is None:
            raise DocumentError(no, f"cannot read {line!r}")
        blocks[current].append((no, line))
    for sec in ("dom", "cod"):
        if sec not in blocks:
            raise DocumentError(None, f"missing [{sec}] section")
    for key in ("g0", "g1"):
        if key not in maps:
            raise DocumentError(None, f"missing '{key}:' line")
    u = _frame_from_lines(blocks["dom"]).frame
    w = _frame_from_lines(blocks["cod"]).frame
    legs = []
    for key in ("g0", "g1"):
        no, values = maps[key]
        try:
            legs.append(PMorphism(u, w, values))
        except PMorphismError as e:
            raise DocumentError(no, str(e)) from None
    table = {(a, b): set() for a in w.worlds for b in w.worlds}
    for no, at, pair in admits:
        if at not in table or not all(0 <= v < w.size for v in pair):
            raise DocumentError(no, "admit line uses a world outside the codomain")
        table[at].add(pair)
    return legs[0], legs[1], PairSelection(w, {k: frozenset(v) for k, v in table.items()})


@cli.command("witness")
@click.option("--fixture", "fixture_name", type=click.Choice(FIXTURE_NAMES), default=None)
@click.option("--input", "input_path", default=None, help="Witness document with g0, g1 and admit lines.")
@click.pass_context
def witness_cmd(ctx, fixture_name, input_path):
    """Check the non-effectiveness conditions for a pair of maps and a pair selection."""
    if (fixture_name is None) == (input_path is None):
        raise click.UsageError("give exactly one of --fixture and --input")
    if fixture_name is not None:
        fx = fixture(fixture_name)
        g0, g1, sel = fx.g0, fx.g1, fx.selection
        names = fx.world_labels
    else:
        g0, g1, sel = _parse_witness_input(_read(input_path))
        names = tuple(str(w) for w in g0.cod.worlds)
    report = non_effectiveness_witness(g0, g1, sel)
    click.echo("admissible worlds: " + " ".join(map(str, sorted(report.admissible))))
    outside = "yes" if report.u_minus_ua_nonempty else "no"
    sample = f" (e.g. world {report.sample_outside})" if report.sample_outside is not None else ""
    click.echo(f"worlds outside the admissible part: {outside}{sample}")
    classes: dict[int, list[str]] = {}
    for w, c in enumerate(report.f_A.map):
        classes.setdefault(c, []).append(names[w])
    described = "; ".join("{" + ", ".join(v) + "}" for _, v in sorted(classes.items()))
    click.echo(f"f_A: {g0.cod.size} worlds onto {report.f_A.cod.size}, classes {described}")
    click.echo(f"f_A equalizes g0 and g1: {'yes' if report.coequalizer_merges else 'no'}")
    click.echo(f"verdict: {'true' if report.verdict else 'false'}")
    ctx.exit(EXIT_OK if report.verdict else EXIT_FAILS)


@cli.group("presheaf", cls=_Group)
def presheaf_group():
    """Presheaves on finite categories."""


@presheaf_group.command("verify")
@click.option("--category", "category_name", required=True, help="z2-mult, z3-mult, trivial, z2-add or chain-poset:<n>")
@click.option("--logic", "logic_text", required=True)
@click.option("--bound", type=int, required=True, help="Largest presheaf (total elements) and frame checked.")
@click.option("--frame-bound", type=int, default=None, help="Override the frame bound.")
@click.option("--strict", is_flag=True, help="Use the strict (irreflexive) frame of elements.")
@click.pass_context
def presheaf_verify(ctx, category_name, logic_text, bound, frame_bound, strict):
    """Check that the frames of elements give an equivalence with the logic's frames."""
    C = builtin_category(category_name)
    spec = _logic(logic_text)
    if category_name.startswith("chain-poset:") and not strict and spec.base in ("GL", "GL.3"):
        strict = True
    report = verify_equivalence(C, spec, bound if frame_bound is None else frame_bound, bound, strict)
    click.echo(f"{C.name} vs {spec}{' (strict)' if strict else ''}: "
               f"{report.presheaves} presheaves, {report.frames} frames")
    click.echo(f"  frames of elements outside the logic: {len(report.outside_logic)}")
    click.echo(f"  counit not bijective on logic frames: {len(report.counit_not_bijective)}")
    click.echo(f"  unit not an isomorphism: {len(report.unit_not_iso)}")
    click.echo(f"  triangle identity failures: {len(report.triangle_failures)}")
    click.echo(f"  counit injective on all frames: {'yes' if report.counit_collision is None else 'no'}")
    click.echo("pass" if report.ok else "fail")
    ctx.exit(EXIT_OK if report.ok else EXIT_FAILS)


@cli.command("classify")
@click.option("--logic", "logic_text", required=True)
@click.pass_context
def classify_cmd(ctx, logic_text):
    """Regularity and Barr-exactness of the logic's frame category."""
    spec = _logic(logic_text)
    regular = is_regular(spec)
    exact = is_barr_exact(spec)
    click.echo(f"regular: {'yes' if regular else 'no'}; barr-exact: {'yes' if exact else 'no'}")
    click.echo(f"normal form: {normalize(spec)}")
    reg_entry = catalog_entry(spec, "regular")
    exact_entry = catalog_entry(spec, "exact")
    click.echo(f"regular catalog entry: {reg_entry if reg_entry is not None else 'none'}")
    click.echo(f"barr-exact catalog entry: {exact_entry if exact_entry is not None else 'none'}")


def main(argv=None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="kripkecat", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        e.show()
        return EXIT_INPUT
    except click.exceptions.Abort:
        return EXIT_INPUT
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
