"""Modal formulas: AST, parser, and validity on finite frames.

Grammar (loosest binding first)::

    imp  := or ('->' imp)?
    or   := and ('|' and)*
    and  := un ('&' un)*
    un   := ('~' | 'dia' | 'box' | 'boxp') un | atom
    atom := 'p1' | 'p2' | ... | 'top' | 'bot' | '(' imp ')'

``boxp x`` abbreviates ``x & box x``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from . import _kernels
from .frame_core import Frame, bits

DEFAULT_MAX_VARS = 2
DEFAULT_MAX_SIZE = 6


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ValidityBudgetExceeded(RuntimeError):
    pass


class Formula:
    __slots__ = ()

    def variables(self) -> tuple[str, ...]:
        found: set[str] = set()
        stack = [self]
        while stack:
            node = stack.pop()
            if isinstance(node, Var):
                found.add(node.name)
            stack.extend(node.children())
        return tuple(sorted(found, key=lambda v: int(v[1:])))

    def children(self) -> tuple["Formula", ...]:
        return ()


@dataclass(frozen=True)
class Var(Formula):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Top(Formula):
    def __str__(self):
        return "top"


@dataclass(frozen=True)
class Bot(Formula):
    def __str__(self):
        return "bot"


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula

    def children(self):
        return (self.arg,)

    def __str__(self):
        return f"~{self.arg}"


@dataclass(frozen=True)
class Dia(Formula):
    arg: Formula

    def children(self):
        return (self.arg,)

    def __str__(self):
        return f"dia {self.arg}"


@dataclass(frozen=True)
class Box(Formula):
    arg: Formula

    def children(self):
        return (self.arg,)

    def __str__(self):
        return f"box {self.arg}"


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)

    def __str__(self):
        return f"({self.left} & {self.right})"


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)

    def __str__(self):
        return f"({self.left} | {self.right})"


@dataclass(frozen=True)
class Imp(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)

    def __str__(self):
        return f"({self.left} -> {self.right})"


def boxp(f: Formula) -> Formula:
    return And(f, Box(f))


# -- parser -------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(->)|(p[1-9][0-9]*)\b|(boxp|box|dia|top|bot)\b|([~&|()]))")


def _tokens(text: str) -> list[tuple[str, int]]:
    out, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            off = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise FormulaSyntaxError(f"unexpected character {text[off]!r}", len(text[:off].encode()))
        start = m.start(m.lastindex)
        out.append((m.group(m.lastindex), start))
        pos = m.end()
    out.append(("", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokens(text)
        self.i = 0

    def peek(self) -> str:
        return self.toks[self.i][0]

    def fail(self, message: str):
        pos = self.toks[self.i][1]
        raise FormulaSyntaxError(message, len(self.text[:pos].encode()))

    def take(self, tok: str):
        if self.peek() != tok:
            self.fail(f"expected {tok!r}" + (f", found {self.peek()!r}" if self.peek() else ", found end of input"))
        self.i += 1

    def imp(self) -> Formula:
        left = self.disj()
        if self.peek() == "->":
            self.i += 1
            return Imp(left, self.imp())
        return left

    def disj(self) -> Formula:
        f = self.conj()
        while self.peek() == "|":
            self.i += 1
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.unary()
        while self.peek() == "&":
            self.i += 1
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        tok = self.peek()
        if tok in ("~", "dia", "box", "boxp"):
            self.i += 1
            arg = self.unary()
            return {"~": Not, "dia": Dia, "box": Box, "boxp": boxp}[tok](arg)
        return self.atom()

    def atom(self) -> Formula:
        tok = self.peek()
        if tok == "(":
            self.i += 1
            f = self.imp()
            self.take(")")
            return f
        if tok.startswith("p") and tok[1:].isdigit():
            self.i += 1
            return Var(tok)
        if tok == "top":
            self.i += 1
            return Top()
        if tok == "bot":
            self.i += 1
            return Bot()
        self.fail("expected a formula" + (f", found {tok!r}" if tok else ", found end of input"))


def parse(text: str) -> Formula:
    p = _Parser(text)
    f = p.imp()
    if p.peek() != "":
        p.fail(f"unexpected {p.peek()!r}")
    return f


# -- semantics ------------------------------------------------------------------------

def truth_set(f: Frame, phi: Formula, valuation: Mapping[str, int]) -> int:
    """Worlds satisfying ``phi`` as a bitmask; ``valuation`` maps variables to bitmasks."""
    full = f.full
    if isinstance(phi, Var):
        return valuation[phi.name] & full
    if isinstance(phi, Top):
        return full
    if isinstance(phi, Bot):
        return 0
    if isinstance(phi, Not):
        return full & ~truth_set(f, phi.arg, valuation)
    if isinstance(phi, And):
        return truth_set(f, phi.left, valuation) & truth_set(f, phi.right, valuation)
    if isinstance(phi, Or):
        return truth_set(f, phi.left, valuation) | truth_set(f, phi.right, valuation)
    if isinstance(phi, Imp):
        return full & (~truth_set(f, phi.left, valuation) | truth_set(f, phi.right, valuation))
    x = truth_set(f, phi.arg, valuation)
    if isinstance(phi, Dia):
        return sum(1 << w for w in f.worlds if f.succ[w] & x)
    if isinstance(phi, Box):
        return sum(1 << w for w in f.worlds if not f.succ[w] & ~x)
    raise TypeError(f"not a formula: {phi!r}")


def valuations(f: Frame, names: tuple[str, ...]) -> Iterator[dict[str, int]]:
    n = f.size
    for code in range(1 << (n * len(names))):
        yield {v: (code >> (i * n)) & f.full for i, v in enumerate(names)}


def compile_program(phi: Formula) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    """Postfix opcode program for the batch kernels."""
    names = phi.variables()
    index = {v: i for i, v in enumerate(names)}
    ops, args = [], []

    def emit(node: Formula):
        for c in node.children():
            emit(c)
        if isinstance(node, Var):
            ops.append(_kernels.OP_VAR)
            args.append(index[node.name])
            return
        code = {
            Top: _kernels.OP_TOP, Bot: _kernels.OP_BOT, Not: _kernels.OP_NOT, And: _kernels.OP_AND,
            Or: _kernels.OP_OR, Imp: _kernels.OP_IMP, Dia: _kernels.OP_DIA, Box: _kernels.OP_BOX,
        }[type(node)]
        ops.append(code)
        args.append(0)

    emit(phi)
    return np.asarray(ops, dtype=np.int64), np.asarray(args, dtype=np.int64), names


def _check_budget(size: int, nvars: int, max_vars: int, max_size: int) -> None:
    if nvars > max_vars or size > max_size:
        raise ValidityBudgetExceeded(
            f"validity check needs {nvars} variables on {size} worlds; budget is {max_vars} variables, {max_size} worlds"
        )


def frame_validates(f: Frame, phi: Formula | str, max_vars: int = DEFAULT_MAX_VARS,
                    max_size: int = DEFAULT_MAX_SIZE) -> bool:
    if isinstance(phi, str):
        phi = parse(phi)
    ops, args, names = compile_program(phi)
    _check_budget(f.size, len(names), max_vars, max_size)
    succ = np.asarray([f.succ], dtype=np.int64).reshape(1, f.size)
    return bool(_kernels.batch_validates(succ, f.size, len(names), ops, args)[0])


def frames_validate(frames, phi: Formula | str, max_vars: int = DEFAULT_MAX_VARS,
                    max_size: int = DEFAULT_MAX_SIZE) -> np.ndarray:
    """Validity of one formula on many frames of a common size."""
    if isinstance(phi, str):
        phi = parse(phi)
    frames = list(frames)
    if not frames:
        return np.zeros(0, dtype=np.bool_)
    n = frames[0].size
    if any(g.size != n for g in frames):
        raise ValueError("frames_validate needs frames of a common size")
    ops, args, names = compile_program(phi)
    _check_budget(n, len(names), max_vars, max_size)
    succ = np.asarray([g.succ for g in frames], dtype=np.int64).reshape(len(frames), n)
    return _kernels.batch_validates(succ, n, len(names), ops, args)


def frame_validates_reference(f: Frame, phi: Formula | str) -> bool:
    """Tree-walking evaluation; slow, used as the independent route in tests."""
    if isinstance(phi, str):
        phi = parse(phi)
    names = phi.variables()
    return all(truth_set(f, phi, val) == f.full for val in valuations(f, names))


def counter_model(f: Frame, phi: Formula | str):
    """A valuation and world refuting ``phi``, or None."""
    if isinstance(phi, str):
        phi = parse(phi)
    for val in valuations(f, phi.variables()):
        bad = f.full & ~truth_set(f, phi, val)
        if bad:
            return val, next(bits(bad))
    return None


# -- axioms of the base logics -----------------------------------------------------------------

AXIOMS = {
    "bot": "bot",
    "4": "box p1 -> box box p1",
    "T": "box p1 -> p1",
    ".2": "dia box p1 -> box dia p1",
    ".3": "box (box p1 -> p2) | box (box p2 -> p1)",
    "Grz": "box (box (p1 -> box p1) -> p1) -> p1",
    "B": "p1 -> box dia p1",
    "Lob": "box (box p1 -> p1) -> box p1",
    ".3+": "boxp (boxp p1 -> p2) | boxp (boxp p2 -> p1)",
}

# S5 carries T explicitly: without it, transitive symmetric frames with dead ends validate the rest.
BASE_AXIOMS = {
    "Inconsistent": ("bot",),
    "K": (),
    "K4": ("4",),
    "S4": ("4", "T"),
    "S4.2": ("4", "T", ".2"),
    "S4.3": ("4", "T", ".3"),
    "Grz": ("4", "T", "Grz"),
    "Grz.3": ("4", "T", ".3", "Grz"),
    "S5": ("4", "T", "B"),
    "GL": ("4", "Lob"),
    "GL.3": ("4", "Lob", ".3+"),
}


def validates_base_axioms(frames, base: str) -> np.ndarray:
    """Which of ``frames`` (a common size) validate every axiom listed for ``base``."""
    frames = list(frames)
    out = np.ones(len(frames), dtype=np.bool_)
    for name in BASE_AXIOMS[base]:
        if not frames:
            break
        out &= frames_validate(frames, AXIOMS[name])
    return out
