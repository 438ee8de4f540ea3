"""Bitmask kernels for batch formula validity and batch p-morphism checks.

Two implementations share one signature: a numba-compiled loop and a
vectorised numpy path. ``KRIPKECAT_BACKEND=numpy`` forces the numpy path;
the default is numba when it imports.
"""

from __future__ import annotations

import os

import numpy as np

OP_VAR, OP_TOP, OP_BOT, OP_NOT, OP_AND, OP_OR, OP_IMP, OP_DIA, OP_BOX = range(9)

_CHUNK = 2048


# -- numpy -------------------------------------------------------------------------

def _modal_np(succ: np.ndarray, x: np.ndarray, n: int, box: bool) -> np.ndarray:
    # succ: (F, n); x: (F, V)
    out = np.zeros_like(x)
    full = (1 << n) - 1
    for w in range(n):
        s = succ[:, w:w + 1]
        if box:
            hit = (s & (full & ~x)) == 0
        else:
            hit = (s & x) != 0
        out |= hit.astype(np.int64) << w
    return out


def batch_validates_numpy(succ: np.ndarray, n: int, nvars: int, ops: np.ndarray, args: np.ndarray) -> np.ndarray:
    succ = np.asarray(succ, dtype=np.int64)
    n_frames = succ.shape[0]
    full = (1 << n) - 1
    codes = np.arange(1 << (n * nvars), dtype=np.int64)[None, :]
    result = np.ones(n_frames, dtype=np.bool_)
    for lo in range(0, n_frames, _CHUNK):
        s = succ[lo:lo + _CHUNK]
        shape = (s.shape[0], codes.shape[1])
        stack: list[np.ndarray] = []
        for op, arg in zip(ops.tolist(), args.tolist()):
            if op == OP_VAR:
                stack.append(np.broadcast_to((codes >> (arg * n)) & full, shape))
            elif op == OP_TOP:
                stack.append(np.full(shape, full, dtype=np.int64))
            elif op == OP_BOT:
                stack.append(np.zeros(shape, dtype=np.int64))
            elif op == OP_NOT:
                stack.append(full & ~stack.pop())
            elif op in (OP_AND, OP_OR, OP_IMP):
                b = stack.pop()
                a = stack.pop()
                if op == OP_AND:
                    stack.append(a & b)
                elif op == OP_OR:
                    stack.append(a | b)
                else:
                    stack.append(full & (~a | b))
            else:
                stack.append(_modal_np(s, stack.pop(), n, op == OP_BOX))
        top = stack.pop()
        result[lo:lo + _CHUNK] = (top == full).all(axis=1)
    return result


def batch_is_pmorphism_numpy(dom_succ: np.ndarray, cod_succ: np.ndarray, maps: np.ndarray) -> np.ndarray:
    dom_succ = np.asarray(dom_succ, dtype=np.int64)
    cod_succ = np.asarray(cod_succ, dtype=np.int64)
    maps = np.asarray(maps, dtype=np.int64)
    n_maps, n = maps.shape
    ok = np.ones(n_maps, dtype=np.bool_)
    if n == 0:
        return ok
    img_succ = cod_succ[maps]  # (M, n): successors of f(w)
    for w in range(n):
        reached = np.zeros(n_maps, dtype=np.int64)
        for x in range(n):
            if dom_succ[w] >> x & 1:
                bit = np.int64(1) << maps[:, x]
                # stability on the edge w -> x
                ok &= (img_succ[:, w] & bit) != 0
                reached |= bit
        # openness at w
        ok &= (img_succ[:, w] & ~reached) == 0
    return ok


# -- numba ---------------------------------------------------------------------------

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is optional
    njit = None

if njit is not None:

    @njit(cache=True)
    def _validates_one(succ, n, nvars, ops, args, stack):
        full = (1 << n) - 1
        for code in range(1 << (n * nvars)):
            sp = 0
            for k in range(ops.shape[0]):
                op = ops[k]
                if op == OP_VAR:
                    stack[sp] = (code >> (args[k] * n)) & full
                    sp += 1
                elif op == OP_TOP:
                    stack[sp] = full
                    sp += 1
                elif op == OP_BOT:
                    stack[sp] = 0
                    sp += 1
                elif op == OP_NOT:
                    stack[sp - 1] = full & ~stack[sp - 1]
                elif op == OP_AND:
                    sp -= 1
                    stack[sp - 1] = stack[sp - 1] & stack[sp]
                elif op == OP_OR:
                    sp -= 1
                    stack[sp - 1] = stack[sp - 1] | stack[sp]
                elif op == OP_IMP:
                    sp -= 1
                    stack[sp - 1] = full & (~stack[sp - 1] | stack[sp])
                else:
                    x = stack[sp - 1]
                    r = 0
                    for w in range(n):
                        s = succ[w]
                        if op == OP_BOX:
                            if s & (full & ~x) == 0:
                                r |= 1 << w
                        elif s & x != 0:
                            r |= 1 << w
                    stack[sp - 1] = r
            if stack[0] != full:
                return False
        return True

    @njit(cache=True)
    def _batch_validates_numba(succ, n, nvars, ops, args):
        out = np.empty(succ.shape[0], dtype=np.bool_)
        stack = np.empty(ops.shape[0] + 1, dtype=np.int64)
        for i in range(succ.shape[0]):
            out[i] = _validates_one(succ[i], n, nvars, ops, args, stack)
        return out

    @njit(cache=True)
    def _batch_is_pmorphism_numba(dom_succ, cod_succ, maps):
        n_maps, n = maps.shape
        out = np.ones(n_maps, dtype=np.bool_)
        for i in range(n_maps):
            good = True
            for w in range(n):
                target = cod_succ[maps[i, w]]
                reached = 0
                for x in range(n):
                    if (dom_succ[w] >> x) & 1:
                        bit = np.int64(1) << maps[i, x]
                        if target & bit == 0:
                            good = False
                            break
                        reached |= bit
                if not good or target & ~reached != 0:
                    good = False
                    break
            out[i] = good
        return out


def batch_validates_numba(succ, n, nvars, ops, args):
    return _batch_validates_numba(np.ascontiguousarray(succ, dtype=np.int64), n, nvars,
                                  np.ascontiguousarray(ops, dtype=np.int64),
                                  np.ascontiguousarray(args, dtype=np.int64))


def batch_is_pmorphism_numba(dom_succ, cod_succ, maps):
    return _batch_is_pmorphism_numba(np.ascontiguousarray(dom_succ, dtype=np.int64),
                                     np.ascontiguousarray(cod_succ, dtype=np.int64),
                                     np.ascontiguousarray(maps, dtype=np.int64))


def _select_backend() -> str:
    wanted = os.environ.get("KRIPKECAT_BACKEND", "").strip().lower()
    if wanted == "numpy" or njit is None:
        return "numpy"
    return "numba"


BACKEND = _select_backend()

if BACKEND == "numba":
    batch_validates = batch_validates_numba
    batch_is_pmorphism = batch_is_pmorphism_numba
else:
    batch_validates = batch_validates_numpy
    batch_is_pmorphism = batch_is_pmorphism_numpy


def all_maps(n: int, m: int) -> np.ndarray:
    """Every map from n worlds to m worlds, one per row, in lexicographic order."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    if m == 0:
        return np.zeros((0, n), dtype=np.int64)
    idx = np.arange(m**n, dtype=np.int64)
    cols = [(idx // m ** (n - 1 - k)) % m for k in range(n)]
    return np.stack(cols, axis=1)
