"""Compare the numba and numpy kernels on the two batch workloads.

Run with ``python3 benchmarks/bench_kernels.py``. Each workload is checked
for identical answers on both backends before it is timed.
"""
import argparse
import time

import numpy as np

from kripkecat import _kernels
from kripkecat import frame_core as fc
from kripkecat.formula import AXIOMS, compile_program, parse


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def formula_workload(size, axiom):
    frames = fc.enumerate_frames(size)
    succ = np.asarray([f.succ for f in frames], dtype=np.int64).reshape(len(frames), size)
    ops, args, names = compile_program(parse(AXIOMS[axiom]))
    label = f"validity of {axiom!r} on {len(frames)} frames of size {size}"
    return label, (lambda k: k(succ, size, len(names), ops, args)), \
        _kernels.batch_validates_numba, _kernels.batch_validates_numpy


def pmorphism_workload(dom, cod, name):
    maps = _kernels.all_maps(dom.size, cod.size)
    dom_succ = np.asarray(dom.succ, dtype=np.int64)
    cod_succ = np.asarray(cod.succ, dtype=np.int64)
    label = f"p-morphism check of {len(maps)} maps, {name}"
    return label, (lambda k: k(dom_succ, cod_succ, maps)), \
        _kernels.batch_is_pmorphism_numba, _kernels.batch_is_pmorphism_numpy


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=3)
    opts = parser.parse_args()
    if _kernels.njit is None:
        raise SystemExit("numba is not importable; nothing to compare")
    workloads = [
        formula_workload(3, "Grz"),
        formula_workload(4, "4"),
        formula_workload(4, ".3"),
        pmorphism_workload(fc.chain(8), fc.chain(4), "chain(8) -> chain(4)"),
        pmorphism_workload(fc.add_root(fc.cluster(3)), fc.fork(3), "root over cluster(3) -> fork(3)"),
    ]
    print(f"{'workload':<60} {'numba s':>9} {'numpy s':>9} {'speedup':>8}")
    for label, call, fast, slow in workloads:
        if not np.array_equal(call(fast), call(slow)):
            raise SystemExit(f"backends disagree on {label}")
        jit = best_of(lambda: call(fast), opts.repeats)
        ref = best_of(lambda: call(slow), opts.repeats)
        print(f"{label:<60} {jit:>9.4f} {ref:>9.4f} {ref / jit:>7.1f}x")


if __name__ == "__main__":
    main()
