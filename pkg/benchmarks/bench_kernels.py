"""Numba vs numpy timings for the two hot kernels.

    python benchmarks/bench_kernels.py [--sizes 4 6 8 10] [--repeat 5]

Prints one line per (kernel, size) with the best-of-``repeat`` wall time of
each path, the speed-up, and the max abs difference between the outputs.
"""
import argparse
import timeit

import numpy as np

from mep3 import _fast
from mep3._accel import HAVE_NUMBA
from mep3.discretize import RANDOM_OFFSETS


def _rows(n, rng):
    return [tuple(rng.standard_normal((n, n)) for _ in range(3)) for _ in range(3)]


def bench_det3(n, repeat, rng):
    rows = _rows(n, rng)
    stacks = [np.ascontiguousarray(np.stack(r).astype(np.complex128)) for r in rows]
    out = np.empty((n ** 3, n ** 3), dtype=np.complex128)
    ref = _fast._det3_kron_numpy(rows)
    _fast._det3_kron_numba(*stacks, out)  # compile
    t_np = min(timeit.repeat(lambda: _fast._det3_kron_numpy(rows), number=1, repeat=repeat))
    t_nb = min(timeit.repeat(lambda: _fast._det3_kron_numba(*stacks, out), number=1,
                             repeat=repeat))
    return t_np, t_nb, float(np.max(np.abs(out.real - ref)))


def bench_cramer(n, repeat, rng):
    # same coefficient shape as the random test generator
    c = [np.column_stack([rng.random(n) + o for o in offs]) for offs in RANDOM_OFFSETS]
    m = n ** 3
    sol, det = np.empty((m, 3)), np.empty(m)
    ref, _ = _fast._cramer_numpy(*c)
    _fast._cramer_numba(*c, sol, det)
    t_np = min(timeit.repeat(lambda: _fast._cramer_numpy(*c), number=1, repeat=repeat))
    t_nb = min(timeit.repeat(lambda: _fast._cramer_numba(*c, sol, det), number=1,
                             repeat=repeat))
    return t_np, t_nb, float(np.max(np.abs(sol - ref)))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 6, 8, 10])
    ap.add_argument("--cramer-sizes", type=int, nargs="+", default=[10, 30, 60])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; only the numpy path exists")
        return
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<10}{'n':>5}{'numpy [s]':>12}{'numba [s]':>12}{'speed-up':>10}{'max diff':>11}")
    for name, fn, sizes in (("det3_kron", bench_det3, args.sizes),
                            ("cramer", bench_cramer, args.cramer_sizes)):
        for n in sizes:
            t_np, t_nb, diff = fn(n, args.repeat, rng)
            print(f"{name:<10}{n:>5}{t_np:>12.4g}{t_nb:>12.4g}{t_np / t_nb:>10.2f}{diff:>11.2e}")


if __name__ == "__main__":
    main()
