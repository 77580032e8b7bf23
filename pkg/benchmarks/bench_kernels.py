"""Wall-clock comparison of the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 3]

Each kernel is called once before timing so JIT compilation is excluded.
Both backends must return matching results, which is asserted.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from rabilab import _accel
from rabilab.feynman_kac import chunk_generator
from rabilab.hamiltonian import build_rabi_parity_block
from rabilab.ou import draw_jump_batch
from rabilab.params import FockTruncation, ModelParams, ParitySector
from rabilab.paths import integrate_paths, normal_offsets
from rabilab.tridiag import eigen_tridiagonal


def _timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _both(fn, repeat):
    res = {}
    for name, flag in (("numba", True), ("numpy", False)):
        _accel.USE_NUMBA = flag
        fn()  # warm-up
        res[name] = _timed(fn, repeat)
    _accel.USE_NUMBA = _accel.HAVE_NUMBA
    return res


def bench_sturm(repeat):
    block = build_rabi_parity_block(ModelParams(0.5, 1.0, 1.5), ParitySector.PLUS, FockTruncation(1024))
    return _both(lambda: eigen_tridiagonal(block, 16), repeat)


def bench_paths(repeat, n=1 << 16, t=6.0):
    rng = chunk_generator(0, 0)
    counts, joff, jtimes = draw_jump_batch(n, t + 1.0, rng)
    checkpoints = np.array([t, t + 1.0])
    noff, total = normal_offsets(counts, checkpoints.size)
    normals = rng.standard_normal(total)
    x0 = rng.standard_normal(n) * np.sqrt(0.5)
    sigma0 = np.where(rng.random(n) < 0.5, 1, -1)
    return _both(lambda: integrate_paths(x0, sigma0, counts, joff, jtimes, checkpoints, normals, noff, 1.0), repeat)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':<28}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, fn in (("sturm bisection n=1025 k=16", bench_sturm), ("path integration 65536", bench_paths)):
        res = fn(args.repeat)
        (tn, a), (tp, b) = res["numba"], res["numpy"]
        for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12)
        print(f"{name:<28}{tn:>12.4f}{tp:>12.4f}{tp / tn:>9.1f}x")


if __name__ == "__main__":
    main()
