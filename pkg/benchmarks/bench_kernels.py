"""Compare the numba kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py            # kernel timings
    python3 benchmarks/bench_kernels.py --e2e      # also prove every fixture under both paths

Kernel rows time ``kernel(...)`` (compiled) against ``kernel.numpy_func(...)``
on the same inputs and check that the outputs match. The end-to-end section
runs ``bvt bench fixtures`` twice in subprocesses, once with
``BVT_DISABLE_JIT=1``.
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from bvterm._jit import JIT_ACTIVE
from bvterm.synthesis.pool import _row_hashes
from bvterm.synthesis.search import cover_mask, first_cover, pack, progress_rows

ROOT = Path(__file__).resolve().parent.parent


def best_of(fn, *args, repeat=5):
    fn(*args)  # warm-up, includes compilation
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t)
    return min(times), out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def cases(rng, rows):
    bits = pack(rng.random((rows, 256)) < 0.9)
    strict = pack(rng.random((rows, 256)) < 0.3)
    req = pack(rng.random((1, 256)) < 0.2)[0]
    block = rng.integers(0, 1 << 63, size=(rows, 24), dtype=np.uint64)
    salt = rng.integers(0, 1 << 63, size=24, dtype=np.uint64)
    # only the last row covers the full mask, so both paths scan everything
    last = bits.copy()
    last[-1] = np.uint64(0xFFFFFFFFFFFFFFFF)
    full = last[-1].copy()
    return [
        ("row_hashes", _row_hashes, (block, salt)),
        ("cover_mask", cover_mask, (bits, req)),
        ("first_cover", first_cover, (last, full, 0)),
        ("progress_rows", progress_rows, (bits, strict, req)),
    ]


def kernels(rows: int) -> None:
    rng = np.random.default_rng(0)
    print(f"{'kernel':<14} {'rows':>9} {'numba[ms]':>10} {'numpy[ms]':>10} {'speedup':>8}  match")
    for name, k, args in cases(rng, rows):
        tn, on = best_of(k.numpy_func, *args)
        if JIT_ACTIVE:
            tj, oj = best_of(k, *args)
            print(f"{name:<14} {rows:>9} {tj * 1e3:>10.2f} {tn * 1e3:>10.2f} {tn / tj:>7.1f}x  {same(oj, on)}")
        else:
            print(f"{name:<14} {rows:>9} {'-':>10} {tn * 1e3:>10.2f} {'-':>8}  -")


def end_to_end(timeout: float) -> None:
    for label, env in (("numba", {}), ("numpy", {"BVT_DISABLE_JIT": "1"})):
        t = time.perf_counter()
        r = subprocess.run([sys.executable, "-m", "bvterm.cli", "bench", str(ROOT / "fixtures"),
                            "--timeout", str(timeout)], capture_output=True, text=True,
                           env=dict(os.environ, **env))
        print(f"\n== {label} path: {time.perf_counter() - t:.1f}s wall, exit {r.returncode}")
        print(r.stdout.rstrip())


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, nargs="*", default=[10_000, 1_000_000])
    ap.add_argument("--e2e", action="store_true", help="prove the fixtures under both paths")
    ap.add_argument("--timeout", type=float, default=120.0)
    args = ap.parse_args()
    if not JIT_ACTIVE:
        print("numba disabled (BVT_DISABLE_JIT set or numba missing): numpy timings only")
    for rows in args.rows:
        kernels(rows)
    if args.e2e:
        end_to_end(args.timeout)


if __name__ == "__main__":
    main()
