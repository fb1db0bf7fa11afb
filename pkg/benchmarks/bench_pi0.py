"""Timing comparison of the pi0 enumeration backends.

Runs the gauge-orbit and 1-simplex quotients on zoo instances over a
selectable prime with the python reference, the numpy vectorized kernels,
and the numba compiled kernels, checking along the way that all three
produce identical class partitions. Numba timings exclude compilation
(a small warm-up instance is run first).

Usage: python3 benchmarks/bench_pi0.py [--prime 7] [--limit 400000]
"""

import argparse
import time

from mcforge import zoo
from mcforge.groupoid import pi0_gauge, pi0_simplices
from mcforge.linalg import GF


def run(label, fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def bench(name, quotient, g, limit):
    rows = []
    ref = None
    for backend in ("python", "numpy", "numba"):
        result, dt = run(backend, quotient, g, limit=limit, backend=backend)
        if ref is None:
            ref = result.classes
        elif result.classes != ref:
            raise SystemExit(f"{name}: backend {backend} disagrees")
        rows.append((backend, dt, len(result), len(result.points)))
    print(f"\n{name}")
    base = rows[0][1]
    for backend, dt, classes, points in rows:
        speed = base / dt if dt > 0 else float("inf")
        print(f"  {backend:<8} {dt * 1000:9.1f} ms   x{speed:6.1f}   "
              f"{classes} classes / {points} points")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--prime", type=int, default=7)
    ap.add_argument("--limit", type=int, default=400000)
    args = ap.parse_args()
    p = args.prime

    # warm up the numba kernels on a tiny instance so JIT time stays out
    # of the measured runs
    tiny = zoo.gauged_heisenberg(GF(3))
    pi0_gauge(tiny, backend="numba")
    pi0_simplices(tiny, degree_cap=2, backend="numba")

    bench(f"gauge orbits, gauged_heisenberg over GF({p})",
          pi0_gauge, zoo.gauged_heisenberg(GF(p)), args.limit)
    bench(f"gauge orbits, gauge_chain over GF({p})",
          pi0_gauge, zoo.gauge_chain(GF(p)), args.limit)
    bench(f"1-simplex edges, gauged_heisenberg over GF({p})",
          pi0_simplices, zoo.gauged_heisenberg(GF(p)), args.limit)
    bench(f"1-simplex edges, gauge_chain over GF({p})",
          pi0_simplices, zoo.gauge_chain(GF(p)), args.limit)


if __name__ == "__main__":
    main()
