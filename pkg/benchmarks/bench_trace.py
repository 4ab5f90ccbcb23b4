"""Ray-tracing throughput: numba kernels against the numpy fallback.

    python3 benchmarks/bench_trace.py [--rays 20000] [--repeat 3]

Both backends trace the same rays against the bundled fixture scene and a
random triangle soup; the numba path is warmed up first so JIT time is
excluded.  Results are checked to agree before timings are reported.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from en17037._backend import HAS_NUMBA, use_backend
from en17037.fixtures import fixture_scene
from en17037.geometry import AccelStructure
from en17037.sampling import icosphere


def _soup(rng, n, size=20.0):
    centres = rng.uniform(-size, size, (n, 1, 3))
    return centres + rng.normal(scale=1.5, size=(n, 3, 3))


def _scenes(rng):
    scene = fixture_scene().to_scene()
    yield "fixture", scene.accel, np.array([1.8, 3.0, 8.2])
    soup = _soup(rng, 5000)
    yield "soup-5000", AccelStructure(soup, np.zeros(len(soup), dtype=np.int64)), np.zeros(3)


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rays", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    dirs = icosphere(6).directions
    dirs = dirs[rng.choice(len(dirs), size=min(args.rays, len(dirs)), replace=False)]

    print(f"{'scene':<12}{'query':<10}{'backend':<8}{'rays/s':>14}{'speed-up':>10}")
    for name, accel, origin in _scenes(rng):
        origins = np.broadcast_to(origin, dirs.shape).copy()
        far = 1e4
        queries = {
            "nearest": lambda: accel.nearest(origins, dirs, far)[:2],
            "all_hits": lambda: accel.all_hits(origins, dirs, far),
        }
        for qname, fn in queries.items():
            with use_backend("numba"):
                fn()  # compile
                t_nb, out_nb = _time(fn, args.repeat)
            with use_backend("numpy"):
                t_np, out_np = _time(fn, args.repeat)
            if qname == "nearest":
                assert all(np.array_equal(a, b) for a, b in zip(out_nb, out_np))
            else:
                assert all(np.array_equal(a[1], b[1]) for a, b in zip(out_nb, out_np))
            n = len(dirs)
            print(f"{name:<12}{qname:<10}{'numpy':<8}{n / t_np:>14,.0f}{'':>10}")
            print(f"{'':<12}{'':<10}{'numba':<8}{n / t_nb:>14,.0f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
