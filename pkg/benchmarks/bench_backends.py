"""Wall-clock comparison of the numba kernels and the pure-numpy path.

    python benchmarks/bench_backends.py --steps 2000

The numpy path is timed on fewer steps and scaled, roughly 300-1500x slower.
"""
import argparse
import time

import numpy as np

from essrk import integrate
from essrk.experiments import get_preset


def timed(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--preset", default="paper-tokamak")
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--numpy-steps", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    preset = get_preset(args.preset)
    print(f"preset {preset.name}, h={preset.h}")
    print(f"{'method':<8} {'numba us/step':>14} {'numpy us/step':>14} {'speedup':>9} {'max |diff|':>11}")
    for method in ("essrk2", "essrk4", "essrk6", "rk4"):
        run = lambda n, b: integrate(preset.initial, method, preset.h, n, preset.system, backend=b)
        t_compile = time.perf_counter()
        run(1, "numba")
        t_compile = time.perf_counter() - t_compile
        t_nb, tr_nb = timed(lambda: run(args.steps, "numba"), args.repeat)
        t_np, tr_np = timed(lambda: run(args.numpy_steps, "numpy"), 1)
        per_nb = t_nb / args.steps * 1e6
        per_np = t_np / args.numpy_steps * 1e6
        diff = np.max(np.abs(tr_nb.q[: args.numpy_steps + 1] - tr_np.q))
        print(f"{method:<8} {per_nb:14.2f} {per_np:14.1f} {per_np / per_nb:9.0f} {diff:11.1e}   (first call {t_compile:.1f}s)")


if __name__ == "__main__":
    main()
