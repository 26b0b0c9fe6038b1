"""Compare the numba and numpy propagation backends.

    python3 benchmarks/bench_kernels.py [--traj 32] [--repeat 5]

Both backends receive the same schedule, noise and amplitude errors; the
script checks they agree and prints the time per trajectory step.
"""
import argparse
import math
import time

import numpy as np

from rbdd import _kernels
from rbdd.clifford import sample_rb_sequence
from rbdd.engine import DEFAULT_DT
from rbdd.noise import OUParams, ou_samples
from rbdd.pulses import compile_sequence


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--traj", type=int, default=32)
    ap.add_argument("--m", type=int, default=16)
    ap.add_argument("--scheme", default="bare_bb1")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(1)
    sched = compile_sequence(sample_rb_sequence(args.m, rng), args.scheme)
    start, dur, amp, phase = sched.arrays()
    steps = int(math.ceil(sched.duration / DEFAULT_DT))
    rngs = [np.random.default_rng(i) for i in range(args.traj)]
    noise = ou_samples(OUParams(4600.0, 346e-6), steps, DEFAULT_DT, rngs)
    eps = rng.normal(0.0, 0.05, args.traj)
    print(f"{args.scheme}, m={args.m}: {len(dur)} segments, {steps} steps x {args.traj} trajectories")

    results = {}
    for backend in ("numba", "numpy"):
        if backend == "numba" and not _kernels.HAVE_NUMBA:
            print("numba not installed, skipping")
            continue

        def call(b=backend):
            return _kernels.propagate(start, dur, amp, phase, noise, eps, DEFAULT_DT, backend=b)

        call()  # compile / warm up
        t, out = best_of(call, args.repeat)
        results[backend] = out
        print(f"{backend:>6}: {t * 1e3:9.2f} ms   {t / (steps * args.traj) * 1e9:7.1f} ns/step")

        def ou(b=backend):
            xi = np.random.default_rng(0).standard_normal((args.traj, steps))
            return _kernels.ou_filter(xi, 0.9997, 0.0245, 1.0, backend=b)

        t, _ = best_of(ou, args.repeat)
        print(f"{'':>6}  OU filter incl. normals: {t / (steps * args.traj) * 1e9:7.1f} ns/sample")

    if len(results) == 2:
        diff = np.max(np.abs(results["numba"] - results["numpy"]))
        print(f"max |numba - numpy| = {diff:.2e}")


if __name__ == "__main__":
    main()
