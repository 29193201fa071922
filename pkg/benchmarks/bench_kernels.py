"""Compiled kernel vs pure-Python fallback on representative workloads.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat 3]``. Prints the best
wall time per backend, the speedup, and whether the outputs are bitwise equal.
"""
import argparse
import time

import numpy as np

from henonpucci import kernels
from henonpucci.ivp import IntegratorConfig, ShootingInput, integrate_ivp
from henonpucci.phase import PhaseConfig, integrate_phase
from henonpucci.pucci import ProblemParams

C1 = ProblemParams(1.0, 1.5, 4, 4.0, 0.0)


def radial(backend):
    prof = integrate_ivp(ShootingInput(C1, 1.0, 1.0), IntegratorConfig(backend=backend))
    return np.column_stack([prof.r, prof.u, prof.uprime])


def radial_long(backend):
    prof = integrate_ivp(ShootingInput(C1.replace(p=6.0), 1.0, 1.0),
                         IntegratorConfig(backend=backend, r_max=1e6))
    return np.column_stack([prof.r, prof.u, prof.uprime])


def phase(backend):
    q = C1.replace(p=5.0)
    tr = integrate_phase(q, q.alpha, 1.1 * 2.0 / 9.0, 0.0, 200.0, PhaseConfig(backend=backend),
                         section=q.alpha)
    return np.column_stack([tr.t, tr.x, tr.z])


WORKLOADS = {"radial shot to first zero": radial, "radial shot to r=1e6": radial_long,
             "phase orbit around a center": phase}


def best_time(fn, backend, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(backend)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not kernels.compiled_available():
        print("compiled kernel not built; only the fallback can run")
        return 1
    print(f"{'workload':32s} {'compiled [s]':>13s} {'python [s]':>11s} {'speedup':>8s}  bitwise")
    for name, fn in WORKLOADS.items():
        tc, oc = best_time(fn, "compiled", args.repeat)
        tp, op = best_time(fn, "python", max(1, args.repeat // 3))
        same = oc.shape == op.shape and np.array_equal(oc, op)
        print(f"{name:32s} {tc:13.4f} {tp:11.4f} {tp / tc:8.1f}  {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
