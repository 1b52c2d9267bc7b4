"""Time the compiled kernels against the pure-python fallback.

Both backends are imported directly (bypassing the env-var dispatch) so one
process measures both. Workloads mirror the hot paths: long half-plane runs
with the Riccati rider, octagon flow with domain reduction, and the
half-grid Riccati sampler. Best-of-N wall time, single thread.

Run:  python benchmarks/bench_kernels.py [repeats]
"""

import sys
import time

import numpy as np

from rank1thermo._kernels import _fallback
from rank1thermo.geometry import OctagonHyperbolic

try:
    from rank1thermo._kernels import _core
except ImportError:
    _core = None


def bench(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        dt = time.perf_counter() - t0
        if dt < best:
            best = dt
    return best


def workloads():
    _, oct_params = OctagonHyperbolic(1.0).kernel_spec()
    out = _fallback.flow_path(0, [1.0], 0.0, 1.0, 0.3, 20000, 1e-3)
    Khalf = np.empty(2 * 20000 + 1)
    Khalf[0::2] = out[3]
    Khalf[1::2] = out[4]
    return [
        ("half-plane flow + u, 50k steps",
         lambda m: m.flow_path(0, np.array([1.0]), 0.0, 1.0, 0.3,
                               50000, 1e-3, with_u=1)),
        ("octagon flow + reduce, 30k steps",
         lambda m: m.flow_path(2, oct_params, 0.1, 0.0, 1.08539,
                               30000, 1e-3, with_u=1)),
        ("riccati sampler, 20k steps",
         lambda m: m.riccati_from_samples(Khalf, 0.0, 1e-3)),
    ]


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 5
    rows = []
    for name, work in workloads():
        t_pure = bench(lambda: work(_fallback), repeats)
        if _core is not None:
            t_comp = bench(lambda: work(_core), repeats)
            rows.append((name, t_pure, t_comp, t_pure / t_comp))
        else:
            rows.append((name, t_pure, float("nan"), float("nan")))

    print("%-36s %10s %10s %8s" % ("workload", "pure [s]", "comp [s]", "speedup"))
    for name, tp, tc, sp in rows:
        print("%-36s %10.4f %10.4f %7.1fx" % (name, tp, tc, sp))
    if _core is None:
        print("compiled kernel not built; showing fallback only")


if __name__ == "__main__":
    main()
