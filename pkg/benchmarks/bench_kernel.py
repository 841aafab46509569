"""Compare the compiled and numpy midpoint kernels.

    python3 benchmarks/bench_kernel.py [--repeat 5]

Times the raw step product, the per-interval products used for sampled
trajectories, and one end-to-end Lyapunov run on the two-frequency field
(kernels swapped in place).  Prints best-of-repeat wall times in ms.
"""

import argparse
import timeit

import numpy as np

from twolevel import _backend
from twolevel.analysis import lyapunov_estimate
from twolevel.fields import FieldSpec


def best(fn, repeat):
    return 1e3 * min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = _backend.available_backends()
    spec = FieldSpec.golden_quasiperiodic(1.0, 1.5, 3.0)
    table = spec.table
    cases = {
        "step_product n=1e3": lambda k: k.step_product(*table, 0.0, 1e-3, 1000),
        "step_product n=1e5": lambda k: k.step_product(*table, 0.0, 1e-5, 100_000),
        "step_product n=1e6": lambda k: k.step_product(*table, 0.0, 1e-6, 1_000_000),
        "interval_products 1e3x64": lambda k: k.interval_products(*table, 0.0, 0.01, 64, 1000, False),
    }
    names = sorted(backends)
    print(f"{'case':28s}" + "".join(f"{n:>12s}" for n in names) + "     ratio")
    for label, fn in cases.items():
        t = {n: best(lambda: fn(backends[n]), args.repeat) for n in names}
        ratio = t["python"] / t["cython"] if "cython" in t else float("nan")
        print(f"{label:28s}" + "".join(f"{t[n]:12.2f}" for n in names) + f"{ratio:10.2f}")

    # end to end, swapping the kernels seen by the propagator
    saved = _backend.step_product, _backend.interval_products
    t = {}
    for n in names:
        _backend.step_product = backends[n].step_product
        _backend.interval_products = backends[n].interval_products
        t[n] = best(lambda: lyapunov_estimate(spec, np.array([0.0, 0.6, 0.8]), horizon=1000 * spec.reference_period), max(1, args.repeat // 2))
    _backend.step_product, _backend.interval_products = saved
    ratio = t["python"] / t["cython"] if "cython" in t else float("nan")
    print(f"{'lyapunov QP 1e3 periods':28s}" + "".join(f"{t[n]:12.2f}" for n in names) + f"{ratio:10.2f}")


if __name__ == "__main__":
    main()
