"""Compare the compiled kernel backend against the numpy fallback.

Times each kernel at several vector sizes, then an end-to-end quadratic
escape race with each backend. Run from the repo root:

    python benchmarks/bench_kernels.py
"""

import argparse
import timeit

import numpy as np

from adine import backend
from adine.core import StopCriterion, StopKind
from adine.harness import ExperimentConfig, run_experiment
from adine.optimizers import FixedMomentumConfig, Variant


def _bench(fn, number):
    best = min(timeit.repeat(fn, repeat=5, number=number))
    return best / number


def kernel_cases(n, rng):
    x = rng.uniform(-1.0, 1.0, n)
    y = rng.uniform(-1.0, 1.0, n)
    g = rng.uniform(-1.0, 1.0, n)
    lam = rng.uniform(0.99, 1.01, n)
    return {
        "axpy": lambda k: k.axpy(0.9, x, y),
        "nrm2": lambda k: k.nrm2(x),
        "momentum_apply": lambda k: k.momentum_apply(x, y, g, 0.9, 0.01),
        "quad_f_grad": lambda k: k.quad_f_grad(lam, x),
        "cubic_f_grad": lambda k: k.cubic_f_grad(lam, x),
    }


def race_time(backend_name, n):
    backend.set_backend(backend_name)
    cfg = ExperimentConfig(
        id="bench",
        seed=0,
        target={"kind": "quadratic", "n": n},
        optimizer=FixedMomentumConfig(eta=0.001, m=0.95, variant=Variant.CM),
        stop=StopCriterion(StopKind.LOSS_BELOW, -8.0),
        max_iters=100000,
    )
    return _bench(lambda: run_experiment(cfg), number=3)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 100000])
    args = parser.parse_args()

    if not backend.HAS_COMPILED:
        print("compiled backend not built; nothing to compare")
        return

    from adine import _kernels_c, _kernels_py

    rng = np.random.default_rng(0)
    print(f"{'kernel':<16} {'n':>8} {'numpy':>12} {'compiled':>12} {'speedup':>8}")
    for n in args.sizes:
        cases = kernel_cases(n, rng)
        number = max(10, min(20000, 2_000_000 // n))
        for name, call in cases.items():
            t_py = _bench(lambda: call(_kernels_py), number)
            t_c = _bench(lambda: call(_kernels_c), number)
            print(f"{name:<16} {n:>8} {t_py*1e6:>10.2f}us {t_c*1e6:>10.2f}us {t_py/t_c:>7.2f}x")

    print("\nend-to-end quadratic escape race (n=1000, CM m=0.95):")
    try:
        t_py = race_time("python", 1000)
        t_c = race_time("compiled", 1000)
        print(f"{'race':<16} {1000:>8} {t_py*1e3:>10.2f}ms {t_c*1e3:>10.2f}ms {t_py/t_c:>7.2f}x")
    finally:
        backend.set_backend("compiled" if backend.HAS_COMPILED else "python")


if __name__ == "__main__":
    main()
