"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5]

Both flavours are imported directly, so the OPENQSL_NO_NUMBA flag does not
matter here. The first numba call (compilation or cache load) is excluded.
"""
import argparse
import timeit

import numpy as np

from openqsl import kernels
from openqsl.runner import random_model, random_state
from openqsl.scenario import preset_two_level


def cases(rng):
    sc = preset_two_level()
    k, _, a = sc.model().generator_arrays()
    yield "rk4 qubit, 5000 steps", "_rk4", (k, a, sc.rho0.astype(np.complex128), 1e-3, 5000, 10)
    for d in (4, 6):
        model = random_model(rng, d, couplings=2)
        k, _, a = model.generator_arrays()
        yield f"rk4 dim {d}, 1000 steps", "_rk4", (k, a, random_state(rng, d), 1e-3, 1000, 10)
    x = rng.exponential(size=100_000)
    y = x * rng.uniform(0.5, 2.0, size=x.size)
    yield "log mean, 1e5 pairs", "_log_mean", (x, y)
    yield "relative entropy, 1e5 pairs", "_relative_entropy", (x, y)
    p = rng.dirichlet(np.ones(64))
    h2 = rng.exponential(size=(64, 64))
    yield "SLD pair sum, d = 64", "_sld_fisher", (p, h2)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>8s}")
    for label, stem, call_args in cases(rng):
        fast = getattr(kernels, stem + "_loops")
        slow = getattr(kernels, stem + "_numpy")
        fast(*call_args)  # compile / load cache
        t_np = min(timeit.repeat(lambda: slow(*call_args), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeat))
        print(f"{label:32s} {1e3 * t_np:12.2f} {1e3 * t_nb:12.2f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
