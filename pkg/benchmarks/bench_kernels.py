"""Time the numba and numpy kernels on the synthetic regression and logistic shapes.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 200]

Compile time is excluded: each numba kernel is called once before timing.
An end-to-end SGD run under each backend is timed in a subprocess, since
the backend is fixed at import from ``ESSGD_BACKEND``.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from essgd import kernels

END_TO_END = """
import time, numpy as np
from essgd import ingest, optimizer, problems, sampling
ds = ingest.make_synthetic_gaussian(1000, 50, "linear", rng=0)
p = problems.make_regularized_linreg(ds.dense(), ds.labels, 0.1)
src = sampling.SampledGradient(p, sampling.uniform_with_replacement(1000, 10))
gamma = optimizer.sqrt_lak_stepsize(src.es_constants(), p.l_global, 5000, 0.1)
run = lambda: optimizer.run_sgd(p, src, optimizer.constant_plan(gamma), np.zeros(50), 5000, snapshot_every=5, seed=0)
run()
t = time.perf_counter(); run(); print(time.perf_counter() - t)
"""


def cases(rng):
    n, d = 1000, 50
    a = rng.standard_normal((n, d))
    y = rng.standard_normal(n)
    x = rng.standard_normal(d) * 0.1
    row_sq = np.einsum("ij,ij->i", a, a)
    idx = rng.integers(0, n, 10).astype(np.int64)
    w = np.full(10, n / 10.0)
    l_comp = 2 * row_sq + 0.2
    return {
        "linreg_minibatch_grad (tau=10)": ("linreg_minibatch_grad", (a, y, x, idx, w, 0.1, n)),
        "logreg_minibatch_grad (tau=10)": ("logreg_minibatch_grad", (a, x, idx, w, 0.5, n)),
        "linreg_snapshot (n=1000, d=50)": ("linreg_snapshot", (a, y, row_sq, x, 0.1)),
        "logreg_snapshot (n=1000, d=50)": ("logreg_snapshot", (a, row_sq, x, 0.5)),
        "linreg_component_gd (20 iters)": ("linreg_component_gd", (a, y, 0.1, l_comp, 20)),
    }


def end_to_end(backend):
    env = dict(os.environ, ESSGD_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<34}{'numpy (us)':>12}{'numba (us)':>12}{'speedup':>10}")
    for label, (name, call_args) in cases(rng).items():
        times = {}
        for backend, ns in (("numpy", kernels.numpy_kernels), ("numba", kernels.numba_kernels)):
            fn = getattr(ns, name)
            fn(*call_args)
            times[backend] = min(timeit.repeat(lambda: fn(*call_args), number=1, repeat=args.repeat)) * 1e6
        print(f"{label:<34}{times['numpy']:>12.1f}{times['numba']:>12.1f}{times['numpy'] / times['numba']:>9.2f}x")
    print()
    for backend in ("numpy", "numba"):
        print(f"end-to-end regression run (K=5000, tau=10), {backend}: {end_to_end(backend):.3f}s")


if __name__ == "__main__":
    main()
