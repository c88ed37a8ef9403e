"""Throughput comparison of the compiled and numpy simulation backends.

Run with ``python benchmarks/bench_kernels.py [--steps N] [--repeat R]``.
Both backends consume the same pre-drawn uniforms and must return identical
output; the benchmark re-checks that on every measurement.
"""

import argparse
import time

import numpy as np

from mrwlab import _kernels
from mrwlab.core import random_lattice, simple_rw


def time_backend(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_model(name, spec, n_steps, repeat):
    tables = _kernels.SamplingTables.from_spec(spec)
    u = np.random.default_rng(0).random((n_steps, 2))
    rows = []
    baseline = None
    for backend in sorted(_kernels.available_backends()):
        dt, (states, incr) = time_backend(
            lambda b=backend: _kernels.simulate_steps(tables, 0, u, backend=b), repeat
        )
        if baseline is None:
            baseline = (states, incr)
        else:
            assert np.array_equal(baseline[0], states)
            assert np.array_equal(baseline[1], incr)
        rows.append((backend, dt, n_steps / dt / 1e6))

    sums = np.cumsum(baseline[1])
    for backend in sorted(_kernels.available_backends()):
        dt, epochs = time_backend(
            lambda b=backend: _kernels.strict_ascending_epochs(sums, backend=b), repeat
        )
        rows.append((f"{backend} (epoch scan)", dt, n_steps / dt / 1e6))

    print(f"\n{name}: {n_steps} steps, best of {repeat}")
    for backend, dt, rate in rows:
        print(f"  {backend:<22} {dt * 1e3:9.2f} ms   {rate:8.1f} Msteps/s")
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=2_000_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    print("backends available:", ", ".join(sorted(_kernels.available_backends())))
    print("default backend:", _kernels.backend_name())

    bench_model("simple_rw(0.6)", simple_rw(0.6), args.steps, args.repeat)
    bench_model("random_lattice(m=6)", random_lattice(seed=1, m=6), args.steps, args.repeat)


if __name__ == "__main__":
    main()
