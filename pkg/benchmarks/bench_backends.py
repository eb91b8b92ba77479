#!/usr/bin/env python3
"""Compare the compiled and pure-Python evolution kernels on one scenario.

Usage: python benchmarks/bench_backends.py [n_paths]
"""

import sys
import time

import numpy as np

from levycoupling.coupling import _backend, _fallback, SimConfig, \
    simulate_coupling
from levycoupling.scenarios import catalog_entry


def run(kernel_name, entry, cfg, n_paths):
    from levycoupling import coupling
    saved = coupling._backend.evolve_path
    if kernel_name == "python":
        coupling._backend.evolve_path = _fallback.evolve_path
    t0 = time.perf_counter()
    total_coupled = 0
    try:
        for k in range(n_paths):
            p = simulate_coupling(entry.scenario, cfg, k)
            total_coupled += p.coupling_time is not None
    finally:
        coupling._backend.evolve_path = saved
    dt = time.perf_counter() - t0
    return dt, total_coupled


def main():
    n_paths = int(sys.argv[1]) if len(sys.argv) > 1 else 200
    entry = catalog_entry("piecewise_1d")
    cfg = SimConfig(kappa=entry.kappa, eps=entry.eps, h=entry.h,
                    t_max=entry.t_max, n_paths=n_paths, master_seed=7,
                    record_every=entry.record_every)
    names = ["python"]
    if _backend.BACKEND == "compiled":
        names.append("compiled")
    else:
        print("compiled kernel not available; timing python only")
    results = {}
    for name in names:
        dt, coupled = run(name, entry, cfg, n_paths)
        results[name] = dt
        print(f"{name:>9}: {n_paths} paths in {dt:8.3f}s "
              f"({1e3 * dt / n_paths:7.3f} ms/path, {coupled} coupled)")
    if len(results) == 2:
        print(f"speedup: {results['python'] / results['compiled']:.1f}x")


if __name__ == "__main__":
    main()
