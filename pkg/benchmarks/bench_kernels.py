"""Time the compiled and pure-Python kernels on a Monte Carlo sized workload.

    python benchmarks/bench_kernels.py --samples 1000 --repeat 3
"""

import argparse
import timeit

import numpy as np

from rotune import kernels
from rotune.characterization import _kernel_inputs
from rotune.device import PopulationSpec, generate_population
from rotune.tuner import SupplyLimits


def workload(n_samples: int, seed: int):
    pop = generate_population(PopulationSpec.split(n_samples), seed)
    volts = SupplyLimits().grid()
    freqs = np.arange(100e6, 700e6, 20e6)
    temps = np.full(len(pop), 65.0)
    inputs = _kernel_inputs(pop)
    s_real = np.array([s.s_real for s in pop])
    rng = np.random.default_rng(seed)
    ro = rng.uniform(1e6, 770e6, 20 * n_samples)
    starts = rng.integers(0, 65536, ro.size)
    return inputs, volts, temps, s_real, freqs, ro, starts


def bench(mod, data, repeat: int) -> dict[str, float]:
    inputs, volts, temps, s_real, freqs, ro, starts = data
    slowest = mod.slowest_ro_grid(voltages=volts, temps=temps, **inputs)
    codes = mod.stress_grid(slowest, s_real, freqs, 0.02)
    calls = {
        "slowest_ro_grid": lambda: mod.slowest_ro_grid(voltages=volts, temps=temps, **inputs),
        "stress_grid": lambda: mod.stress_grid(slowest, s_real, freqs, 0.02),
        "min_safe_index": lambda: mod.min_safe_index(codes),
        "count_windows": lambda: mod.count_windows(ro, 85e-6, starts),
    }
    return {name: min(timeit.repeat(fn, number=1, repeat=repeat)) for name, fn in calls.items()}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    data = workload(args.samples, args.seed)
    names = kernels.available_backends()
    results = {name: bench(kernels.get_backend(name), data, args.repeat) for name in names}
    print(f"{args.samples} samples, default backend: {kernels.BACKEND}")
    print(f"{'kernel':<18}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for kernel in results[names[0]]:
        row = f"{kernel:<18}" + "".join(f"{results[n][kernel] * 1e3:>10.2f}ms" for n in names)
        if len(names) > 1:
            row += f"{results['python'][kernel] / results['cython'][kernel]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
