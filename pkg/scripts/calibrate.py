"""Pick the inverter base delay d0 for the default configuration.

For each candidate d0 the default 9-die population is characterised, the
fitted parameters are used to tune it at 500 and 400 MHz, and a fresh
Monte Carlo population is checked for safety. Prints one line per
candidate; the chosen constants go into ``default_config.yaml``.

    python scripts/calibrate.py 3.8e-11 3.9e-11 4.0e-11
"""

import argparse

import numpy as np

from rotune.characterization import (
    SweepGrid,
    fit_sf,
    fit_sv,
    pll_for,
    run_sweep,
    validate_params,
)
from rotune.device import DelayParams, PopulationSpec, generate_population
from rotune.measurement import MeasurementConfig
from rotune.tuner import TuningParams, tune


def evaluate(d0, seed, mc_seed, mc_n):
    spec = PopulationSpec(delay=DelayParams(d0=d0))
    pop = generate_population(spec, seed)
    mcfg = MeasurementConfig()
    sweep = run_sweep(pop, SweepGrid.default(), mcfg)
    tp = TuningParams(s_f=fit_sf(sweep), s_v=fit_sv(sweep))
    v = {f: np.array([tune(s, pll_for(f), tp, mcfg).v_after for s in pop]) for f in (400e6, 500e6)}
    red = 1.0 - v[500e6]
    dyn = {f: v[f] ** 2 for f in v}
    mc = generate_population(PopulationSpec.split(mc_n, delay=DelayParams(d0=d0)), mc_seed)
    rep = validate_params(tp, mc, (400e6, 500e6), mcfg)
    gap95 = rep.gap_percentiles((95,))[95]
    print(
        f"d0={d0:.3e} s_f={tp.s_f:.5f} s_v={tp.s_v:.5e} "
        f"red500=[{red.min() * 1e3:.0f},{red.max() * 1e3:.0f}] mV "
        f"dyn500=[{dyn[500e6].min():.3f},{dyn[500e6].max():.3f}] "
        f"std400/500={dyn[400e6].std() / dyn[500e6].std():.3f} "
        f"mc_fail={len(rep.failures)} gap95={gap95 * 1e3:.0f} mV"
    )
    return tp


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("d0", nargs="+", type=float)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--mc-seed", type=int, default=7)
    ap.add_argument("--mc-n", type=int, default=1000)
    args = ap.parse_args()
    for d0 in args.d0:
        evaluate(d0, args.seed, args.mc_seed, args.mc_n)


if __name__ == "__main__":
    main()
