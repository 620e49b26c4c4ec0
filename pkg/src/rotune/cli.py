"""Command-line experiment runner.

    rotune characterize --out results/char
    rotune tune --params results/char/params.yaml --out results/tune
    rotune project --out results/project
    rotune validate --n-samples 1000
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .characterization import (
    fit_sf,
    fit_sv,
    hot_temperature,
    min_safe_voltages,
    pll_for,
    run_sweep,
    validate_params,
)
from .config import Config, load_config
from .device import StressOutcome, ThermalState, generate_population, run_stress_test
from .errors import RotuneError
from .measurement import measure_slowest_ro, warm_up
from .tuner import tune

EXPERIMENT_COLUMNS = (
    "sample_id", "bin", "f_core_hz", "repeat", "v_before", "v_after",
    "static_ratio", "dynamic_ratio", "stress", "gap_to_oracle",
)
SUMMARY_COLUMNS = (
    "sample_id", "bin", "f_core_hz", "v_after_mean", "v_after_range",
    "static_ratio_mean", "dynamic_ratio_mean",
)
PROJECTION_COLUMNS = ("sample_id", "bin", "f_core_hz", "v_tuned")
VALIDATION_COLUMNS = ("sample_id", "bin", "f_core_hz", "v_after", "v_oracle", "stress", "gap")

_FREQ_RE = re.compile(r"^\s*([0-9.eE+-]+)\s*([kKmMgG]?)(?:[hH][zZ])?\s*$")
_SCALE = {"": 1.0, "k": 1e3, "m": 1e6, "g": 1e9}


def parse_freqs(text: str) -> list[float]:
    """'400MHz,500M' or '4e8,5e8' -> [4e8, 5e8]."""
    out = []
    for item in text.split(","):
        m = _FREQ_RE.match(item)
        if not m:
            raise argparse.ArgumentTypeError(f"bad frequency {item!r}")
        out.append(float(m.group(1)) * _SCALE[m.group(2).lower()])
    if any(f <= 0 for f in out):
        raise argparse.ArgumentTypeError("frequencies must be positive")
    return out


def fmt(x: float) -> str:
    return f"{x:.6g}"


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        w.writerows(rows)


def _write_meta(out: Path, command: str, cfg: Config, extra: dict | None = None) -> None:
    meta = {"command": command, "version": __version__, "seed": cfg.seed, "config": cfg.raw}
    meta.update(extra or {})
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")


def _out_dir(args, default: str) -> Path:
    out = Path(args.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(args, cfg: Config) -> int:
    return cfg.seed if args.seed is None else args.seed


def _population(cfg: Config, seed: int):
    return generate_population(cfg.population, seed)


def _rng(cfg: Config, *key):
    return np.random.default_rng(list(key)) if cfg.measurement.noise else None


def cmd_characterize(args, cfg: Config) -> int:
    seed = _seed(args, cfg)
    pop = _population(cfg, seed)
    sweep = run_sweep(pop, cfg.grid, cfg.measurement, virus_power=cfg.virus_power,
                      g_fail=cfg.g_fail, rng=_rng(cfg, seed, 0))
    s_f = fit_sf(sweep, cfg.margin_sf)
    s_v = fit_sv(sweep, cfg.margin_sv, cfg.sv_rule)
    out = _out_dir(args, "results/characterize")
    sweep.to_csv(out / "sweep.csv")
    fragment = {"tuning": {"s_f": float(fmt(s_f)), "s_v": float(fmt(s_v))}}
    (out / "params.yaml").write_text(
        "# fitted by rotune characterize\n" + yaml.safe_dump(fragment, sort_keys=True)
    )
    _write_meta(out, "characterize", cfg, {"seed": seed, "fitted": fragment["tuning"]})
    print(f"characterize: {len(pop)} samples, s_f={fmt(s_f)}, s_v={fmt(s_v)} V/Hz -> {out}")
    return 0


@dataclass(frozen=True)
class _TuneJob:
    index: int
    seed: int
    freqs: tuple[float, ...]
    repeats: int


def _tune_sample(job: _TuneJob, cfg: Config, sample):
    rows = []
    temp = hot_temperature(sample, cfg.measurement, cfg.virus_power)
    oracle = min_safe_voltages([sample], job.freqs, cfg.limits, [temp], cfg.g_fail)[0]
    for k, f in enumerate(job.freqs):
        for r in range(job.repeats):
            rep = tune(sample, pll_for(f, cfg.pll.osc_hz), cfg.tuning, cfg.measurement,
                       v_start=cfg.v_nominal, virus_power=cfg.virus_power,
                       activity=cfg.activity(sample), rng=_rng(cfg, job.seed, job.index, k, r))
            stress = run_stress_test(sample, rep.v_after, rep.f_core, rep.temperature, cfg.g_fail)
            s_ratio, d_ratio = rep.ratios
            rows.append((sample.id, sample.bin, rep.f_core, r, rep.v_before, rep.v_after,
                         s_ratio, d_ratio, stress, rep.v_after - oracle[k]))
    return rows


def _map_samples(fn, pop, workers: int):
    if workers <= 1:
        return [fn(i, s) for i, s in enumerate(pop)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(pop)), pop))


def _tune_one(i, sample, cfg, seed, freqs, repeats):
    return _tune_sample(_TuneJob(i, seed, tuple(freqs), repeats), cfg, sample)


def cmd_tune(args, cfg: Config) -> int:
    seed = _seed(args, cfg)
    freqs = args.freqs or list(cfg.freqs)
    repeats = args.repeats or cfg.repeats
    pop = _population(cfg, seed)
    work = partial(_tune_one, cfg=cfg, seed=seed, freqs=freqs, repeats=repeats)
    rows = [row for rows in _map_samples(work, pop, args.workers or cfg.workers) for row in rows]
    rows.sort(key=lambda r: (r[0], r[2], r[3]))

    out = _out_dir(args, "results/tune")
    _write_csv(out / "tune.csv", EXPERIMENT_COLUMNS, [
        (sid, b, fmt(f), r, fmt(vb), fmt(va), fmt(sr), fmt(dr), str(st), fmt(gap))
        for sid, b, f, r, vb, va, sr, dr, st, gap in rows
    ])
    groups: dict[tuple, list] = {}
    for row in rows:
        groups.setdefault((row[0], row[1], row[2]), []).append(row)
    _write_csv(out / "tune_summary.csv", SUMMARY_COLUMNS, [
        (sid, b, fmt(f),
         fmt(np.mean([g[5] for g in grp])),
         fmt(max(g[5] for g in grp) - min(g[5] for g in grp)),
         fmt(np.mean([g[6] for g in grp])),
         fmt(np.mean([g[7] for g in grp])))
        for (sid, b, f), grp in groups.items()
    ])
    _write_meta(out, "tune", cfg, {"seed": seed, "freqs": freqs, "repeats": repeats})

    bad = [r for r in rows if r[8] is not StressOutcome.SUCCESS]
    for f in freqs:
        dyn = [r[7] for r in rows if r[2] == f]
        red = [(r[4] - r[5]) * 1e3 for r in rows if r[2] == f]
        print(f"tune: {fmt(f / 1e6)} MHz  reduction {min(red):.0f}-{max(red):.0f} mV  "
              f"dynamic ratio {min(dyn):.3f}-{max(dyn):.3f}")
    for r in bad:
        print(f"tune: {r[0]} at {fmt(r[2])} Hz, {fmt(r[5])} V -> {r[8]}", file=sys.stderr)
    return 1 if bad else 0


def cmd_project(args, cfg: Config) -> int:
    seed = _seed(args, cfg)
    pop = _population(cfg, seed)
    speed = []
    for s in pop:
        hot = warm_up(s, ThermalState(s.thermal.t_ambient), cfg.measurement, cfg.virus_power)
        speed.append(measure_slowest_ro(s, cfg.v_nominal, hot, cfg.measurement))
    picks = [pop[int(np.argmax(speed))], pop[int(np.argmin(speed))]]
    start, stop, step = cfg.projection
    n = int(round((stop - start) / step))
    freqs = [start + i * step for i in range(n + 1)]
    rows = []
    for s in picks:
        for f in freqs:
            rep = tune(s, pll_for(f, cfg.pll.osc_hz), cfg.tuning, cfg.measurement,
                       v_start=cfg.v_nominal, virus_power=cfg.virus_power)
            if 0.6 - 1e-9 <= rep.v_after <= 1.0 + 1e-9:
                rows.append((s.id, s.bin, fmt(f), fmt(rep.v_after)))
    out = _out_dir(args, "results/project")
    _write_csv(out / "projection.csv", PROJECTION_COLUMNS, rows)
    _write_meta(out, "project", cfg, {"seed": seed, "fastest": picks[0].id, "slowest": picks[1].id})
    print(f"project: fastest {picks[0].id}, slowest {picks[1].id}, {len(rows)} rows -> {out}")
    return 0


def cmd_validate(args, cfg: Config) -> int:
    seed = _seed(args, cfg)
    n = args.n_samples or cfg.validate_samples
    freqs = args.freqs or list(cfg.freqs)
    pop = generate_population(cfg.population_for(n), seed)
    report = validate_params(cfg.tuning, pop, freqs, cfg.measurement,
                             virus_power=cfg.virus_power, g_fail=cfg.g_fail,
                             osc_hz=cfg.pll.osc_hz, workers=args.workers or cfg.workers)
    pct = report.gap_percentiles((50, 95, 100))
    within = float(np.mean(report.gaps() <= 0.060 + 1e-9)) if report.gaps().size else float("nan")
    print(f"validate: samples={n} tunes={len(report.rows)} failures={len(report.failures)} "
          f"gap_p50={pct[50] * 1e3:.0f}mV gap_p95={pct[95] * 1e3:.0f}mV "
          f"gap_max={pct[100] * 1e3:.0f}mV within_60mV={within:.4f}")
    if args.out:
        out = _out_dir(args, "")
        _write_csv(out / "validate.csv", VALIDATION_COLUMNS, [
            (r.sample_id, r.bin, fmt(r.f_core), fmt(r.v_after), fmt(r.v_oracle), str(r.outcome),
             fmt(r.gap)) for r in report.rows
        ])
        _write_meta(out, "validate", cfg, {"seed": seed, "n_samples": n, "freqs": freqs})
    if report.passed:
        return 0
    by_id = {s.id: s for s in pop}
    for r in report.failures:
        s = by_id[r.sample_id]
        print(f"validate: {r.sample_id} ({r.bin}) {fmt(r.f_core / 1e6)} MHz at {fmt(r.v_after)} V "
              f"-> {r.outcome}; k_p={fmt(s.k_p)} s_real={fmt(s.s_real)} "
              f"k_ro={','.join(fmt(ro.k_ro) for ro in s.ros)}", file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rotune", description="RO-based voltage tuning experiments")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML config (default: $ROTUNE_CONFIG or built-in)")
        sp.add_argument("--seed", type=int, help="population seed (default: config seed)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--freqs", type=parse_freqs, help="comma list, e.g. 400MHz,500MHz")
        sp.add_argument("--workers", type=int, help="worker processes")
        sp.add_argument("--params", action="append", default=[],
                        help="fitted-parameter fragment to merge (repeatable)")
        sp.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override any config key, e.g. tuning.s_f=1.7")
        return sp

    common(sub.add_parser("characterize", help="sweep, stress-test and fit S_f / S_v"))
    common(sub.add_parser("tune", help="tune the population and report power ratios")).add_argument(
        "--repeats", type=int, help="tuning runs per sample and frequency")
    common(sub.add_parser("project", help="safe V/F projection for fastest and slowest die"))
    common(sub.add_parser("validate", help="Monte Carlo safety gate")).add_argument(
        "--n-samples", type=int, help="number of fresh dice")
    return p


COMMANDS = {
    "characterize": cmd_characterize,
    "tune": cmd_tune,
    "project": cmd_project,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.params, args.overrides)
        if args.workers is not None and args.workers < 1:
            raise RotuneError("--workers must be >= 1")
        return COMMANDS[args.command](args, cfg)
    except RotuneError as exc:
        print(f"rotune {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
