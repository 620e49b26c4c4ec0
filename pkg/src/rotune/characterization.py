"""Derive S_f and S_v from stress-tested voltage/frequency sweeps.

Also home of the brute-force oracle, :func:`min_safe_voltage`, which reads
the hidden critical path directly and is what the tuner is judged against.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial

import numpy as np

from . import kernels
from .device import (
    DEFAULT_G_FAIL,
    ChipSample,
    StressOutcome,
    ThermalState,
    check_supply_range,
    run_stress_test,
)
from .errors import DataError, InfeasibleError
from .measurement import MeasurementConfig, measure_slowest_ro, warm_up
from .tuner import DEFAULT_VIRUS_POWER, PllConfig, SupplyLimits, TuningParams, tune

SWEEP_COLUMNS = ("sample_id", "voltage_v", "freq_hz", "ro_hz", "outcome")


@dataclass(frozen=True)
class SweepGrid:
    voltages: tuple[float, ...]
    frequencies: tuple[float, ...]

    def __post_init__(self):
        if not self.voltages or not self.frequencies:
            raise ValueError("sweep grid needs at least one voltage and one frequency")
        if list(self.voltages) != sorted(self.voltages):
            raise ValueError("sweep voltages must be ascending")
        if list(self.frequencies) != sorted(self.frequencies):
            raise ValueError("sweep frequencies must be ascending")
        for v in self.voltages:
            check_supply_range(v)

    @classmethod
    def default(cls, limits: SupplyLimits | None = None) -> "SweepGrid":
        limits = limits or SupplyLimits()
        volts = [v for v in limits.grid() if v <= 1.0 + 1e-9]
        return cls(tuple(float(v) for v in volts), (100e6, 200e6, 300e6, 400e6, 500e6))


@dataclass(frozen=True)
class SweepResult:
    sample_ids: tuple[str, ...]
    voltages: np.ndarray
    frequencies: np.ndarray
    outcomes: np.ndarray  # int8 (samples, voltages, frequencies), StressOutcome codes
    ro_hz: np.ndarray  # measured slowest RO (samples, voltages)

    def outcome(self, i: int, j: int, k: int) -> StressOutcome:
        return StressOutcome(int(self.outcomes[i, j, k]))

    def boundary_indices(self) -> np.ndarray:
        """Per (sample, frequency) index of the lowest all-success voltage, -1 if none."""
        return kernels.min_safe_index(self.outcomes)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_COLUMNS)
            for i, sid in enumerate(self.sample_ids):
                for j, v in enumerate(self.voltages):
                    for k, f in enumerate(self.frequencies):
                        w.writerow(
                            [sid, f"{v:.6g}", f"{f:.6g}", f"{self.ro_hz[i, j]:.6g}",
                             str(self.outcome(i, j, k))]
                        )

    @classmethod
    def from_csv(cls, path) -> "SweepResult":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise DataError(f"{path}: empty sweep")
        ids = list(dict.fromkeys(r["sample_id"] for r in rows))
        volts = sorted({float(r["voltage_v"]) for r in rows})
        freqs = sorted({float(r["freq_hz"]) for r in rows})
        vi = {v: j for j, v in enumerate(volts)}
        fi = {f: k for k, f in enumerate(freqs)}
        si = {s: i for i, s in enumerate(ids)}
        outcomes = np.zeros((len(ids), len(volts), len(freqs)), dtype=np.int8)
        ro = np.zeros((len(ids), len(volts)))
        names = {str(o): o for o in StressOutcome}
        for r in rows:
            i, j, k = si[r["sample_id"]], vi[float(r["voltage_v"])], fi[float(r["freq_hz"])]
            outcomes[i, j, k] = names[r["outcome"]]
            ro[i, j] = float(r["ro_hz"])
        return cls(tuple(ids), np.array(volts), np.array(freqs), outcomes, ro)


def hot_temperature(
    sample: ChipSample, mcfg: MeasurementConfig, virus_power: float = DEFAULT_VIRUS_POWER
) -> float:
    """Die temperature after the warm-up phase, starting from ambient."""
    return warm_up(sample, ThermalState(sample.thermal.t_ambient), mcfg, virus_power).temperature


def _kernel_inputs(samples: list[ChipSample]):
    scale = np.array([[s.delay.d0 * s.k_p * ro.k_ro for ro in s.ros] for s in samples])
    n_inv = np.array([[float(ro.n_inverters) for ro in s.ros] for s in samples])
    return dict(
        scale=scale,
        n_inv=n_inv,
        v_th=np.array([s.delay.v_th for s in samples]),
        alpha=np.array([s.delay.alpha_sat for s in samples]),
        kappa=np.array([s.delay.kappa_t for s in samples]),
        t_ref=np.array([s.delay.t_ref for s in samples]),
    )


def true_slowest_grid(samples: list[ChipSample], voltages, temps) -> np.ndarray:
    """Noise-free slowest-RO frequency for each (sample, voltage) at each sample's temperature."""
    if len({len(s.ros) for s in samples}) > 1:
        return np.array(
            [true_slowest_grid([s], voltages, [t])[0] for s, t in zip(samples, temps)]
        )
    return kernels.slowest_ro_grid(
        voltages=np.asarray(voltages, dtype=float),
        temps=np.asarray(temps, dtype=float),
        **_kernel_inputs(samples),
    )


def run_sweep(
    population: list[ChipSample],
    grid: SweepGrid,
    mcfg: MeasurementConfig,
    *,
    virus_power: float = DEFAULT_VIRUS_POWER,
    g_fail: float = DEFAULT_G_FAIL,
    rng: np.random.Generator | None = None,
) -> SweepResult:
    """Warm each die, record its measured slowest RO and stress outcomes on the grid."""
    temps = [hot_temperature(s, mcfg, virus_power) for s in population]
    ro = np.array(
        [
            [measure_slowest_ro(s, v, ThermalState(t), mcfg, rng) for v in grid.voltages]
            for s, t in zip(population, temps)
        ]
    ).reshape(len(population), len(grid.voltages))
    slowest = true_slowest_grid(population, grid.voltages, temps)
    outcomes = kernels.stress_grid(
        slowest, np.array([s.s_real for s in population]), np.array(grid.frequencies), g_fail
    )
    return SweepResult(
        tuple(s.id for s in population),
        np.array(grid.voltages),
        np.array(grid.frequencies),
        outcomes,
        ro,
    )


def min_safe_voltage(
    sample: ChipSample,
    f: float,
    limits: SupplyLimits,
    *,
    t: float,
    g_fail: float = DEFAULT_G_FAIL,
    method: str = "scan",
) -> float:
    """Lowest grid voltage from which the stress test passes all the way up.

    ``method="scan"`` walks the whole grid through the batch kernels;
    ``method="bisect"`` bisects on :func:`run_stress_test`. They agree
    whenever success is monotone in voltage.
    """
    volts = limits.grid()
    if method == "scan":
        slowest = true_slowest_grid([sample], volts, [t])
        codes = kernels.stress_grid(slowest, np.array([sample.s_real]), np.array([f]), g_fail)
        idx = int(kernels.min_safe_index(codes)[0, 0])
    elif method == "bisect":
        ok = lambda j: run_stress_test(sample, float(volts[j]), f, t, g_fail) is StressOutcome.SUCCESS  # noqa: E731
        if not ok(len(volts) - 1):
            idx = -1
        else:
            lo, hi = -1, len(volts) - 1  # ok(hi) holds, ok(lo) treated as false
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if ok(mid):
                    hi = mid
                else:
                    lo = mid
            idx = hi
    else:
        raise ValueError(f"unknown search method {method!r}")
    if idx < 0:
        raise InfeasibleError(
            f"{sample.id}: {f / 1e6:.1f} MHz not reachable even at {limits.v_max} V"
        )
    return float(volts[idx])


def min_safe_voltages(
    samples: list[ChipSample], freqs, limits: SupplyLimits, temps, g_fail: float = DEFAULT_G_FAIL
) -> np.ndarray:
    """Batch oracle: (samples, freqs) array of minimum safe voltages, NaN if infeasible."""
    volts = limits.grid()
    slowest = true_slowest_grid(samples, volts, temps)
    codes = kernels.stress_grid(
        slowest, np.array([s.s_real for s in samples]), np.asarray(freqs, dtype=float), g_fail
    )
    idx = kernels.min_safe_index(codes)
    out = np.where(idx >= 0, volts[np.clip(idx, 0, None)], np.nan)
    return out


def boundary_ratios(sweep: SweepResult) -> list[float]:
    """f / F_o at each interior safety boundary of the sweep.

    Boundaries sitting on the lowest swept voltage are excluded: the true
    boundary lies somewhere below the grid there.
    """
    idx = sweep.boundary_indices()
    ratios = []
    for i in range(len(sweep.sample_ids)):
        for k, f in enumerate(sweep.frequencies):
            j = int(idx[i, k])
            if j > 0:
                ratios.append(float(f) / float(sweep.ro_hz[i, j]))
    return ratios


def fit_sf(sweep: SweepResult, margin: float = 0.02) -> float:
    """Largest RO-to-core ratio that keeps every observed boundary safe, less ``margin``."""
    ratios = boundary_ratios(sweep)
    if not ratios:
        raise DataError("sweep contains no interior safety boundary")
    return min(ratios) * (1.0 - margin)


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    return float((xc * (y - y.mean())).sum() / (xc * xc).sum())


def sample_slopes(sweep: SweepResult) -> list[float]:
    """Least-squares dV/dF_o for each sample over its safe region.

    The safe region is every voltage at or above the sample's boundary for
    the lowest swept frequency.
    """
    if len(sweep.voltages) < 2:
        raise DataError("need at least two sweep voltages to fit S_v")
    idx = sweep.boundary_indices()
    slopes = []
    for i in range(len(sweep.sample_ids)):
        j0 = int(idx[i, 0])
        if j0 < 0 or len(sweep.voltages) - j0 < 2:
            continue
        slopes.append(_slope(sweep.ro_hz[i, j0:], sweep.voltages[j0:]))
    if not slopes:
        raise DataError("no sample has two or more safe sweep voltages")
    return slopes


def fit_sv(sweep: SweepResult, margin: float = 0.02, rule: str = "min") -> float:
    """Volts per hertz of RO frequency.

    ``rule="min"`` takes the shallowest per-sample slope and shrinks it by
    ``margin``; a shallower slope lowers voltage less, so this is the safe
    direction when tuning down from nominal. ``rule="max"`` takes the
    steepest slope and inflates it, which only errs safe when tuning up.
    """
    slopes = sample_slopes(sweep)
    if rule == "min":
        s_v = min(slopes) * (1.0 - margin)
    elif rule == "max":
        s_v = max(slopes) * (1.0 + margin)
    else:
        raise ValueError(f"unknown fitting rule {rule!r}")
    if not sv_bound_holds(sweep, s_v):
        raise DataError(f"fitted s_v={s_v:.4g} V/Hz puts a safe boundary below s_v * F_o")
    return s_v


def sv_bound_holds(sweep: SweepResult, s_v: float) -> bool:
    """Consistency check V >= s_v * F_o at every observed safety boundary."""
    idx = sweep.boundary_indices()
    for i in range(len(sweep.sample_ids)):
        for j in idx[i]:
            if j >= 0 and sweep.voltages[j] < s_v * sweep.ro_hz[i, j] - 1e-12:
                return False
    return True


def pll_for(f: float, osc_hz: float = 25e6) -> PllConfig:
    """PLL multiplier/divider pair that produces ``f`` from ``osc_hz``."""
    ratio = Fraction(round(f), round(osc_hz)).limit_denominator(1 << 12)
    return PllConfig(osc_hz, ratio.numerator, ratio.denominator)


@dataclass(frozen=True)
class ValidationRow:
    sample_id: str
    bin: str
    f_core: float
    v_after: float
    outcome: StressOutcome
    v_oracle: float  # NaN when the oracle finds no safe voltage
    clamped: bool
    temperature: float

    @property
    def gap(self) -> float:
        return self.v_after - self.v_oracle


@dataclass(frozen=True)
class ValidationReport:
    rows: tuple[ValidationRow, ...] = field(default_factory=tuple)

    @property
    def failures(self) -> tuple[ValidationRow, ...]:
        return tuple(r for r in self.rows if r.outcome is not StressOutcome.SUCCESS)

    @property
    def passed(self) -> bool:
        return not self.failures

    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.rows if not math.isnan(r.v_oracle)])

    def gap_percentiles(self, qs=(50, 95, 100)) -> dict[int, float]:
        g = self.gaps()
        if g.size == 0:
            return {q: math.nan for q in qs}
        return {q: float(np.percentile(g, q)) for q in qs}


def _validate_chunk(samples, tp, freqs, mcfg, virus_power, g_fail, osc_hz):
    rows = []
    temps = [hot_temperature(s, mcfg, virus_power) for s in samples]
    oracle = min_safe_voltages(samples, freqs, tp.limits, temps, g_fail)
    for i, s in enumerate(samples):
        for k, f in enumerate(freqs):
            rep = tune(s, pll_for(f, osc_hz), tp, mcfg, virus_power=virus_power)
            outcome = run_stress_test(s, rep.v_after, rep.f_core, rep.temperature, g_fail)
            rows.append(
                ValidationRow(s.id, s.bin, rep.f_core, rep.v_after, outcome,
                              float(oracle[i, k]), rep.clamped, rep.temperature)
            )
    return rows


def validate_params(
    tp: TuningParams,
    population: list[ChipSample],
    freqs,
    mcfg: MeasurementConfig | None = None,
    *,
    virus_power: float = DEFAULT_VIRUS_POWER,
    g_fail: float = DEFAULT_G_FAIL,
    osc_hz: float = 25e6,
    workers: int = 1,
) -> ValidationReport:
    """Tune every (sample, frequency), stress-test the result and compare with the oracle."""
    mcfg = mcfg or MeasurementConfig()
    freqs = [float(f) for f in freqs]
    if not freqs or not population:
        return ValidationReport()
    work = partial(_validate_chunk, tp=tp, freqs=freqs, mcfg=mcfg,
                   virus_power=virus_power, g_fail=g_fail, osc_hz=osc_hz)
    if workers <= 1:
        return ValidationReport(tuple(work(population)))
    size = max(1, math.ceil(len(population) / (workers * 4)))
    chunks = [population[i:i + size] for i in range(0, len(population), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        rows = [r for chunk_rows in pool.map(work, chunks) for r in chunk_rows]
    return ValidationReport(tuple(rows))
