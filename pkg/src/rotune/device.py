"""Simulated silicon: inverter delay, ring oscillators, hidden critical path.

Every die carries a process multiplier ``k_p`` (>1 is slower), four ring
oscillators with their own within-die multiplier ``k_ro`` and a hidden
ratio ``s_real`` linking the slowest RO to the fastest safe core clock.
Heating slows the silicon (65 nm behaviour), modelled with a linear
temperature coefficient on the inverter delay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import ModelDomainError, SupplyRangeError

V_NOMINAL = 1.0
SUPPLY_V_MIN = 0.6
SUPPLY_V_MAX = 1.3
VALIDITY_MARGIN = 0.05
DEFAULT_G_FAIL = 0.02

RO_KINDS = ("A", "B")
RO_LOCATIONS = ("core", "io")
BINS = ("slow", "typical", "fast")


@dataclass(frozen=True)
class DelayParams:
    """Alpha-power-law inverter delay parameters."""

    d0: float = 3.92e-11  # calibrated, see scripts/calibrate.py
    v_th: float = 0.35
    alpha_sat: float = 1.3
    kappa_t: float = 0.0008
    t_ref: float = 25.0

    def __post_init__(self):
        if not self.d0 > 0:
            raise ValueError(f"d0 must be positive, got {self.d0}")
        if not 0 < self.v_th < 0.6:
            raise ValueError(f"v_th must lie in (0, 0.6), got {self.v_th}")
        if not 1.0 <= self.alpha_sat <= 2.0:
            raise ValueError(f"alpha_sat must lie in [1, 2], got {self.alpha_sat}")
        if self.kappa_t < 0:
            raise ValueError(f"kappa_t must be non-negative, got {self.kappa_t}")


@dataclass(frozen=True)
class RingOscillator:
    kind: str
    location: str
    n_inverters: int = 31
    k_ro: float = 1.0

    def __post_init__(self):
        if self.kind not in RO_KINDS:
            raise ValueError(f"unknown RO kind {self.kind!r}")
        if self.location not in RO_LOCATIONS:
            raise ValueError(f"unknown RO location {self.location!r}")
        if self.n_inverters < 3 or self.n_inverters % 2 == 0:
            raise ValueError(f"n_inverters must be odd and >= 3, got {self.n_inverters}")
        if not 1.0 <= self.k_ro <= 1.05:
            raise ValueError(f"k_ro must lie in [1.0, 1.05], got {self.k_ro}")


@dataclass(frozen=True)
class ThermalParams:
    t_ambient: float = 25.0
    r_th: float = 40.0  # degC per watt
    tau: float = 0.2  # seconds

    def __post_init__(self):
        if not self.r_th > 0:
            raise ValueError(f"r_th must be positive, got {self.r_th}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not 0 <= self.t_ambient <= 85:
            raise ValueError(f"t_ambient must lie in [0, 85], got {self.t_ambient}")

    def steady_state(self, power: float) -> float:
        return self.t_ambient + power * self.r_th


@dataclass(frozen=True)
class ThermalState:
    temperature: float
    time: float = 0.0


class StressOutcome(IntEnum):
    """Stress-test result, ordered so that larger means healthier."""

    CRASH = 0
    FAILURE = 1
    SUCCESS = 2

    def __str__(self):
        return self.name.capitalize()


@dataclass(frozen=True)
class ChipSample:
    id: str
    k_p: float
    ros: tuple[RingOscillator, ...]
    s_real: float
    thermal: ThermalParams = field(default_factory=ThermalParams)
    delay: DelayParams = field(default_factory=DelayParams)
    i_leak0: float = 7.5e-3
    c_sw: float = 0.52e-9
    bin: str = "typical"

    def __post_init__(self):
        object.__setattr__(self, "ros", tuple(self.ros))
        if not 0.9 <= self.k_p <= 1.1:
            raise ValueError(f"k_p must lie in [0.9, 1.1], got {self.k_p}")
        if not self.ros:
            raise ValueError("a chip needs at least one ring oscillator")
        if not self.s_real > 0:
            raise ValueError(f"s_real must be positive, got {self.s_real}")

    @property
    def has_standard_ros(self) -> bool:
        """True for the four-RO layout: both kinds at both locations."""
        placed = {(ro.kind, ro.location) for ro in self.ros}
        return len(self.ros) == 4 and placed == {
            (k, loc) for k in RO_KINDS for loc in RO_LOCATIONS
        }


def standard_ros(k_ro: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0), n_inverters: int = 31):
    layout = [(k, loc) for loc in RO_LOCATIONS for k in RO_KINDS]
    return tuple(
        RingOscillator(kind, loc, n_inverters, k) for (kind, loc), k in zip(layout, k_ro)
    )


def inverter_delay(dp: DelayParams, k_p: float, k_ro: float, v: float, t: float) -> float:
    """Propagation delay of one inverter in seconds."""
    if v - dp.v_th <= VALIDITY_MARGIN + 1e-12:
        raise ModelDomainError(
            f"voltage {v:.4f} V is at or below the model floor {dp.v_th + VALIDITY_MARGIN:.4f} V"
        )
    drive = ((V_NOMINAL - dp.v_th) / (v - dp.v_th)) ** dp.alpha_sat
    return dp.d0 * k_p * k_ro * drive * (1.0 + dp.kappa_t * (t - dp.t_ref))


def ro_frequency(ro: RingOscillator, sample: ChipSample, v: float, t: float) -> float:
    d = inverter_delay(sample.delay, sample.k_p, ro.k_ro, v, t)
    return 1.0 / (ro.n_inverters * 2 * d)


def slowest_true_ro(sample: ChipSample, v: float, t: float) -> float:
    return min(ro_frequency(ro, sample, v, t) for ro in sample.ros)


def max_safe_frequency(sample: ChipSample, v: float, t: float) -> float:
    """Hidden ground truth: fastest core clock the die survives at (v, t)."""
    return sample.s_real * slowest_true_ro(sample, v, t)


def thermal_step(state: ThermalState, tp: ThermalParams, power: float, dt: float) -> ThermalState:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    target = tp.steady_state(power)
    temperature = state.temperature + (target - state.temperature) * -math.expm1(-dt / tp.tau)
    return ThermalState(temperature, state.time + dt)


def check_supply_range(v: float) -> None:
    if not SUPPLY_V_MIN - 1e-9 <= v <= SUPPLY_V_MAX + 1e-9:
        raise SupplyRangeError(
            f"voltage {v:.4f} V outside supply range [{SUPPLY_V_MIN}, {SUPPLY_V_MAX}] V"
        )


def classify_margin(m: float, g_fail: float = DEFAULT_G_FAIL) -> StressOutcome:
    if m < 1.0:
        return StressOutcome.CRASH
    if m < 1.0 + g_fail:
        return StressOutcome.FAILURE
    return StressOutcome.SUCCESS


def run_stress_test(
    sample: ChipSample, v: float, f_core: float, t: float, g_fail: float = DEFAULT_G_FAIL
) -> StressOutcome:
    """Outcome of the stress application at (v, f_core, t)."""
    check_supply_range(v)
    return classify_margin(max_safe_frequency(sample, v, t) / f_core, g_fail)


@dataclass(frozen=True)
class PopulationSpec:
    """How many dice to draw per speed bin and how to draw them."""

    slow: int = 3
    typical: int = 3
    fast: int = 3
    centers: tuple[float, float, float] = (1.06, 1.00, 0.94)
    jitter: float = 0.01
    k_ro_range: tuple[float, float] = (1.0, 1.04)
    s_real_range: tuple[float, float] = (1.75, 1.90)
    n_inverters: int = 31
    delay: DelayParams = field(default_factory=DelayParams)
    thermal: ThermalParams = field(default_factory=ThermalParams)
    i_leak0: float = 7.5e-3
    c_sw: float = 0.52e-9

    def __post_init__(self):
        if min(self.slow, self.typical, self.fast) < 0:
            raise ValueError("bin counts must be non-negative")
        if self.jitter < 0:
            raise ValueError(f"jitter must be non-negative, got {self.jitter}")

    @property
    def counts(self) -> tuple[int, int, int]:
        return (self.slow, self.typical, self.fast)

    @classmethod
    def split(cls, n: int, **kwargs) -> "PopulationSpec":
        """Spread ``n`` dice as evenly as possible over the three bins."""
        base, extra = divmod(n, 3)
        # leftovers go to typical first, then slow
        return cls(
            slow=base + (extra >= 2), typical=base + (extra >= 1), fast=base, **kwargs
        )


def _truncated_normal(rng: np.random.Generator, mean: float, sigma: float) -> float:
    if sigma == 0:
        return mean
    while True:
        x = rng.normal(mean, sigma)
        if abs(x - mean) <= 3 * sigma:
            return x


def generate_population(spec: PopulationSpec, seed: int) -> list[ChipSample]:
    """Draw dice bin by bin; identical seeds give identical populations."""
    rng = np.random.default_rng(seed)
    samples = []
    lo_ro, hi_ro = spec.k_ro_range
    lo_s, hi_s = spec.s_real_range
    for bin_name, center, count in zip(BINS, spec.centers, spec.counts):
        for _ in range(count):
            k_p = min(1.1, max(0.9, _truncated_normal(rng, center, spec.jitter)))
            k_ro = tuple(float(k) for k in rng.uniform(lo_ro, hi_ro, size=4))
            s_real = float(rng.uniform(lo_s, hi_s))
            samples.append(
                ChipSample(
                    id=f"chip-{len(samples):04d}",
                    k_p=float(k_p),
                    ros=standard_ros(k_ro, spec.n_inverters),
                    s_real=s_real,
                    thermal=spec.thermal,
                    delay=spec.delay,
                    i_leak0=spec.i_leak0,
                    c_sw=spec.c_sw,
                    bin=bin_name,
                )
            )
    return samples
