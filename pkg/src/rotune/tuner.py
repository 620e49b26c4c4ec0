"""Start-up voltage tuning loop.

The flow is: read the core clock from the PLL settings, heat the die with
a power virus, sample the ring oscillators, derive the RO frequency the
current clock needs, extrapolate linearly to a supply voltage, round up to
the regulator grid and slew there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .device import ChipSample, ThermalState, V_NOMINAL
from .errors import ConfigError
from .measurement import MeasurementConfig, measure_slowest_ro, warm_up
from .power import ActivityParams, PowerBreakdown, breakdown, power_ratios

# Characterisation constants as published for the XS1-U8A-64. The unit of
# S_v is not stated there and no unit reproduces the reported operating
# points, so it is kept for reference only and never used as a default.
PUBLISHED_S_F = 1.7
PUBLISHED_S_V = 5.95e-06  # unit unknown

DEFAULT_VIRUS_POWER = 1.0  # watts
_GRID_TOL = 1e-6  # in units of one supply step


@dataclass(frozen=True)
class SupplyLimits:
    v_min: float = 0.6
    v_max: float = 1.3
    step: float = 0.010
    slew: float = 0.010  # volts per microsecond

    def __post_init__(self):
        if not self.v_min < self.v_max:
            raise ConfigError(f"v_min ({self.v_min}) must be below v_max ({self.v_max})")
        if not self.step > 0:
            raise ConfigError(f"step must be positive, got {self.step}")
        if not self.slew > 0:
            raise ConfigError(f"slew must be positive, got {self.slew}")

    @property
    def dwell(self) -> float:
        """Minimum time between two supply steps, in seconds."""
        return self.step / self.slew * 1e-6

    def snap(self, v: float) -> float:
        """Exact grid value for a voltage already on the grid."""
        return round(round(v / self.step) * self.step, 9)

    def grid(self) -> np.ndarray:
        lo = math.ceil(self.v_min / self.step - _GRID_TOL)
        hi = math.floor(self.v_max / self.step + _GRID_TOL)
        return np.round(np.arange(lo, hi + 1) * self.step, 9)


@dataclass(frozen=True)
class SupplyState:
    voltage: float
    limits: SupplyLimits = field(default_factory=SupplyLimits)

    def __post_init__(self):
        lim = self.limits
        if not lim.v_min - 1e-9 <= self.voltage <= lim.v_max + 1e-9:
            raise ConfigError(f"supply voltage {self.voltage} outside [{lim.v_min}, {lim.v_max}]")
        n = self.voltage / lim.step
        if abs(n - round(n)) > 1e-9 / lim.step:
            raise ConfigError(f"supply voltage {self.voltage} is not a multiple of {lim.step}")


@dataclass(frozen=True)
class TuningParams:
    s_f: float
    s_v: float  # volts per hertz of RO frequency
    guard_mv: float = 0.0  # volts, despite the name
    limits: SupplyLimits = field(default_factory=SupplyLimits)

    def __post_init__(self):
        if not self.s_f > 0:
            raise ConfigError(f"s_f must be positive, got {self.s_f}")
        if not self.s_v > 0:
            raise ConfigError(f"s_v must be positive, got {self.s_v}")
        if self.guard_mv < 0:
            raise ConfigError(f"guard_mv must be non-negative, got {self.guard_mv}")


@dataclass(frozen=True)
class PllConfig:
    osc_hz: float = 25e6
    multiplier: float = 20
    divider: float = 1

    def __post_init__(self):
        for name in ("osc_hz", "multiplier", "divider"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"PLL {name} must be positive, got {getattr(self, name)}")


class SlewStep(NamedTuple):
    voltage: float
    time: float


class TargetVoltage(NamedTuple):
    voltage: float
    clamped: bool


@dataclass(frozen=True)
class TuningReport:
    sample_id: str
    f_core: float
    f_o_measured: float
    f_o_target: float
    v_before: float
    v_after: float
    trajectory: tuple[SlewStep, ...]
    clamped: bool
    temperature: float
    power: tuple[PowerBreakdown, PowerBreakdown]

    @property
    def ratios(self) -> tuple[float, float]:
        return power_ratios(self.v_after, self.v_before)


def read_core_frequency(pll: PllConfig) -> float:
    if pll.divider <= 0:
        raise ConfigError("core clock divider must be positive")
    return pll.osc_hz * pll.multiplier / pll.divider


def target_ro_frequency(f_p: float, tp: TuningParams) -> float:
    """Slowest RO frequency that still indicates the die can run at ``f_p``."""
    if not f_p > 0:
        raise ValueError(f"core frequency must be positive, got {f_p}")
    return f_p / tp.s_f


def compute_target_voltage(
    v_now: float, f_o_now: float, f_o_target: float, tp: TuningParams
) -> TargetVoltage:
    """Linear extrapolation to the target RO frequency, rounded up to the grid."""
    if not f_o_now > 0:
        raise ValueError(f"need a positive RO measurement, got {f_o_now}")
    lim = tp.limits
    raw = v_now + tp.s_v * (f_o_target - f_o_now) + tp.guard_mv
    if raw > lim.v_max + 1e-12:
        return TargetVoltage(lim.snap(lim.v_max), True)
    v = math.ceil(raw / lim.step - _GRID_TOL) * lim.step
    v = max(v, lim.v_min)
    return TargetVoltage(lim.snap(v), False)


def plan_slew(v_from: float, v_to: float, limits: SupplyLimits) -> list[SlewStep]:
    """One-step-at-a-time supply transition; times are seconds from the start."""
    n = round((v_to - v_from) / limits.step)
    sign = 1 if n > 0 else -1
    start = round(v_from / limits.step)
    return [
        SlewStep(limits.snap((start + sign * k) * limits.step), k * limits.dwell)
        for k in range(1, abs(n) + 1)
    ]


def tune(
    sample: ChipSample,
    pll: PllConfig,
    tp: TuningParams,
    mcfg: MeasurementConfig,
    *,
    v_start: float = V_NOMINAL,
    virus_power: float = DEFAULT_VIRUS_POWER,
    activity: ActivityParams | None = None,
    state: ThermalState | None = None,
    rng: np.random.Generator | None = None,
) -> TuningReport:
    """Tune one die's supply to the lowest safe level for its current clock.

    The clock itself is never touched. Power figures are evaluated at the
    post-warm-up temperature using the die's own C_sw and leakage.
    """
    supply = SupplyState(v_start, tp.limits)
    f_core = read_core_frequency(pll)
    if state is None:
        state = ThermalState(sample.thermal.t_ambient)
    state = warm_up(sample, state, mcfg, virus_power)
    f_o = measure_slowest_ro(sample, supply.voltage, state, mcfg, rng)
    f_target = target_ro_frequency(f_core, tp)
    v_after, clamped = compute_target_voltage(supply.voltage, f_o, f_target, tp)
    trajectory = tuple(plan_slew(supply.voltage, v_after, tp.limits))

    if activity is None:
        activity = ActivityParams(c_sw=sample.c_sw, i_leak0=sample.i_leak0)
    t = state.temperature
    power = (breakdown(activity, supply.voltage, f_core, t), breakdown(activity, v_after, f_core, t))
    return TuningReport(
        sample_id=sample.id,
        f_core=f_core,
        f_o_measured=f_o,
        f_o_target=f_target,
        v_before=supply.voltage,
        v_after=v_after,
        trajectory=trajectory,
        clamped=clamped,
        temperature=t,
        power=power,
    )
