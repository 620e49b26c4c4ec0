"""16-bit RO counter emulation and the warm-up / sampling protocol."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .device import ChipSample, ThermalState, ro_frequency, thermal_step
from .errors import MeasurementOverflowError

log = logging.getLogger(__name__)

COUNTER_MODULUS = 65536
MAX_JUNCTION_C = 125.0


@dataclass(frozen=True)
class CounterSample:
    start_count: int
    end_count: int
    window: float
    wrapped: bool = False

    def __post_init__(self):
        for name in ("start_count", "end_count"):
            value = getattr(self, name)
            if not 0 <= value < COUNTER_MODULUS:
                raise ValueError(f"{name} must be a 16-bit value, got {value}")
        if not self.window > 0:
            raise ValueError(f"window must be positive, got {self.window}")


@dataclass(frozen=True)
class MeasurementConfig:
    window: float = 85e-6
    repeats: int = 4
    warmup: float = 1.0
    noise: bool = False
    max_ro_hz: float = 700e6
    substep: float = 0.01

    def __post_init__(self):
        if not self.window > 0:
            raise ValueError(f"window must be positive, got {self.window}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if self.warmup < 0:
            raise ValueError(f"warmup must be non-negative, got {self.warmup}")
        if self.window * self.max_ro_hz >= COUNTER_MODULUS:
            raise ValueError(
                f"window {self.window:g} s overruns the 16-bit counter at {self.max_ro_hz:g} Hz"
            )
        if not 0 < self.substep <= 0.01:
            raise ValueError(f"substep must lie in (0, 0.01] s, got {self.substep}")


def warm_up(
    sample: ChipSample, state: ThermalState, cfg: MeasurementConfig, virus_power: float
) -> ThermalState:
    """Run the power virus for ``cfg.warmup`` seconds."""
    if not virus_power > 0:
        raise ValueError(f"virus_power must be positive, got {virus_power}")
    if cfg.warmup == 0:
        return state
    target = sample.thermal.steady_state(virus_power)
    if target > MAX_JUNCTION_C:
        log.warning(
            "%s: virus steady state %.1f C exceeds %.0f C; clamping",
            sample.id, target, MAX_JUNCTION_C,
        )
    n = math.ceil(cfg.warmup / cfg.substep - 1e-9)
    dt = cfg.warmup / n
    for _ in range(n):
        state = thermal_step(state, sample.thermal, virus_power, dt)
    if state.temperature > MAX_JUNCTION_C:
        state = ThermalState(MAX_JUNCTION_C, state.time)
    return state


def count_window(f_ro: float, window: float, start_count: int) -> CounterSample:
    if f_ro < 0:
        raise ValueError(f"frequency must be non-negative, got {f_ro}")
    ticks = math.floor(f_ro * window + 0.5)
    end = (start_count + ticks) % COUNTER_MODULUS
    return CounterSample(start_count, end, window, ticks >= COUNTER_MODULUS)


def counts_to_frequency(s: CounterSample) -> float:
    if s.wrapped:
        raise MeasurementOverflowError(
            f"counter wrapped during a {s.window:g} s window; shorten the window"
        )
    return ((s.end_count - s.start_count) % COUNTER_MODULUS) / s.window


def measure_slowest_ro(
    sample: ChipSample,
    v: float,
    state: ThermalState,
    cfg: MeasurementConfig,
    rng: np.random.Generator | None = None,
) -> float:
    """Software view of silicon speed: slowest per-RO average count rate.

    Counters free-run between windows, so each window starts where the
    previous one stopped. With ``cfg.noise`` each window gains a uniform
    jitter of -1, 0 or +1 counts (start/stop skew).
    """
    if cfg.noise and rng is None:
        raise ValueError("noisy measurement needs an rng")
    n_ro = len(sample.ros)
    true = np.array([ro_frequency(ro, sample, v, state.temperature) for ro in sample.ros])
    starts = np.zeros(n_ro, dtype=np.int64)
    totals = np.zeros(n_ro)
    for _ in range(cfg.repeats):
        ends, wrapped = kernels.count_windows(true, cfg.window, starts)
        if wrapped.any():
            raise MeasurementOverflowError(
                f"{sample.id}: RO counter wrapped at {v:.3f} V; shorten the window"
            )
        if cfg.noise:
            ends = (ends + rng.integers(-1, 2, size=n_ro)) % COUNTER_MODULUS
        totals += ((ends - starts) % COUNTER_MODULUS) / cfg.window
        starts = ends
    return float((totals / cfg.repeats).min())
