"""CMOS static/dynamic power and the normalised voltage-frequency relation."""

from __future__ import annotations

import math
from dataclasses import dataclass

T_REF = 25.0


@dataclass(frozen=True)
class ActivityParams:
    alpha: float = 0.5
    c_sw: float = 0.52e-9  # farads
    i_leak0: float = 7.5e-3  # amperes at T_REF
    t_leak_scale: float = 40.0  # degC per e-fold of leakage

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.c_sw > 0:
            raise ValueError(f"c_sw must be positive, got {self.c_sw}")
        if not self.i_leak0 > 0:
            raise ValueError(f"i_leak0 must be positive, got {self.i_leak0}")
        if not self.t_leak_scale > 0:
            raise ValueError(f"t_leak_scale must be positive, got {self.t_leak_scale}")


@dataclass(frozen=True)
class PowerBreakdown:
    static_w: float
    dynamic_w: float
    total_w: float
    v: float
    f: float
    t: float


def leakage_current(ap: ActivityParams, t: float) -> float:
    return ap.i_leak0 * math.exp((t - T_REF) / ap.t_leak_scale)


def static_power(v: float, i_leak: float) -> float:
    if v < 0:
        raise ValueError(f"voltage must be non-negative, got {v}")
    return v * i_leak


def dynamic_power(ap: ActivityParams, v: float, f: float) -> float:
    if v < 0 or f < 0:
        raise ValueError(f"voltage and frequency must be non-negative, got v={v}, f={f}")
    return ap.alpha * ap.c_sw * v * v * f


def breakdown(ap: ActivityParams, v: float, f: float, t: float) -> PowerBreakdown:
    ps = static_power(v, leakage_current(ap, t))
    pd = dynamic_power(ap, v, f)
    return PowerBreakdown(ps, pd, ps + pd, v, f, t)


def normalized_voltage(f_norm: float, v_th: float, v_max: float) -> float:
    """Normalised supply voltage needed for a normalised clock frequency.

    Linear in ``f_norm``; maps 0 to ``v_th / v_max`` and 1 to 1.
    """
    if not 0 <= f_norm <= 1:
        raise ValueError(f"f_norm must lie in [0, 1], got {f_norm}")
    if not 0 < v_th < v_max:
        raise ValueError(f"need 0 < v_th < v_max, got v_th={v_th}, v_max={v_max}")
    floor = v_th / v_max
    return f_norm * (1 - floor) + floor


def power_ratios(v_new: float, v_old: float) -> tuple[float, float]:
    """(static, dynamic) power after/before a voltage change at fixed F, I_leak, C."""
    if not v_old > 0:
        raise ValueError(f"v_old must be positive, got {v_old}")
    r = v_new / v_old
    return r, r * r
