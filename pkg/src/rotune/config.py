"""Configuration loading: packaged defaults, user file, fragments, overrides."""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass
from importlib import resources
from typing import Any

import yaml

from .characterization import SweepGrid
from .device import DelayParams, PopulationSpec, ThermalParams
from .errors import ConfigError
from .measurement import MeasurementConfig
from .power import ActivityParams
from .tuner import PllConfig, SupplyLimits, TuningParams

ENV_VAR = "ROTUNE_CONFIG"


def default_dict() -> dict:
    text = resources.files("rotune").joinpath("default_config.yaml").read_text()
    return yaml.safe_load(text)


def _read_yaml(path) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    return data


def merge(base: dict, update: dict, prefix: str = "") -> dict:
    """Recursively overlay ``update`` on ``base``; unknown keys are errors."""
    out = copy.deepcopy(base)
    for key, value in update.items():
        name = f"{prefix}{key}"
        if key not in out:
            raise ConfigError(f"unknown config key {name!r}")
        if isinstance(out[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {name!r} must be a mapping")
            out[key] = merge(out[key], value, name + ".")
        else:
            out[key] = value
    return out


def parse_override(text: str) -> dict:
    """Turn ``a.b.c=value`` into ``{'a': {'b': {'c': value}}}``."""
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    value = yaml.safe_load(raw)
    for part in reversed(key.split(".")):
        value = {part: value}
    return value


def _num(section: dict, key: str, where: str, kind=float) -> Any:
    try:
        value = section[key]
    except KeyError:
        raise ConfigError(f"missing config key '{where}.{key}'") from None
    if isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"config key '{where}.{key}' must be numeric, got {value!r}")
    try:
        return kind(float(value)) if kind is int else kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config key '{where}.{key}' must be numeric, got {value!r}") from None


def _build(where: str, cls, **kwargs):
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class Config:
    seed: int
    population: PopulationSpec
    measurement: MeasurementConfig
    limits: SupplyLimits
    v_nominal: float
    tuning: TuningParams
    pll: PllConfig
    g_fail: float
    virus_power: float
    alpha: float
    t_leak_scale: float
    grid: SweepGrid
    margin_sf: float
    margin_sv: float
    sv_rule: str
    freqs: tuple[float, ...]
    repeats: int
    workers: int
    validate_samples: int
    projection: tuple[float, float, float]
    raw: dict

    def activity(self, sample) -> ActivityParams:
        return ActivityParams(self.alpha, sample.c_sw, sample.i_leak0, self.t_leak_scale)

    def population_for(self, n: int) -> PopulationSpec:
        """Same draw rules as the default population, ``n`` dice split over the bins."""
        p = self.population
        return PopulationSpec.split(
            n, centers=p.centers, jitter=p.jitter, k_ro_range=p.k_ro_range,
            s_real_range=p.s_real_range, n_inverters=p.n_inverters, delay=p.delay,
            thermal=p.thermal, i_leak0=p.i_leak0, c_sw=p.c_sw,
        )


def _pair(section: dict, key: str, where: str) -> tuple[float, float]:
    value = section.get(key)
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"config key '{where}.{key}' must be a two-element list")
    lo, hi = (_num({"x": v}, "x", f"{where}.{key}") for v in value)
    if lo > hi:
        raise ConfigError(f"config key '{where}.{key}' must be ascending, got {value}")
    return lo, hi


def _freq_list(value, where: str) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"config key '{where}' must be a non-empty list")
    out = tuple(_num({"x": v}, "x", where) for v in value)
    if any(f <= 0 for f in out):
        raise ConfigError(f"config key '{where}' must hold positive frequencies")
    return out


def build(d: dict) -> Config:
    """Validate a merged config mapping and turn it into typed records."""
    pop = d["population"]
    delay = _build("delay", DelayParams, **{k: _num(d["delay"], k, "delay") for k in d["delay"]})
    thermal = _build("thermal", ThermalParams,
                     **{k: _num(d["thermal"], k, "thermal") for k in d["thermal"]})
    bins = pop["bins"]
    centers = pop["centers"]
    population = _build(
        "population", PopulationSpec,
        slow=_num(bins, "slow", "population.bins", int),
        typical=_num(bins, "typical", "population.bins", int),
        fast=_num(bins, "fast", "population.bins", int),
        centers=tuple(_num(centers, b, "population.centers") for b in ("slow", "typical", "fast")),
        jitter=_num(pop, "jitter", "population"),
        k_ro_range=_pair(pop, "k_ro_range", "population"),
        s_real_range=_pair(pop, "s_real_range", "population"),
        n_inverters=_num(pop, "n_inverters", "population", int),
        delay=delay,
        thermal=thermal,
        i_leak0=_num(pop, "i_leak0", "population"),
        c_sw=_num(pop, "c_sw", "population"),
    )

    m = d["measurement"]
    measurement = _build(
        "measurement", MeasurementConfig,
        window=_num(m, "window", "measurement"),
        repeats=_num(m, "repeats", "measurement", int),
        warmup=_num(m, "warmup", "measurement"),
        noise=bool(m["noise"]),
        max_ro_hz=_num(m, "max_ro_hz", "measurement"),
    )

    s = d["supply"]
    limits = _build("supply", SupplyLimits, **{k: _num(s, k, "supply") for k in ("v_min", "v_max", "step", "slew")})
    v_nominal = _num(s, "v_nominal", "supply")
    if not limits.v_min <= v_nominal <= limits.v_max:
        raise ConfigError(f"supply.v_nominal ({v_nominal}) outside [v_min, v_max]")

    t = d["tuning"]
    tuning = _build("tuning", TuningParams,
                    s_f=_num(t, "s_f", "tuning"), s_v=_num(t, "s_v", "tuning"),
                    guard_mv=_num(t, "guard_mv", "tuning"), limits=limits)
    pll = _build("pll", PllConfig, **{k: _num(d["pll"], k, "pll") for k in d["pll"]})

    c = d["characterization"]
    v_low, v_high = _num(c, "v_low", "characterization"), _num(c, "v_high", "characterization")
    volts = tuple(float(v) for v in limits.grid() if v_low - 1e-9 <= v <= v_high + 1e-9)
    if not volts:
        raise ConfigError("characterization voltage range selects no supply grid points")
    grid = _build("characterization", SweepGrid, voltages=volts,
                  frequencies=tuple(sorted(_freq_list(c["frequencies"], "characterization.frequencies"))))
    sv_rule = str(c["sv_rule"])
    if sv_rule not in ("min", "max"):
        raise ConfigError(f"characterization.sv_rule must be 'min' or 'max', got {sv_rule!r}")

    e = d["experiment"]
    proj = e["projection"]
    projection = tuple(_num(proj, k, "experiment.projection") for k in ("start", "stop", "step"))
    if projection[2] <= 0 or projection[0] > projection[1]:
        raise ConfigError("experiment.projection needs start <= stop and step > 0")
    repeats = _num(e, "repeats", "experiment", int)
    workers = _num(e, "workers", "experiment", int)
    n_val = _num(e, "validate_samples", "experiment", int)
    if repeats < 1 or workers < 1 or n_val < 1:
        raise ConfigError("experiment.repeats, workers and validate_samples must be >= 1")

    g_fail = _num(d["stress"], "g_fail", "stress")
    virus_power = _num(d["stress"], "virus_power", "stress")
    if g_fail < 0 or virus_power <= 0:
        raise ConfigError("stress.g_fail must be >= 0 and stress.virus_power > 0")
    alpha = _num(d["power"], "alpha", "power")
    t_leak_scale = _num(d["power"], "t_leak_scale", "power")
    _build("power", ActivityParams, alpha=alpha, t_leak_scale=t_leak_scale)

    return Config(
        seed=_num(d, "seed", "config", int),
        population=population,
        measurement=measurement,
        limits=limits,
        v_nominal=v_nominal,
        tuning=tuning,
        pll=pll,
        g_fail=g_fail,
        virus_power=virus_power,
        alpha=alpha,
        t_leak_scale=t_leak_scale,
        grid=grid,
        margin_sf=_num(c, "margin_sf", "characterization"),
        margin_sv=_num(c, "margin_sv", "characterization"),
        sv_rule=sv_rule,
        freqs=_freq_list(e["freqs"], "experiment.freqs"),
        repeats=repeats,
        workers=workers,
        validate_samples=n_val,
        projection=projection,
        raw=d,
    )


def load_config(path=None, fragments=(), overrides=()) -> Config:
    """Defaults, then ``path`` (or $ROTUNE_CONFIG), then fragments, then ``key=value`` overrides."""
    d = default_dict()
    path = path or os.environ.get(ENV_VAR) or None
    layers = [_read_yaml(path)] if path else []
    layers += [_read_yaml(p) for p in fragments]
    layers += [parse_override(o) for o in overrides]
    for layer in layers:
        d = merge(d, layer)
    return build(d)
