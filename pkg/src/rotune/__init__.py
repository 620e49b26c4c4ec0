"""Ring-oscillator driven supply-voltage tuning on simulated silicon."""

from .device import (
    ChipSample,
    DelayParams,
    PopulationSpec,
    RingOscillator,
    StressOutcome,
    ThermalParams,
    ThermalState,
    generate_population,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .measurement import MeasurementConfig
from .power import ActivityParams, PowerBreakdown
from .tuner import PllConfig, SupplyLimits, TuningParams, TuningReport, tune

__version__ = "0.1.0"

__all__ = [
    "ActivityParams",
    "ChipSample",
    "DelayParams",
    "KERNEL_BACKEND",
    "MeasurementConfig",
    "PllConfig",
    "PopulationSpec",
    "PowerBreakdown",
    "RingOscillator",
    "StressOutcome",
    "SupplyLimits",
    "ThermalParams",
    "ThermalState",
    "TuningParams",
    "TuningReport",
    "generate_population",
    "tune",
]
