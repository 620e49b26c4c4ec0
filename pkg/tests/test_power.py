import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotune.power import (
    ActivityParams,
    breakdown,
    dynamic_power,
    leakage_current,
    normalized_voltage,
    power_ratios,
    static_power,
)

AP = ActivityParams(alpha=0.5, c_sw=1e-9, i_leak0=10e-3, t_leak_scale=40.0)


def test_leakage_at_reference():
    assert leakage_current(AP, 25.0) == AP.i_leak0


def test_leakage_one_scale_up():
    assert leakage_current(AP, 25.0 + AP.t_leak_scale) == pytest.approx(math.e * AP.i_leak0)
    assert leakage_current(AP, 65.0) == pytest.approx(2.71828 * AP.i_leak0, rel=1e-5)


@given(t1=st.floats(-40, 150), t2=st.floats(-40, 150))
def test_leakage_increasing(t1, t2):
    if t1 + 1e-6 < t2:
        assert leakage_current(AP, t1) < leakage_current(AP, t2)


@pytest.mark.parametrize("v, i, p", [(1.0, 10e-3, 10e-3), (0.0, 5.0, 0.0), (0.93, 10e-3, 9.3e-3)])
def test_static_power(v, i, p):
    assert static_power(v, i) == pytest.approx(p, abs=1e-15)


def test_dynamic_power_reference_point():
    assert dynamic_power(AP, 1.0, 500e6) == pytest.approx(0.25, rel=1e-12)


def test_dynamic_power_zero_frequency():
    assert dynamic_power(AP, 1.0, 0.0) == 0.0


def test_dynamic_power_half_voltage():
    assert dynamic_power(AP, 0.5, 400e6) == dynamic_power(AP, 1.0, 400e6) / 4


@given(v=st.floats(1e-6, 2), f=st.floats(1.0, 2e9), k=st.sampled_from([0.5, 2.0, 4.0]))
def test_dynamic_power_scaling(v, f, k):
    # power-of-two scale factors keep the identities exact in binary floating point
    assert dynamic_power(AP, k * v, f) == k * k * dynamic_power(AP, v, f)
    assert dynamic_power(AP, v, k * f) == k * dynamic_power(AP, v, f)


@given(v=st.floats(1e-6, 2), i=st.floats(1e-6, 1), k=st.sampled_from([0.5, 2.0, 8.0]))
def test_static_power_bilinear(v, i, k):
    assert static_power(k * v, i) == k * static_power(v, i)
    assert static_power(v, k * i) == k * static_power(v, i)


def test_normalized_voltage_endpoints():
    assert normalized_voltage(1.0, 0.35, 1.3) == 1.0
    assert normalized_voltage(0.0, 0.35, 1.3) == 0.35 / 1.3
    assert normalized_voltage(0.0, 0.35, 1.3) == pytest.approx(0.2692, abs=5e-5)


def test_normalized_voltage_midpoint():
    assert normalized_voltage(0.5, 0.35, 1.3) == pytest.approx(0.6346, abs=5e-5)


@given(f1=st.floats(0, 1), f2=st.floats(0, 1))
def test_normalized_voltage_affine(f1, f2):
    slope = 1 - 0.35 / 1.3
    assert normalized_voltage(f2, 0.35, 1.3) - normalized_voltage(f1, 0.35, 1.3) == pytest.approx(
        slope * (f2 - f1), abs=1e-12)


@pytest.mark.parametrize("f", [-0.1, 1.1])
def test_normalized_voltage_domain(f):
    with pytest.raises(ValueError):
        normalized_voltage(f, 0.35, 1.3)


def test_power_ratios_slowest_reported_sample():
    s, d = power_ratios(0.93, 1.00)
    assert s == pytest.approx(0.930)
    assert d == pytest.approx(0.865, abs=5e-4)
    assert d == pytest.approx(0.86, abs=0.01)  # reported dynamic ratio for the slowest die


def test_power_ratios_fastest_reported_sample():
    s, d = power_ratios(0.86, 1.00)
    assert s == pytest.approx(0.860)
    assert d == pytest.approx(0.740, abs=5e-4)
    assert d == pytest.approx(0.75, abs=0.011)  # reported dynamic ratio for the fastest die
    assert s == pytest.approx(0.87, abs=0.011)  # reported static ratio for the fastest die


@given(v=st.floats(1e-3, 2))
def test_power_ratios_identity(v):
    assert power_ratios(v, v) == (1.0, 1.0)


def test_breakdown_sums():
    b = breakdown(AP, 0.9, 400e6, 65.0)
    assert b.total_w == b.static_w + b.dynamic_w
    assert (b.v, b.f, b.t) == (0.9, 400e6, 65.0)


def test_default_activity_near_150mw():
    b = breakdown(ActivityParams(), 1.0, 500e6, 65.0)
    assert b.total_w == pytest.approx(0.150, abs=0.005)
