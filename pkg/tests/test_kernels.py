import os
import subprocess
import sys

import numpy as np
import pytest

from rotune import kernels
from rotune.characterization import _kernel_inputs
from rotune.device import (
    ChipSample,
    classify_margin,
    generate_population,
    PopulationSpec,
    slowest_true_ro,
    standard_ros,
)
from rotune.errors import ModelDomainError
from rotune.measurement import count_window

VOLTS = np.round(np.arange(0.6, 1.3001, 0.01), 2)


@pytest.fixture(scope="module")
def dice():
    return generate_population(PopulationSpec(slow=4, typical=4, fast=4), 3)


def test_python_backend_always_available():
    assert "python" in kernels.available_backends()
    assert kernels.BACKEND in kernels.available_backends()
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_slowest_grid_matches_scalar(backend, dice):
    temps = np.linspace(25, 90, len(dice))
    got = backend.slowest_ro_grid(voltages=VOLTS, temps=temps, **_kernel_inputs(dice))
    want = np.array([[slowest_true_ro(s, v, t) for v in VOLTS] for s, t in zip(dice, temps)])
    np.testing.assert_allclose(got, want, rtol=1e-13)


def test_slowest_grid_rejects_model_floor(backend, dice):
    with pytest.raises(ModelDomainError):
        backend.slowest_ro_grid(voltages=np.array([0.4, 1.0]), temps=np.full(len(dice), 25.0),
                                **_kernel_inputs(dice))


def test_stress_grid_matches_scalar(backend, dice):
    rng = np.random.default_rng(0)
    slowest = rng.uniform(100e6, 400e6, size=(5, 7))
    s_real = rng.uniform(1.75, 1.9, size=5)
    freqs = np.array([100e6, 250e6, 400e6, 500e6, 700e6])
    got = backend.stress_grid(slowest, s_real, freqs, 0.02)
    assert got.dtype == np.int8 and got.shape == (5, 7, 5)
    for i in range(5):
        for j in range(7):
            for k in range(5):
                assert got[i, j, k] == classify_margin(s_real[i] * slowest[i, j] / freqs[k], 0.02)


def test_stress_grid_exact_thresholds(backend):
    slowest = np.array([[1.0, 1.02, 1.0199999]])
    got = backend.stress_grid(slowest, np.array([1.0]), np.array([1.0]), 0.02)
    assert got[0, :, 0].tolist() == [1, 2, 1]


def test_min_safe_index(backend):
    codes = np.array([[[0, 0], [1, 0], [2, 0], [2, 1], [2, 2]],
                      [[2, 0], [2, 0], [2, 0], [2, 0], [2, 0]]], dtype=np.int8)
    # success must hold from the index up to the top of the grid
    codes[0, 3, 0] = 1
    got = backend.min_safe_index(codes)
    assert got.tolist() == [[4, 4], [0, -1]]


def test_count_windows_matches_scalar(backend):
    freqs = np.array([0.0, 1e6, 300e6, 12.188e6, 770e6, 800e6, 65535 / 85e-6])
    starts = np.array([0, 65535, 17, 65000, 0, 100, 0], dtype=np.int64)
    ends, wrapped = backend.count_windows(freqs, 85e-6, starts)
    for f, s, e, w in zip(freqs, starts, ends, wrapped):
        ref = count_window(float(f), 85e-6, int(s))
        assert (int(e), bool(w)) == (ref.end_count, ref.wrapped)


def test_backends_agree(dice):
    names = kernels.available_backends()
    if len(names) < 2:
        pytest.skip("compiled kernels not built")
    c, p = (kernels.get_backend(n) for n in ("cython", "python"))
    temps = np.full(len(dice), 65.0)
    inputs = _kernel_inputs(dice)
    a = c.slowest_ro_grid(voltages=VOLTS, temps=temps, **inputs)
    b = p.slowest_ro_grid(voltages=VOLTS, temps=temps, **inputs)
    np.testing.assert_array_equal(a, b)
    s_real = np.array([s.s_real for s in dice])
    freqs = np.arange(100e6, 700e6, 20e6)
    oa, ob = c.stress_grid(a, s_real, freqs, 0.02), p.stress_grid(b, s_real, freqs, 0.02)
    np.testing.assert_array_equal(oa, ob)
    np.testing.assert_array_equal(c.min_safe_index(oa), p.min_safe_index(ob))
    rng = np.random.default_rng(1)
    f = rng.uniform(0, 900e6, 500)
    st = rng.integers(0, 65536, 500)
    for x, y in zip(c.count_windows(f, 85e-6, st), p.count_windows(f, 85e-6, st)):
        np.testing.assert_array_equal(x, y)


def test_env_var_forces_python():
    env = dict(os.environ, ROTUNE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import rotune.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_benchmark_runs():
    out = subprocess.run([sys.executable, "benchmarks/bench_kernels.py", "--samples", "6",
                          "--repeat", "1"], capture_output=True, text=True, check=True,
                         cwd=os.path.dirname(os.path.dirname(__file__)))
    assert "slowest_ro_grid" in out.stdout
