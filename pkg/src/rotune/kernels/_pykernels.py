"""Pure-Python implementations of the batch kernels.

Semantics match ``_ckernels`` exactly; this module is imported when the
compiled extension is unavailable or ``ROTUNE_PURE_PYTHON`` is set.
"""

import math

import numpy as np

from ..errors import ModelDomainError

COUNTER_MODULUS = 65536


def slowest_ro_grid(scale, n_inv, v_th, alpha, kappa, t_ref, voltages, temps):
    """Noise-free slowest-RO frequency for every (sample, voltage).

    ``scale`` and ``n_inv`` are (samples, ros); ``v_th``, ``alpha``,
    ``kappa``, ``t_ref`` and ``temps`` are per sample.
    """
    scale = np.asarray(scale, dtype=np.float64)
    n_inv = np.asarray(n_inv, dtype=np.float64)
    n_s, n_r = scale.shape
    out = np.empty((n_s, len(voltages)), dtype=np.float64)
    for i in range(n_s):
        vt = float(v_th[i])
        a = float(alpha[i])
        thermal = 1.0 + float(kappa[i]) * (float(temps[i]) - float(t_ref[i]))
        row = scale[i].tolist()
        nrow = n_inv[i].tolist()
        for j, v in enumerate(voltages):
            v = float(v)
            if v - vt <= 0.05 + 1e-12:
                raise ModelDomainError(f"voltage {v} below model floor for sample {i}")
            drive = ((1.0 - vt) / (v - vt)) ** a * thermal
            best = math.inf
            for r in range(n_r):
                f = 1.0 / (2.0 * nrow[r] * row[r] * drive)
                if f < best:
                    best = f
            out[i, j] = best
    return out


def stress_grid(slowest, s_real, freqs, g_fail):
    """Outcome codes (0 crash, 1 failure, 2 success) per (sample, voltage, freq)."""
    slowest = np.asarray(slowest, dtype=np.float64)
    n_s, n_v = slowest.shape
    out = np.empty((n_s, n_v, len(freqs)), dtype=np.int8)
    fs = [float(f) for f in freqs]
    for i in range(n_s):
        s = float(s_real[i])
        for j in range(n_v):
            fmax = s * float(slowest[i, j])
            for k, f in enumerate(fs):
                m = fmax / f
                out[i, j, k] = 0 if m < 1.0 else (1 if m < 1.0 + g_fail else 2)
    return out


def min_safe_index(outcomes):
    """Lowest voltage index from which every higher index succeeds; -1 if none."""
    outcomes = np.asarray(outcomes)
    n_s, n_v, n_f = outcomes.shape
    out = np.full((n_s, n_f), -1, dtype=np.int64)
    for i in range(n_s):
        for k in range(n_f):
            j = n_v - 1
            while j >= 0 and outcomes[i, j, k] == 2:
                j -= 1
            if j < n_v - 1:
                out[i, k] = j + 1
    return out


def count_windows(freqs, window, starts):
    """End counter values and wrap flags for a batch of counting windows."""
    n = len(freqs)
    ends = np.empty(n, dtype=np.int64)
    wrapped = np.empty(n, dtype=np.bool_)
    for i in range(n):
        ticks = int(math.floor(float(freqs[i]) * window + 0.5))
        ends[i] = (int(starts[i]) + ticks) % COUNTER_MODULUS
        wrapped[i] = ticks >= COUNTER_MODULUS
    return ends, wrapped
