# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np

from ..errors import ModelDomainError

from libc.math cimport floor, pow, INFINITY

cdef long long COUNTER_MODULUS = 65536


def slowest_ro_grid(scale, n_inv, v_th, alpha, kappa, t_ref, voltages, temps):
    cdef double[:, ::1] sc = np.ascontiguousarray(scale, dtype=np.float64)
    cdef double[:, ::1] nv = np.ascontiguousarray(n_inv, dtype=np.float64)
    cdef double[::1] vt = np.ascontiguousarray(v_th, dtype=np.float64)
    cdef double[::1] al = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef double[::1] ka = np.ascontiguousarray(kappa, dtype=np.float64)
    cdef double[::1] tr = np.ascontiguousarray(t_ref, dtype=np.float64)
    cdef double[::1] vs = np.ascontiguousarray(voltages, dtype=np.float64)
    cdef double[::1] ts = np.ascontiguousarray(temps, dtype=np.float64)
    cdef Py_ssize_t n_s = sc.shape[0], n_r = sc.shape[1], n_v = vs.shape[0]
    out_arr = np.empty((n_s, n_v), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, r
    cdef double thermal, drive, f, best, v
    for i in range(n_s):
        thermal = 1.0 + ka[i] * (ts[i] - tr[i])
        for j in range(n_v):
            v = vs[j]
            if v - vt[i] <= 0.05 + 1e-12:
                raise ModelDomainError(f"voltage {v} below model floor for sample {i}")
            drive = pow((1.0 - vt[i]) / (v - vt[i]), al[i]) * thermal
            best = INFINITY
            for r in range(n_r):
                f = 1.0 / (2.0 * nv[i, r] * sc[i, r] * drive)
                if f < best:
                    best = f
            out[i, j] = best
    return out_arr


def stress_grid(slowest, s_real, freqs, double g_fail):
    cdef double[:, ::1] sl = np.ascontiguousarray(slowest, dtype=np.float64)
    cdef double[::1] sr = np.ascontiguousarray(s_real, dtype=np.float64)
    cdef double[::1] fs = np.ascontiguousarray(freqs, dtype=np.float64)
    cdef Py_ssize_t n_s = sl.shape[0], n_v = sl.shape[1], n_f = fs.shape[0]
    out_arr = np.empty((n_s, n_v, n_f), dtype=np.int8)
    cdef signed char[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double fmax, m
    for i in range(n_s):
        for j in range(n_v):
            fmax = sr[i] * sl[i, j]
            for k in range(n_f):
                m = fmax / fs[k]
                if m < 1.0:
                    out[i, j, k] = 0
                elif m < 1.0 + g_fail:
                    out[i, j, k] = 1
                else:
                    out[i, j, k] = 2
    return out_arr


def min_safe_index(outcomes):
    cdef signed char[:, :, ::1] oc = np.ascontiguousarray(outcomes, dtype=np.int8)
    cdef Py_ssize_t n_s = oc.shape[0], n_v = oc.shape[1], n_f = oc.shape[2]
    out_arr = np.full((n_s, n_f), -1, dtype=np.int64)
    cdef long long[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    for i in range(n_s):
        for k in range(n_f):
            j = n_v - 1
            while j >= 0 and oc[i, j, k] == 2:
                j -= 1
            if j < n_v - 1:
                out[i, k] = j + 1
    return out_arr


def count_windows(freqs, double window, starts):
    cdef double[::1] fs = np.ascontiguousarray(freqs, dtype=np.float64)
    cdef long long[::1] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef Py_ssize_t n = fs.shape[0], i
    ends_arr = np.empty(n, dtype=np.int64)
    wrapped_arr = np.empty(n, dtype=np.bool_)
    cdef long long[::1] ends = ends_arr
    cdef unsigned char[::1] wr = wrapped_arr.view(np.uint8)
    cdef long long ticks
    for i in range(n):
        ticks = <long long>floor(fs[i] * window + 0.5)
        ends[i] = (st[i] + ticks) % COUNTER_MODULUS
        wr[i] = ticks >= COUNTER_MODULUS
    return ends_arr, wrapped_arr
