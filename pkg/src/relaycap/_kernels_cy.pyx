# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte Carlo kernels: single-pass, allocation-free trial loops.

Counter layout and draw consumption are documented in _kernels_py.py; the two
backends are bit-identical by construction (same Philox stream, same
-log1p(-u) transform, same accumulation order).
"""

import numpy as np
from numpy.random import Philox

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport log1p
from numpy.random cimport bitgen_t

BACKEND_NAME = "cython"

cdef const char *CAPSULE_NAME = "BitGenerator"

cdef enum:
    MAX_RELAYS = 15  # draw layout caps sum terms at 2*MAX_RELAYS + 1


cdef bitgen_t *_get_bitgen(object bit_generator) except NULL:
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, CAPSULE_NAME):
        raise ValueError("invalid BitGenerator capsule")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, CAPSULE_NAME)


def run_protocol(seed, start_trial, n_trials, double gamma,
                 double sigma_sd, sigma_sr, sigma_rd):
    """Simulate trials [start_trial, start_trial + n_trials); returns counters."""
    cdef double[::1] sr = np.ascontiguousarray(sigma_sr, dtype=np.float64)
    cdef double[::1] rd = np.ascontiguousarray(sigma_rd, dtype=np.float64)
    cdef Py_ssize_t k = sr.shape[0]
    if rd.shape[0] != k:
        raise ValueError("sigma_sr and sigma_rd must have equal length")
    if k < 1 or k > MAX_RELAYS:
        raise ValueError(f"relay count must be in [1, {MAX_RELAYS}]")

    cdef Py_ssize_t draws = 1 + 2 * k
    cdef Py_ssize_t pad = (4 - draws % 4) % 4  # cdivision: keep operands nonnegative
    counts_arr = np.zeros(3 + 2 * (k + 1), dtype=np.int64)
    cdef long long[::1] counts = counts_arr

    bit_generator = Philox(key=int(seed))
    bit_generator.advance(int(start_trial) * ((draws + pad) // 4))
    cdef bitgen_t *rng = _get_bitgen(bit_generator)

    cdef Py_ssize_t n = int(n_trials)
    cdef Py_ssize_t t, j, p
    cdef double g_sd, mrc, bc, g
    cdef double g_sr[MAX_RELAYS]
    cdef double g_rd[MAX_RELAYS]
    cdef int shortfalls, all_fail, none_fail
    cdef bint direct_short, mac_short, outage

    with bit_generator.lock, nogil:
        for t in range(n):
            g_sd = sigma_sd * (-log1p(-rng.next_double(rng.state)))
            for j in range(k):
                g_sr[j] = sr[j] * (-log1p(-rng.next_double(rng.state)))
            for j in range(k):
                g_rd[j] = rd[j] * (-log1p(-rng.next_double(rng.state)))
            for p in range(pad):
                rng.next_double(rng.state)

            mrc = g_sd
            bc = g_sd
            shortfalls = 0
            all_fail = 1
            none_fail = 1
            for j in range(k):
                if mrc < gamma:
                    shortfalls += 1
                mrc = mrc + g_rd[j]
                if g_sr[j] < gamma:
                    none_fail = 0
                else:
                    all_fail = 0
                bc = bc + g_sr[j]

            direct_short = g_sd < gamma
            mac_short = mrc < gamma
            outage = (direct_short and all_fail) or (none_fail and mac_short)

            if outage:
                counts[0] += 1
            if (bc < gamma) or mac_short:
                counts[1] += 1
            if mac_short and not direct_short:
                counts[2] += 1
            counts[3 + shortfalls] += 1
            if not outage:
                counts[3 + (k + 1) + shortfalls] += 1
    return counts_arr


def run_sum_cdf(seed, start_trial, n_trials, double x, means):
    """Count trials whose sum of independent exponentials falls below x."""
    cdef double[::1] m = np.ascontiguousarray(means, dtype=np.float64)
    cdef Py_ssize_t terms = m.shape[0]
    if terms < 1 or terms > 2 * MAX_RELAYS + 1:
        raise ValueError(f"term count must be in [1, {2 * MAX_RELAYS + 1}]")
    cdef Py_ssize_t pad = (4 - terms % 4) % 4  # cdivision: keep operands nonnegative

    bit_generator = Philox(key=int(seed))
    bit_generator.advance(int(start_trial) * ((terms + pad) // 4))
    cdef bitgen_t *rng = _get_bitgen(bit_generator)

    cdef Py_ssize_t n = int(n_trials)
    cdef Py_ssize_t t, j, p
    cdef double total
    cdef long long hits = 0

    with bit_generator.lock, nogil:
        for t in range(n):
            total = m[0] * (-log1p(-rng.next_double(rng.state)))
            for j in range(1, terms):
                total = total + m[j] * (-log1p(-rng.next_double(rng.state)))
            for p in range(pad):
                rng.next_double(rng.state)
            if total < x:
                hits += 1
    return int(hits)
