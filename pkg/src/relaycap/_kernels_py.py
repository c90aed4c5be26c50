"""Pure-numpy Monte Carlo kernels (fallback when the compiled extension is absent).

Both backends consume the same Philox draw layout (see channel.py) and produce
bit-identical integer counters, so backend choice never changes results; the
compiled kernel is just faster and allocation-free.

Counter layout returned by ``run_protocol`` (int64, length 3 + 2*(K+1)):

    [0]                 incremental-relaying outage events (for K >= 2 this is
                        the all-decode-or-none bounding event; exact for K = 1)
    [1]                 min-cut (cut-set) outage events
    [2]                 containment violations: full-sum shortfall without a
                        direct-link shortfall (must stay zero)
    [3 + m]             trials that used m+1 phases, m = 0..K
    [3 + (K+1) + m]     non-outage trials that succeeded at phase m+1
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox

from .channel import PHILOX_BLOCK, blocks_per_trial

BACKEND_NAME = "python"

# Trials per vectorized chunk; bounds peak memory at chunk * width doubles.
CHUNK_TRIALS = 1 << 18


def _generator_at(seed: int, start_trial: int, blocks: int) -> Generator:
    bg = Philox(key=seed)
    bg.advance(start_trial * blocks)
    return Generator(bg)


def run_protocol(seed: int, start_trial: int, n_trials: int, gamma: float,
                 sigma_sd: float, sigma_sr: np.ndarray, sigma_rd: np.ndarray) -> np.ndarray:
    """Simulate trials [start_trial, start_trial + n_trials) and return counters."""
    k = len(sigma_sr)
    width = PHILOX_BLOCK * blocks_per_trial(k)
    counts = np.zeros(3 + 2 * (k + 1), dtype=np.int64)
    gen = _generator_at(seed, start_trial, blocks_per_trial(k))
    sr = np.asarray(sigma_sr, dtype=float)
    rd = np.asarray(sigma_rd, dtype=float)

    done = 0
    while done < n_trials:
        n = min(CHUNK_TRIALS, n_trials - done)
        # method="inv" is one draw per variate and matches the compiled
        # kernel's -log1p(-u) bit for bit.
        e = gen.standard_exponential((n, width), method="inv")
        g_sd = e[:, 0] * sigma_sd
        g_sr = e[:, 1:1 + k] * sr
        g_rd = e[:, 1 + k:1 + 2 * k] * rd

        # Successive accumulation at the destination; column order matches the
        # scalar kernel so partial sums are bit-identical.
        mrc = g_sd.copy()
        shortfalls = np.zeros(n, dtype=np.int64)
        for j in range(k):
            shortfalls += mrc < gamma
            mrc = mrc + g_rd[:, j]
        bc = g_sd.copy()
        for j in range(k):
            bc = bc + g_sr[:, j]

        decode_fail = g_sr < gamma
        all_fail = decode_fail.all(axis=1)
        none_fail = (~decode_fail).all(axis=1)
        direct_short = g_sd < gamma
        mac_short = mrc < gamma

        outage_ir = (direct_short & all_fail) | (none_fail & mac_short)
        outage_csb = (bc < gamma) | mac_short
        phases = 1 + shortfalls

        counts[0] += int(np.count_nonzero(outage_ir))
        counts[1] += int(np.count_nonzero(outage_csb))
        counts[2] += int(np.count_nonzero(mac_short & ~direct_short))
        counts[3:3 + k + 1] += np.bincount(phases - 1, minlength=k + 1)
        counts[3 + k + 1:] += np.bincount(phases[~outage_ir] - 1, minlength=k + 1)
        done += n
    return counts


def run_sum_cdf(seed: int, start_trial: int, n_trials: int, x: float,
                means: np.ndarray) -> int:
    """Count trials whose sum of independent exponentials falls below x."""
    m = np.asarray(means, dtype=float)
    n_terms = len(m)
    blocks = -(-n_terms // PHILOX_BLOCK)
    width = PHILOX_BLOCK * blocks
    gen = _generator_at(seed, start_trial, blocks)

    hits = 0
    done = 0
    while done < n_trials:
        n = min(CHUNK_TRIALS, n_trials - done)
        e = gen.standard_exponential((n, width), method="inv")
        total = e[:, 0] * m[0]
        for j in range(1, n_terms):
            total = total + e[:, j] * m[j]
        hits += int(np.count_nonzero(total < x))
        done += n
    return hits
