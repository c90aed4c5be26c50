"""Trial-level Monte Carlo engine for the incremental relaying protocol.

One trial = one fading block. The destination first listens to the source
alone; on a shortfall it collects successive relay contributions (maximum
ratio combining accumulates the squared gains). Estimators aggregate integer
event counters, so a fixed seed gives bit-identical results for any worker
count and either kernel backend.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._backend import BACKEND, get_kernels
from .analytic import gamma_threshold
from .channel import ChannelVariances, FadingSample

__all__ = [
    "BACKEND",
    "TrialOutcome",
    "OutageEstimate",
    "MeanEstimate",
    "SimConfig",
    "LowHitCountWarning",
    "wilson_interval",
    "simulate_ir_trial",
    "simulate_csb_trial",
    "simulate_k_relay_trial",
    "protocol_counts",
    "estimate_outage",
    "estimate_expected_phases",
    "estimate_throughput",
    "estimate_sum_cdf",
]

# Below this many observed hits the Wilson interval is still valid but wide;
# estimates are flagged so sweeps can surface under-sampled points.
MIN_RELIABLE_HITS = 100

Z_95 = 1.959963984540054


class LowHitCountWarning(UserWarning):
    """Fewer outage events than needed for a tight confidence interval."""


@dataclass(frozen=True)
class TrialOutcome:
    """Result of one protocol trial.

    ``event_a``: direct link below threshold. ``event_b``: no relay decoded
    (for one relay, the source-relay link failed). ``event_c``: the fully
    combined gain at the destination fell short. ``shortfalls`` holds the
    per-phase accumulation shortfall indicators that drive phase progression.
    """

    event_a: bool
    event_b: bool
    event_c: bool
    phases_used: int
    delivered_rate: float
    shortfalls: tuple[bool, ...] = field(default_factory=tuple)

    @property
    def outage(self) -> bool:
        return self.delivered_rate == 0.0


@dataclass(frozen=True)
class OutageEstimate:
    """Monte Carlo probability estimate with a Wilson-score confidence interval."""

    p_hat: float
    trials: int
    ci_low: float
    ci_high: float
    seed: int
    hits: int = 0

    def __post_init__(self):
        if not 0.0 <= self.ci_low <= self.p_hat <= self.ci_high <= 1.0:
            raise ValueError("confidence bounds must bracket the estimate in [0, 1]")


@dataclass(frozen=True)
class MeanEstimate:
    """Sample mean with a normal-approximation confidence interval."""

    mean: float
    trials: int
    ci_low: float
    ci_high: float
    seed: int


def wilson_interval(successes: int, total: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion; robust near p = 0."""
    if total <= 0:
        raise ValueError("total must be positive")
    if not 0 <= successes <= total:
        raise ValueError("successes must lie in [0, total]")
    n = float(total)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2.0 * n)) / denom
    spread = z * math.sqrt((p * (1.0 - p) + z * z / (4.0 * n)) / n) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - spread)
    hi = 1.0 if successes == total else min(1.0, center + spread)
    return lo, hi


@dataclass(frozen=True)
class SimConfig:
    """Parameters of a simulated operating point."""

    variances: ChannelVariances
    rate: float
    snr: float
    protocol: str = "ir"

    def __post_init__(self):
        if self.protocol not in ("ir", "csb"):
            raise ValueError(f"protocol must be 'ir' or 'csb', got {self.protocol!r}")
        if self.rate < 0.0:
            raise ValueError(f"rate must be nonnegative, got {self.rate}")
        if not self.snr > 0.0:
            raise ValueError(f"snr must be positive, got {self.snr}")

    @property
    def phases(self) -> int:
        return self.variances.relays + 1

    @property
    def gamma(self) -> float:
        return gamma_threshold(self.rate, self.snr, self.phases)

    @classmethod
    def from_gamma(cls, gamma: float, variances: ChannelVariances,
                   protocol: str = "ir", snr: float = 1.0) -> "SimConfig":
        """Operating point whose threshold is (up to rounding) the given gamma."""
        phases = variances.relays + 1
        rate = math.log2(1.0 + gamma * snr) / phases
        return cls(variances=variances, rate=rate, snr=snr, protocol=protocol)


def simulate_ir_trial(sample: FadingSample, gamma: float, rate: float = 1.0) -> TrialOutcome:
    """One block of the two-phase incremental protocol (single relay).

    Phase 1: source alone at twice the block rate; on success the block carries
    2*rate. On a direct-link shortfall the relay retransmits if it decoded, and
    the destination combines both copies; success then delivers rate, anything
    else is an outage.
    """
    if len(sample.g_sr) != 1:
        raise ValueError("incremental trial is defined for exactly one relay")
    a = sample.g_sd < gamma
    b = sample.g_sr[0] < gamma
    combined = sample.g_sd + sample.g_rd[0]
    c = combined < gamma
    assert not (c and not a), "combined-gain outage without direct-link outage"
    if not a:
        delivered = 2.0 * rate
    elif not b and not c:
        delivered = rate
    else:
        delivered = 0.0
    return TrialOutcome(
        event_a=a,
        event_b=b,
        event_c=c,
        phases_used=1 if not a else 2,
        delivered_rate=delivered,
        shortfalls=(a,),
    )


def simulate_csb_trial(sample: FadingSample, gamma: float) -> bool:
    """Min-cut outage: the smaller of the two cut gain sums is below threshold."""
    bc = sample.g_sd + sum(sample.g_sr)
    mac = sample.g_sd + sum(sample.g_rd)
    return min(bc, mac) < gamma


def simulate_k_relay_trial(sample: FadingSample, gamma: float, rate: float = 1.0) -> TrialOutcome:
    """One block of the successive K-relay protocol.

    Relays transmit one per phase while the accumulated gain at the destination
    is short of the threshold; the shortfall chain determines ``phases_used``.
    The outage indicator uses the all-decode-or-none simplification (every
    relay decodes the source or none does), which is exact at K = 1 and bounds
    the true outage from below otherwise.
    """
    k = len(sample.g_sr)
    if k < 1:
        raise ValueError("need at least one relay")
    mrc = sample.g_sd
    shortfalls = []
    for j in range(k):
        shortfalls.append(mrc < gamma)
        mrc = mrc + sample.g_rd[j]
    phases = 1 + sum(shortfalls)
    a = sample.g_sd < gamma
    c = mrc < gamma
    assert not (c and not a), "combined-gain outage without direct-link outage"
    all_fail = all(g < gamma for g in sample.g_sr)
    none_fail = all(g >= gamma for g in sample.g_sr)
    outage = (a and all_fail) or (none_fail and c)
    delivered = 0.0 if outage else (k + 1) * rate / phases
    return TrialOutcome(
        event_a=a,
        event_b=all_fail,
        event_c=c,
        phases_used=phases,
        delivered_rate=delivered,
        shortfalls=tuple(shortfalls),
    )


def _resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("RELAYCAP_THREADS")
    if env:
        return max(1, int(env))
    return 1


def _partition(total: int, parts: int) -> list[tuple[int, int]]:
    parts = min(parts, total)
    base, extra = divmod(total, parts)
    ranges = []
    start = 0
    for i in range(parts):
        n = base + (1 if i < extra else 0)
        ranges.append((start, n))
        start += n
    return ranges


def _run_partitioned(fn, trials: int, workers: int):
    """Run a pure (start, n) -> counts kernel over contiguous trial ranges.

    Counters are integers, so merging is exact and the partitioning cannot
    change the result; parallelism is purely a speed knob.
    """
    ranges = _partition(trials, workers)
    if len(ranges) == 1:
        return fn(0, trials)
    with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
        futures = [pool.submit(fn, start, n) for start, n in ranges]
        results = [f.result() for f in futures]
    total = results[0]
    for r in results[1:]:
        total = total + r
    return total


def protocol_counts(config: SimConfig, trials: int, seed: int,
                    workers: int | None = None, backend: str | None = None) -> np.ndarray:
    """Raw event counters for a batch of trials (layout in _kernels_py)."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    kern = get_kernels(backend)
    v = config.variances
    gamma = config.gamma
    sr = np.asarray(v.sigma2_sr, dtype=float)
    rd = np.asarray(v.sigma2_rd, dtype=float)

    def run(start: int, n: int) -> np.ndarray:
        return kern.run_protocol(seed, start, n, gamma, v.sigma2_sd, sr, rd)

    counts = _run_partitioned(run, int(trials), _resolve_workers(workers))
    if counts[2] != 0:
        raise RuntimeError(
            f"event containment violated in {counts[2]} trials; kernel defect"
        )
    return counts


def _outage_from_hits(hits: int, trials: int, seed: int) -> OutageEstimate:
    if hits < MIN_RELIABLE_HITS:
        warnings.warn(
            f"only {hits} hits in {trials} trials; confidence interval is wide",
            LowHitCountWarning,
            stacklevel=3,
        )
    lo, hi = wilson_interval(hits, trials)
    p = hits / trials
    return OutageEstimate(p_hat=p, trials=trials, ci_low=min(lo, p),
                          ci_high=max(hi, p), seed=seed, hits=hits)


def estimate_outage(config: SimConfig, trials: int, seed: int,
                    workers: int | None = None, backend: str | None = None) -> OutageEstimate:
    """Monte Carlo outage probability for the configured protocol.

    For "ir" with several relays this estimates the all-decode-or-none
    bounding event (exact at K = 1); for "csb" it is the min-cut event.
    """
    counts = protocol_counts(config, trials, seed, workers, backend)
    hits = int(counts[0] if config.protocol == "ir" else counts[1])
    return _outage_from_hits(hits, int(trials), seed)


def _discrete_mean_ci(values: np.ndarray, freqs: np.ndarray, trials: int,
                      seed: int) -> MeanEstimate:
    n = float(trials)
    mean = float(np.dot(freqs, values)) / n
    second = float(np.dot(freqs, values * values)) / n
    var = max(0.0, second - mean * mean) * (n / max(1.0, n - 1.0))
    half = Z_95 * math.sqrt(var / n)
    return MeanEstimate(mean=mean, trials=trials, ci_low=mean - half,
                        ci_high=mean + half, seed=seed)


def estimate_expected_phases(config: SimConfig, trials: int, seed: int,
                             workers: int | None = None,
                             backend: str | None = None) -> MeanEstimate:
    """Mean number of transmission phases actually used per block."""
    k = config.variances.relays
    counts = protocol_counts(config, trials, seed, workers, backend)
    hist = counts[3:3 + k + 1].astype(float)
    phases = np.arange(1, k + 2, dtype=float)
    return _discrete_mean_ci(phases, hist, int(trials), seed)


def estimate_throughput(config: SimConfig, trials: int, seed: int,
                        workers: int | None = None,
                        backend: str | None = None) -> MeanEstimate:
    """Mean delivered rate per occupied sub-block.

    A block that succeeds after m phases delivers (K+1)*rate/m bits per channel
    use over the sub-blocks it occupied; outage blocks deliver zero.
    """
    k = config.variances.relays
    counts = protocol_counts(config, trials, seed, workers, backend)
    success = counts[3 + k + 1:].astype(float)
    phases = np.arange(1, k + 2, dtype=float)
    rates = (k + 1) * config.rate / phases
    return _discrete_mean_ci(rates, success, int(trials), seed)


def estimate_sum_cdf(means, x: float, trials: int, seed: int,
                     workers: int | None = None,
                     backend: str | None = None) -> OutageEstimate:
    """Monte Carlo CDF at x of a sum of independent exponentials."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    kern = get_kernels(backend)
    m = np.asarray(means, dtype=float)

    def run(start: int, n: int) -> int:
        return kern.run_sum_cdf(seed, start, n, x, m)

    hits = _run_partitioned(run, int(trials), _resolve_workers(workers))
    return _outage_from_hits(int(hits), int(trials), seed)
