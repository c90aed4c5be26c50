"""Closed-form outage and capacity expressions for incremental decode-and-forward
relaying in the low-SNR regime, plus exact finite-SNR outage oracles.

Conventions: rates are in bits per channel use over a full block, SNR is linear,
and all squared channel gains are exponential with the given means. The
asymptotic formulas are leading-order in the outage threshold gamma; results
derived from them should be trusted only when gamma is small (see
``in_asymptotic_domain``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .channel import ChannelVariances

__all__ = [
    "RatePoint",
    "PhaseCountModel",
    "KRelayCapacityBounds",
    "gamma_threshold",
    "outage_constant_ir",
    "outage_constant_csb",
    "sum2_exp_cdf",
    "hypoexp_cdf",
    "sum_cdf_growth_constant",
    "exact_outage_ir",
    "exact_outage_csb",
    "expected_phases_exact",
    "epsilon_capacity_base",
    "epsilon_capacity_ir",
    "epsilon_capacity_csb",
    "capacity_ratio_upper_bound",
    "capacity_ratio_finite",
    "placement_objective",
    "optimal_relay_distance",
    "k_relay_outage_constant_ir",
    "k_relay_outage_constant_csb",
    "k_relay_capacities",
    "in_asymptotic_domain",
    "ASYMPTOTIC_GAMMA_LIMIT",
]

# Heuristic domain-of-validity limit for the leading-order formulas.
ASYMPTOTIC_GAMMA_LIMIT = 0.1

# Relative mean difference below which two exponentials are treated as equal
# when evaluating sum CDFs (the distinct-means form cancels catastrophically).
EQUAL_MEANS_RTOL = 1e-6

# Sum CDFs are only supported up to this many terms.
MAX_SUM_TERMS = 16


def in_asymptotic_domain(gamma: float, limit: float = ASYMPTOTIC_GAMMA_LIMIT) -> bool:
    """Whether a threshold is small enough for the low-SNR formulas to apply."""
    return 0.0 <= gamma < limit


@dataclass(frozen=True)
class RatePoint:
    """A target rate / SNR / outage-budget triple with validated ranges."""

    rate: float
    snr: float
    epsilon: float

    def __post_init__(self):
        if not self.rate >= 0.0:
            raise ValueError(f"rate must be nonnegative, got {self.rate}")
        if not (self.snr > 0.0 and math.isfinite(self.snr)):
            raise ValueError(f"snr must be positive and finite, got {self.snr}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    def gamma(self, phases: int = 2) -> float:
        return gamma_threshold(self.rate, self.snr, phases)


def _pow2m1(x: float) -> float:
    """2**x - 1, accurate near zero and saturating to inf instead of raising."""
    try:
        return math.expm1(x * math.log(2.0))
    except OverflowError:
        return math.inf


def gamma_threshold(rate: float, snr: float, phases: int = 2) -> float:
    """Gain level below which a link cannot carry the per-phase rate.

    A block split into ``phases`` sub-blocks transmits at ``phases * rate`` per
    sub-block; the corresponding threshold is (2**(phases*rate) - 1) / snr.
    """
    if rate < 0.0:
        raise ValueError(f"rate must be nonnegative, got {rate}")
    if not snr > 0.0:
        raise ValueError(f"snr must be positive, got {snr}")
    if phases < 2:
        raise ValueError(f"need at least two phases, got {phases}")
    return _pow2m1(phases * rate) / snr


def outage_constant_ir(v: ChannelVariances) -> float:
    """Limit of p_out / gamma^2 for incremental relaying as gamma -> 0."""
    _require_single_relay(v)
    sd, sr, rd = v.sigma2_sd, v.sr, v.rd
    return (2.0 * rd + sr) / (2.0 * sd * sr * rd)


def outage_constant_csb(v: ChannelVariances) -> float:
    """Limit of p_out / gamma^2 for the cut-set bound as gamma -> 0."""
    _require_single_relay(v)
    sd, sr, rd = v.sigma2_sd, v.sr, v.rd
    return (rd + sr) / (2.0 * sd * sr * rd)


def sum2_exp_cdf(x: float, mean_a: float, mean_b: float) -> float:
    """CDF at x of the sum of two independent exponentials with the given means.

    Switches to the equal-means (Erlang) branch when the means differ by less
    than EQUAL_MEANS_RTOL relatively; the distinct-means expression divides by
    their difference and loses all precision there.
    """
    if x <= 0.0:
        return 0.0
    if abs(mean_a - mean_b) <= EQUAL_MEANS_RTOL * max(mean_a, mean_b):
        m = 0.5 * (mean_a + mean_b)
        r = x / m
        return 1.0 - math.exp(-r) * (1.0 + r)
    # Algebraically 1 - (a*exp(-x/a) - b*exp(-x/b)) / (a - b), arranged through
    # expm1 so the small-x regime keeps relative accuracy.
    num = mean_b * math.expm1(-x / mean_b) - mean_a * math.expm1(-x / mean_a)
    return num / (mean_a - mean_b)


def _pairwise_distinct(means: np.ndarray) -> bool:
    m = np.sort(means)
    return bool(np.all(np.diff(m) > EQUAL_MEANS_RTOL * m[1:]))


def hypoexp_cdf(x: float, means) -> float:
    """CDF at x of a sum of independent exponentials with arbitrary means.

    Uses the classical partial-fraction form when all means are pairwise
    distinct and a matrix-exponential (phase-type) evaluation otherwise, which
    stays stable for repeated or nearly repeated means.
    """
    means = np.asarray(means, dtype=float)
    if means.ndim != 1 or means.size == 0:
        raise ValueError("means must be a non-empty 1-D sequence")
    if means.size > MAX_SUM_TERMS:
        raise ValueError(f"at most {MAX_SUM_TERMS} terms supported, got {means.size}")
    if np.any(~np.isfinite(means)) or np.any(means <= 0.0):
        raise ValueError("means must be positive and finite")
    if x <= 0.0:
        return 0.0
    if means.size == 1:
        return -math.expm1(-x / means[0])
    rates = 1.0 / means
    if _pairwise_distinct(means):
        total = 0.0
        for i in range(rates.size):
            w = 1.0
            for j in range(rates.size):
                if j != i:
                    w *= rates[j] / (rates[j] - rates[i])
            total += w * math.exp(-rates[i] * x)
        return min(1.0, max(0.0, 1.0 - total))
    # Phase-type form: F(x) = 1 - e1' expm(Q x) 1 with Q upper-bidiagonal.
    n = rates.size
    q = np.zeros((n, n))
    for i in range(n):
        q[i, i] = -rates[i]
        if i + 1 < n:
            q[i, i + 1] = rates[i]
    survival = expm(q * x)[0, :].sum()
    return min(1.0, max(0.0, 1.0 - float(survival)))


def sum_cdf_growth_constant(means) -> float:
    """Limit of F(x) / x^n as x -> 0 for a sum of n independent exponentials.

    Equals 1 / (n! * prod(means)); the small-x CDF grows like that times x^n.
    """
    means = np.asarray(means, dtype=float)
    if means.ndim != 1 or means.size == 0:
        raise ValueError("means must be a non-empty 1-D sequence")
    if np.any(~np.isfinite(means)) or np.any(means <= 0.0):
        raise ValueError("means must be positive and finite")
    n = means.size
    return 1.0 / (math.factorial(n) * float(np.prod(means)))


def exact_outage_ir(gamma: float, v: ChannelVariances) -> float:
    """Exact finite-SNR outage probability of the two-phase incremental protocol.

    The protocol fails when both the direct and source-relay links are below
    the threshold, or when the relay decodes but the combined direct-plus-relay
    gain still falls short:

        p = P(g_sd < g) P(g_sr < g) + P(g_sr >= g) P(g_sd + g_rd < g)
    """
    _require_single_relay(v)
    if gamma < 0.0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    if gamma == 0.0:
        return 0.0
    pa = -math.expm1(-gamma / v.sigma2_sd)
    pb = -math.expm1(-gamma / v.sr)
    relay_decodes = math.exp(-gamma / v.sr)
    return pa * pb + relay_decodes * sum2_exp_cdf(gamma, v.sigma2_sd, v.rd)


def exact_outage_csb(gamma: float, v: ChannelVariances) -> float:
    """Exact finite-SNR probability that the min-cut gain falls below gamma.

    Outage iff min(g_sd + g_sr, g_sd + g_rd) < gamma; the two cut sums share
    g_sd, so this is evaluated by conditioning on the direct gain:

        P(no outage) = exp(-g/m_sd) + int_0^g f_sd(x) exp(-(g-x)(1/m_sr+1/m_rd)) dx
    """
    _require_single_relay(v)
    if gamma < 0.0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    if gamma == 0.0:
        return 0.0
    lam_sd = 1.0 / v.sigma2_sd
    lam_b = 1.0 / v.sr + 1.0 / v.rd
    delta = lam_sd - lam_b
    if delta == 0.0:
        integral = gamma
    else:
        integral = -math.expm1(-gamma * delta) / delta
    survive = math.exp(-gamma * lam_sd) + lam_sd * math.exp(-gamma * lam_b) * integral
    return min(1.0, max(0.0, 1.0 - survive))


def expected_phases_exact(gamma: float, v: ChannelVariances) -> float:
    """Mean number of transmission phases: 1 + sum_k P(shortfall entering phase k+1).

    The shortfall entering phase k+1 is the event that the direct gain plus the
    first k-1 relay contributions is still below the threshold; each term is a
    hypoexponential CDF. For one relay this reduces to 1 + P(g_sd < gamma).
    """
    if gamma < 0.0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    total = 1.0
    means = [v.sigma2_sd]
    for k in range(v.relays):
        total += hypoexp_cdf(gamma, means)
        means.append(v.sigma2_rd[k])
    return total


@dataclass(frozen=True)
class PhaseCountModel:
    """How the mean phase count E(N) is resolved when computing capacities.

    mode "target" substitutes E(N) = 1 + K*epsilon (the small outage budget is
    used as a proxy for the retransmission probability). mode "exact" (alias
    "k_relay" for multi-relay variances) solves the self-consistent long-run
    rate R = full_rate / E(N) with E(N) evaluated at the threshold of R itself.
    mode "fixed" pins E(N) to ``fixed_phases``, mainly for limit studies.
    """

    mode: str = "target"
    fixed_phases: float | None = None

    _MODES = ("target", "exact", "k_relay", "fixed")

    def __post_init__(self):
        if self.mode not in self._MODES:
            raise ValueError(f"mode must be one of {self._MODES}, got {self.mode!r}")
        if self.mode == "fixed":
            if self.fixed_phases is None:
                raise ValueError("fixed mode requires fixed_phases")
        elif self.fixed_phases is not None:
            raise ValueError("fixed_phases only applies to fixed mode")

    def check_phases(self, value: float, relays: int) -> float:
        if not 1.0 <= value <= relays + 1.0:
            raise ValueError(f"E(N) = {value} outside [1, {relays + 1}]")
        return value


def _require_single_relay(v: ChannelVariances) -> None:
    if v.relays != 1:
        raise ValueError(f"single-relay expression, got {v.relays} relays")


def _self_consistent_rate(full_rate: float, snr: float, v: ChannelVariances,
                          tol: float = 1e-10, max_iter: int = 100) -> tuple[float, float]:
    """Solve R = full_rate / E(N)(gamma(R)) for the long-run rate.

    ``full_rate`` is the log term of the capacity expression ((K+1) times the
    per-block rate whose outage hits the budget). Plain fixed-point iteration
    converges in a handful of steps in the low-SNR regime; a bisection fallback
    on the increasing map R * E(N)(gamma(R)) covers the rest.

    Returns (rate, phases_at_rate).
    """
    phases = v.relays + 1

    def expected(rate: float) -> float:
        return expected_phases_exact(gamma_threshold(rate, snr, phases), v)

    if full_rate == 0.0:
        return 0.0, expected(0.0)
    rate = full_rate
    for _ in range(max_iter):
        nxt = full_rate / expected(rate)
        if abs(nxt - rate) <= tol:
            return nxt, expected(nxt)
        rate = nxt
    lo, hi = 0.0, full_rate
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid * expected(mid) > full_rate:
            hi = mid
        else:
            lo = mid
    rate = 0.5 * (lo + hi)
    return rate, expected(rate)


def epsilon_capacity_base(snr: float, epsilon: float, v: ChannelVariances) -> float:
    """Low-SNR capacity at outage budget epsilon before phase-count accounting.

    Half the log of one plus snr times the threshold at which the asymptotic
    outage constant meets the budget: 0.5*log2(1 + snr*sqrt(epsilon/c_ir)).
    """
    RatePoint(rate=0.0, snr=snr, epsilon=epsilon)
    gamma_star = math.sqrt(epsilon / outage_constant_ir(v))
    return 0.5 * math.log2(1.0 + snr * gamma_star)


def epsilon_capacity_ir(snr: float, epsilon: float, v: ChannelVariances,
                        phase_model: PhaseCountModel | None = None) -> float:
    """Long-run capacity of incremental relaying: 2 C_base / E(N).

    The factor 2/E(N) credits the blocks where the direct link succeeds and
    only half the block is spent; it lies in [1, 2], so the result is between
    C_base and 2*C_base.
    """
    _require_single_relay(v)
    model = phase_model or PhaseCountModel()
    base = epsilon_capacity_base(snr, epsilon, v)
    if model.mode == "target":
        phases = model.check_phases(1.0 + v.relays * epsilon, v.relays)
        return 2.0 * base / phases
    if model.mode == "fixed":
        phases = model.check_phases(float(model.fixed_phases), v.relays)
        return 2.0 * base / phases
    rate, phases = _self_consistent_rate(2.0 * base, snr, v)
    model.check_phases(phases, v.relays)
    return rate


def epsilon_capacity_csb(snr: float, epsilon: float, v: ChannelVariances) -> float:
    """Capacity bound induced by the cut-set outage constant.

    This is a bound, not an exact capacity: the min-cut rate is an upper bound
    on any relaying scheme, while substituting E(N) <= 1 + epsilon makes the
    displayed quantity a lower bound on that cut-set capacity. Never assert it
    as exact.
    """
    _require_single_relay(v)
    RatePoint(rate=0.0, snr=snr, epsilon=epsilon)
    gamma_star = math.sqrt(epsilon / outage_constant_csb(v))
    return math.log2(1.0 + snr * gamma_star) / (1.0 + epsilon)


def capacity_ratio_upper_bound(v: ChannelVariances) -> float:
    """Vanishing-threshold upper bound on the IR-to-cut-set capacity ratio.

    sqrt((m_rd + m_sr) / (2 m_rd + m_sr)); ranges from 1/sqrt(2) (relay at the
    destination) up to 1 (relay at the source).
    """
    _require_single_relay(v)
    return math.sqrt((v.rd + v.sr) / (2.0 * v.rd + v.sr))


def capacity_ratio_finite(snr: float, epsilon: float, v: ChannelVariances,
                          phase_model: PhaseCountModel | None = None) -> float:
    """Finite-SNR ratio of the two capacity formulas (no small-log approximation)."""
    return epsilon_capacity_ir(snr, epsilon, v, phase_model) / epsilon_capacity_csb(snr, epsilon, v)


def placement_objective(d_sr: float, alpha: float) -> float:
    """Collinear placement objective 2*d^alpha + (1-d)^alpha, minimized by the optimum."""
    return 2.0 * d_sr ** alpha + (1.0 - d_sr) ** alpha


def optimal_relay_distance(alpha: float) -> float:
    """Capacity-maximizing source-relay distance 1 / (1 + 2^(1/(alpha-1))).

    Independent of SNR and of the outage budget; strictly below one half and
    increasing toward it as the path-loss exponent grows.
    """
    if not alpha > 1.0:
        raise ValueError(f"path-loss exponent must exceed 1, got {alpha}")
    return 1.0 / (1.0 + 2.0 ** (1.0 / (alpha - 1.0)))


def k_relay_outage_constant_ir(v: ChannelVariances) -> float:
    """Leading outage constant of the K-relay lower bound (all-decode-or-none).

    ((K+1)! prod(m_rd) + prod(m_sr)) / ((K+1)! m_sd prod(m_rd m_sr)); reduces
    to the single-relay constant at K = 1. This bounds p_out from below, so
    capacities built on it are upper bounds.
    """
    k = v.relays
    fact = math.factorial(k + 1)
    prod_rd = float(np.prod(v.sigma2_rd))
    prod_sr = float(np.prod(v.sigma2_sr))
    return (fact * prod_rd + prod_sr) / (fact * v.sigma2_sd * prod_rd * prod_sr)


def k_relay_outage_constant_csb(v: ChannelVariances) -> float:
    """Leading outage constant of the K-relay min-cut event (mix cuts ignored).

    (prod(m_rd) + prod(m_sr)) / ((K+1)! m_sd prod(m_rd m_sr)); reduces to the
    single-relay cut-set constant at K = 1.
    """
    k = v.relays
    fact = math.factorial(k + 1)
    prod_rd = float(np.prod(v.sigma2_rd))
    prod_sr = float(np.prod(v.sigma2_sr))
    return (prod_rd + prod_sr) / (fact * v.sigma2_sd * prod_rd * prod_sr)


@dataclass(frozen=True)
class KRelayCapacityBounds:
    """Capacity bounds for K successive relays.

    ``ir_upper`` bounds the incremental-relaying capacity from above (it is
    built on a lower bound of the outage probability); ``csb_lower`` bounds the
    cut-set capacity from below. ``expected_phases`` is E(N) at the IR solution.
    """

    ir_upper: float
    csb_lower: float
    expected_phases: float
    gamma_ir: float
    gamma_csb: float


def k_relay_capacities(snr: float, epsilon: float, v: ChannelVariances) -> KRelayCapacityBounds:
    """Evaluate both K-relay capacity bounds at the given SNR and outage budget."""
    RatePoint(rate=0.0, snr=snr, epsilon=epsilon)
    k = v.relays
    order = k + 1
    gamma_ir = (epsilon / k_relay_outage_constant_ir(v)) ** (1.0 / order)
    gamma_csb = (epsilon / k_relay_outage_constant_csb(v)) ** (1.0 / order)
    full_rate = math.log2(1.0 + snr * gamma_ir)
    ir_upper, phases = _self_consistent_rate(full_rate, snr, v)
    csb_lower = math.log2(1.0 + snr * gamma_csb) / (1.0 + k * epsilon)
    return KRelayCapacityBounds(
        ir_upper=ir_upper,
        csb_lower=csb_lower,
        expected_phases=phases,
        gamma_ir=gamma_ir,
        gamma_csb=gamma_csb,
    )
