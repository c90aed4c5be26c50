"""Numerical inversion of outage curves and relay-placement optimization."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from typing import Callable

from .analytic import (
    exact_outage_ir,
    gamma_threshold,
    optimal_relay_distance,
    outage_constant_ir,
    placement_objective,
)
from .channel import ChannelVariances
from .simulator import LowHitCountWarning, SimConfig, estimate_outage

__all__ = [
    "CapacitySolution",
    "InfeasibleRateError",
    "McBudgetError",
    "invert_capacity",
    "optimize_placement",
]

MAX_BRACKET_DOUBLINGS = 40
INITIAL_BRACKET_RATE = 1.0


class InfeasibleRateError(RuntimeError):
    """The outage budget cannot be bracketed by any rate."""


class McBudgetError(RuntimeError):
    """Monte Carlo trials exhausted before the interval separated from the budget."""


@dataclass(frozen=True)
class CapacitySolution:
    """Largest rate whose outage stays within the budget."""

    rate: float
    achieved_outage: float
    iterations: int
    evaluator: str

    def __post_init__(self):
        if self.rate < 0.0:
            raise ValueError("rate must be nonnegative")


class _ExactEvaluator:
    """Deterministic outage as a function of rate; -1/0/+1 comparison vs epsilon."""

    tag = "exact"

    def __init__(self, fn: Callable[[float], float]):
        self.fn = fn
        self.calls = 0

    def outage(self, rate: float) -> float:
        self.calls += 1
        return self.fn(rate)

    def compare(self, rate: float, epsilon: float) -> int:
        p = self.outage(rate)
        return -1 if p <= epsilon else 1


class _McEvaluator:
    """CI-aware comparison: a bisection step is taken only once the Wilson
    interval at the midpoint excludes the budget; otherwise trials are
    quadrupled up to the budget cap. Plain bisection on noisy estimates
    does not converge."""

    tag = "monte_carlo"

    def __init__(self, v: ChannelVariances, snr: float, trials: int,
                 budget: int, seed: int, workers: int | None):
        self.v = v
        self.snr = snr
        self.trials = int(trials)
        self.budget = int(budget)
        self.seed = int(seed)
        self.workers = workers
        self.calls = 0

    def outage(self, rate: float) -> float:
        return self._estimate(rate, self.trials).p_hat

    def _estimate(self, rate: float, trials: int):
        self.calls += 1
        config = SimConfig(variances=self.v, rate=rate, snr=self.snr, protocol="ir")
        # one fresh sub-stream per evaluation, still a pure function of the seed
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LowHitCountWarning)
            return estimate_outage(config, trials, seed=self.seed + self.calls,
                                   workers=self.workers)

    def compare(self, rate: float, epsilon: float) -> int:
        trials = self.trials
        while True:
            est = self._estimate(rate, trials)
            if est.ci_high < epsilon:
                return -1
            if est.ci_low > epsilon:
                return 1
            trials *= 4
            if trials > self.budget:
                raise McBudgetError(
                    f"interval still straddles epsilon={epsilon} at rate={rate} "
                    f"after {trials // 4} trials (budget {self.budget})"
                )


def _make_evaluator(evaluator, v: ChannelVariances, snr: float, mc_trials: int,
                    mc_budget: int, seed: int, workers: int | None):
    if callable(evaluator):
        ev = _ExactEvaluator(evaluator)
        ev.tag = "exact"
        return ev
    if evaluator == "exact":
        return _ExactEvaluator(lambda r: exact_outage_ir(gamma_threshold(r, snr, v.relays + 1), v))
    if evaluator == "asymptotic":
        c = outage_constant_ir(v)
        ev = _ExactEvaluator(lambda r: min(1.0, c * gamma_threshold(r, snr, v.relays + 1) ** 2))
        ev.tag = "asymptotic"
        return ev
    if evaluator == "mc":
        return _McEvaluator(v, snr, mc_trials, mc_budget, seed, workers)
    raise ValueError(f"evaluator must be 'exact', 'asymptotic', 'mc' or callable, got {evaluator!r}")


def invert_capacity(epsilon: float, snr: float, v: ChannelVariances,
                    evaluator="exact", tol: float = 1e-9, *,
                    mc_trials: int = 100_000, mc_budget: int = 50_000_000,
                    seed: int = 0, workers: int | None = None) -> CapacitySolution:
    """Largest rate whose outage probability stays at or below epsilon.

    Bisection on the monotone outage-vs-rate curve: the upper bracket starts at
    one bit and doubles until it overshoots the budget, then the bracket is
    narrowed below ``tol``. The returned rate is the certified-feasible lower
    end of the final bracket.

    Raises InfeasibleRateError when no bracket exists (outage already above the
    budget at zero rate, or never above it after 40 doublings) and
    McBudgetError when the Monte Carlo evaluator cannot separate its interval
    from epsilon within the trial budget.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    ev = _make_evaluator(evaluator, v, snr, mc_trials, mc_budget, seed, workers)

    if ev.compare(0.0, epsilon) > 0:
        raise InfeasibleRateError(f"outage exceeds epsilon={epsilon} already at zero rate")
    lo = 0.0
    hi = INITIAL_BRACKET_RATE
    doublings = 0
    while ev.compare(hi, epsilon) < 0:
        lo = hi
        hi *= 2.0
        doublings += 1
        if doublings > MAX_BRACKET_DOUBLINGS:
            raise InfeasibleRateError(
                f"outage never exceeded epsilon={epsilon} up to rate {hi}; cannot bracket"
            )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ev.compare(mid, epsilon) <= 0:
            lo = mid
        else:
            hi = mid
    return CapacitySolution(rate=lo, achieved_outage=ev.outage(lo) if lo > 0.0 else 0.0,
                            iterations=ev.calls, evaluator=ev.tag)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _objective_hi(d: float, alpha: np.longdouble) -> np.longdouble:
    # Extended precision pushes the comparison plateau around the minimum from
    # ~sqrt(eps64) (~7e-9) down to ~1.5e-10, below the agreement tolerance;
    # double precision would make the last golden-section steps coin flips.
    x = np.longdouble(d)
    return 2.0 * x ** alpha + (np.longdouble(1.0) - x) ** alpha


def optimize_placement(alpha: float, tol: float = 1e-10) -> float:
    """Golden-section minimizer of the collinear placement objective on (0, 1).

    The objective is strictly convex for alpha > 1, so the search needs no
    restarts; the result matches the closed form within the bracket tolerance.
    """
    if not alpha > 1.0:
        raise ValueError(f"path-loss exponent must exceed 1, got {alpha}")
    alpha_hi = np.longdouble(alpha)
    a, b = 0.0, 1.0
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc = _objective_hi(c, alpha_hi)
    fd = _objective_hi(d, alpha_hi)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = _objective_hi(c, alpha_hi)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = _objective_hi(d, alpha_hi)
    return 0.5 * (a + b)


def placement_agreement(alpha: float, tol: float = 1e-10) -> float:
    """Absolute gap between the numeric optimum and the closed form (diagnostic)."""
    return abs(optimize_placement(alpha, tol) - optimal_relay_distance(alpha))
