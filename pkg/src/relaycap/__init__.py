"""Outage capacity of incremental decode-and-forward relaying at low SNR.

Closed-form asymptotics, exact finite-SNR outage oracles, a reproducible
Monte Carlo protocol simulator with a compiled kernel (pure-numpy fallback),
numerical capacity inversion, and a sweep CLI.
"""

from ._backend import BACKEND
from .analytic import (
    KRelayCapacityBounds,
    PhaseCountModel,
    RatePoint,
    capacity_ratio_finite,
    capacity_ratio_upper_bound,
    epsilon_capacity_base,
    epsilon_capacity_csb,
    epsilon_capacity_ir,
    exact_outage_csb,
    exact_outage_ir,
    expected_phases_exact,
    gamma_threshold,
    hypoexp_cdf,
    k_relay_capacities,
    k_relay_outage_constant_csb,
    k_relay_outage_constant_ir,
    optimal_relay_distance,
    outage_constant_csb,
    outage_constant_ir,
    placement_objective,
    sum_cdf_growth_constant,
)
from .channel import (
    ChannelVariances,
    FadingSample,
    NetworkGeometry,
    RandomStream,
    sample_fading,
    variances_from_geometry,
)
from .simulator import (
    MeanEstimate,
    OutageEstimate,
    SimConfig,
    TrialOutcome,
    estimate_expected_phases,
    estimate_outage,
    estimate_sum_cdf,
    estimate_throughput,
    simulate_csb_trial,
    simulate_ir_trial,
    simulate_k_relay_trial,
)
from .solver import (
    CapacitySolution,
    InfeasibleRateError,
    McBudgetError,
    invert_capacity,
    optimize_placement,
)

__version__ = "0.1.0"
