"""Batch front-end: parameter sweeps with analytic columns, Monte Carlo columns,
and validity flags, emitted as CSV or JSON.

Exit codes: 0 success, 2 bad flags or config, 3 infeasible solve, 4 Monte
Carlo budget exhausted. All sweeps are deterministic for a fixed seed; every
sweep point reuses the same seed (common random numbers), which makes Monte
Carlo columns move monotonically along monotone sweeps.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import analytic, solver
from .channel import ChannelVariances, NetworkGeometry, variances_from_geometry
from .config import ConfigError, load_kv
from .simulator import SimConfig, estimate_expected_phases, estimate_outage

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_MC_BUDGET = 4

CSV_HEADER = ("param", "analytic", "mc_estimate", "ci_low", "ci_high", "trials", "validity")


@dataclass(frozen=True)
class SweepRow:
    param: float
    analytic: float
    mc_estimate: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None
    trials: int = 0
    validity: int = 1


def _sig(value: float | None) -> str:
    if value is None:
        return ""
    return f"{value:.12g}"


def render_csv(rows: list[SweepRow]) -> str:
    lines = [",".join(CSV_HEADER)]
    for r in rows:
        lines.append(",".join([
            _sig(r.param), _sig(r.analytic), _sig(r.mc_estimate),
            _sig(r.ci_low), _sig(r.ci_high), str(r.trials), str(r.validity),
        ]))
    return "\n".join(lines) + "\n"


def render_json(rows: list[SweepRow]) -> str:
    def num(v):
        return None if v is None else float(f"{v:.12g}")

    payload = [
        {
            "param": num(r.param),
            "analytic": num(r.analytic),
            "mc_estimate": num(r.mc_estimate),
            "ci_low": num(r.ci_low),
            "ci_high": num(r.ci_high),
            "trials": r.trials,
            "validity": r.validity,
        }
        for r in rows
    ]
    return json.dumps(payload, indent=2) + "\n"


def emit_report(rows: list[SweepRow], fmt: str, out: str | None) -> None:
    """Write the result table as CSV or JSON to a path or stdout (LF endings)."""
    text = render_csv(rows) if fmt == "csv" else render_json(rows)
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise RuntimeError(f"cannot write report to {out}: {exc}") from exc


def parse_range(spec: str) -> list[float]:
    """Parse 'a:b:step' (inclusive ends), 'a:b:xfactor' (geometric), or 'a'."""
    parts = spec.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise ConfigError(f"range must be 'a:b:step' or a single value, got {spec!r}")
    a, b = float(parts[0]), float(parts[1])
    step_s = parts[2].strip()
    values: list[float] = []
    if step_s.startswith("x"):
        factor = float(step_s[1:])
        if not factor > 1.0 or a <= 0.0 or b < a:
            raise ConfigError(f"geometric range needs 0 < a <= b and factor > 1: {spec!r}")
        x = a
        while x < b * (1.0 + 1e-12):
            values.append(x)
            x *= factor
        return values
    step = float(step_s)
    if step <= 0.0 or b < a:
        raise ConfigError(f"range needs a <= b and step > 0: {spec!r}")
    n = int(math.floor((b - a) / step + 1e-9))
    return [a + i * step for i in range(n + 1)]


def _snr_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def _parse_trials(text: str) -> int:
    n = int(float(text))
    if n < 1:
        raise ConfigError(f"trials must be positive, got {text!r}")
    return n


def _csv_floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(","))


def _sweep_workers(args) -> int:
    if getattr(args, "workers", None):
        return max(1, int(args.workers))
    env = os.environ.get("RELAYCAP_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _map_points(points, fn, workers: int) -> list[SweepRow]:
    """Evaluate sweep points on a bounded pool; rows come back in sweep order."""
    if workers <= 1 or len(points) <= 1:
        return [fn(p) for p in points]
    with ThreadPoolExecutor(max_workers=min(workers, len(points))) as pool:
        return list(pool.map(fn, points))


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    parser.add_argument("--trials", type=str, default=None,
                        help="Monte Carlo trials per point, e.g. 1e6")
    parser.add_argument("--evaluator", choices=("exact", "asymptotic", "mc"), default=None)
    parser.add_argument("--out", type=str, default=None, help="output path (default stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    parser.add_argument("--config", type=str, default=None,
                        help="key-value config file; flags override its entries")
    parser.add_argument("--workers", type=int, default=None,
                        help="sweep worker bound (default RELAYCAP_THREADS or CPU count)")


def _add_channel(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--d-sr", type=str, default=None,
                        help="source-relay distance(s), comma separated for several relays")
    parser.add_argument("--d-rd", type=str, default=None,
                        help="relay-destination distance(s); default 1-d_sr for one relay")
    parser.add_argument("--alpha", type=float, default=None, help="path-loss exponent")
    parser.add_argument("--sigma-sd", type=float, default=None)
    parser.add_argument("--sigma-sr", type=str, default=None,
                        help="variance(s) sigma^2_sr, overrides distances")
    parser.add_argument("--sigma-rd", type=str, default=None)


class _Options:
    """Merged view of CLI flags over config-file entries over defaults."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.kv = load_kv(args.config) if getattr(args, "config", None) else {}

    def get(self, name: str, default=None, conv=None):
        flag = getattr(self.args, name.replace("-", "_"), None)
        if flag is not None:
            return conv(flag) if conv else flag
        if name in self.kv:
            raw = self.kv[name]
            try:
                return conv(raw) if conv else raw
            except ValueError as exc:
                raise ConfigError(f"config key {name}={raw!r}: {exc}") from exc
        return default


def _variances(opt: _Options) -> ChannelVariances:
    sigma_sr = opt.get("sigma-sr", conv=str)
    if sigma_sr is not None:
        sd = opt.get("sigma-sd", 1.0, float)
        sr = _csv_floats(sigma_sr)
        sigma_rd = opt.get("sigma-rd", conv=str)
        if sigma_rd is None:
            raise ConfigError("--sigma-rd is required when --sigma-sr is given")
        return ChannelVariances(sigma2_sd=sd, sigma2_sr=sr, sigma2_rd=_csv_floats(sigma_rd))
    alpha = opt.get("alpha", 3.0, float)
    d_sr = _csv_floats(opt.get("d-sr", "0.5", str))
    d_rd_s = opt.get("d-rd", conv=str)
    if d_rd_s is None:
        if len(d_sr) != 1:
            raise ConfigError("--d-rd is required for more than one relay")
        geometry = NetworkGeometry.collinear(d_sr[0], alpha)
    else:
        geometry = NetworkGeometry(d_sr=d_sr, d_rd=_csv_floats(d_rd_s), alpha=alpha)
    return variances_from_geometry(geometry)


def _mc_columns(est) -> dict:
    return {"mc_estimate": est.p_hat, "ci_low": est.ci_low, "ci_high": est.ci_high,
            "trials": est.trials}


def cmd_outage(opt: _Options) -> list[SweepRow]:
    v = _variances(opt)
    protocol = opt.get("protocol", "ir", str)
    rate = opt.get("rate", 0.01, float)
    trials = _parse_trials(str(opt.get("trials", "1e6")))
    seed = opt.get("seed", 0, int)
    evaluator = opt.get("evaluator", "exact", str)
    snr_range = opt.get("snr-db", conv=str)
    if snr_range is None:
        raise ConfigError("outage needs --snr-db (value or range)")
    phases = v.relays + 1

    def analytic_value(gamma: float) -> float:
        if evaluator != "asymptotic" and v.relays == 1:
            return (analytic.exact_outage_ir(gamma, v) if protocol == "ir"
                    else analytic.exact_outage_csb(gamma, v))
        c = (analytic.k_relay_outage_constant_ir(v) if protocol == "ir"
             else analytic.k_relay_outage_constant_csb(v))
        return min(1.0, c * gamma ** phases)

    def point(snr_db: float) -> SweepRow:
        snr = _snr_linear(snr_db)
        cfg = SimConfig(variances=v, rate=rate, snr=snr, protocol=protocol)
        gamma = cfg.gamma
        est = estimate_outage(cfg, trials, seed, workers=1)
        exact_analytic = evaluator != "asymptotic" and v.relays == 1
        valid = 1 if (exact_analytic or analytic.in_asymptotic_domain(gamma)) else 0
        return SweepRow(param=snr_db, analytic=analytic_value(gamma),
                        validity=valid, **_mc_columns(est))

    return _map_points(parse_range(snr_range), point, _sweep_workers(opt.args))


def cmd_phases(opt: _Options) -> list[SweepRow]:
    v = _variances(opt)
    rate = opt.get("rate", 0.01, float)
    trials = _parse_trials(str(opt.get("trials", "1e6")))
    seed = opt.get("seed", 0, int)
    snr_range = opt.get("snr-db", conv=str)
    if snr_range is None:
        raise ConfigError("phases needs --snr-db (value or range)")

    def point(snr_db: float) -> SweepRow:
        snr = _snr_linear(snr_db)
        cfg = SimConfig(variances=v, rate=rate, snr=snr, protocol="ir")
        est = estimate_expected_phases(cfg, trials, seed, workers=1)
        return SweepRow(param=snr_db,
                        analytic=analytic.expected_phases_exact(cfg.gamma, v),
                        mc_estimate=est.mean, ci_low=est.ci_low, ci_high=est.ci_high,
                        trials=est.trials)

    return _map_points(parse_range(snr_range), point, _sweep_workers(opt.args))


def cmd_capacity(opt: _Options) -> list[SweepRow]:
    v = _variances(opt)
    protocol = opt.get("protocol", "ir", str)
    evaluator = opt.get("evaluator", "exact", str)
    trials = _parse_trials(str(opt.get("trials", "1e5")))
    seed = opt.get("seed", 0, int)
    eps_range = opt.get("eps-range", conv=str)
    snr_db = opt.get("snr-db", 0.0, float)
    if eps_range is None:
        raise ConfigError("capacity needs --eps-range (value or range, e.g. 1e-5:1e-2:x10)")
    snr = _snr_linear(snr_db)

    def closed_form(eps: float) -> float:
        if protocol == "base":
            return analytic.epsilon_capacity_base(snr, eps, v)
        if protocol == "csb":
            return analytic.epsilon_capacity_csb(snr, eps, v)
        return analytic.epsilon_capacity_ir(snr, eps, v)

    def point(eps: float) -> SweepRow:
        used_trials = 0
        if protocol == "csb":
            # invert the exact min-cut outage oracle, then apply the
            # phase-count discount of the bound
            sol = solver.invert_capacity(
                eps, snr, v,
                evaluator=lambda r: analytic.exact_outage_csb(
                    analytic.gamma_threshold(r, snr, v.relays + 1), v),
            )
            numeric = 2.0 * sol.rate / (1.0 + eps)
        else:
            budget = int(float(opt.get("mc-budget", "5e7", str)))
            sol = solver.invert_capacity(eps, snr, v, evaluator=evaluator,
                                         seed=seed, mc_trials=trials,
                                         mc_budget=budget, workers=1)
            if evaluator == "mc":
                used_trials = trials
            gamma = analytic.gamma_threshold(sol.rate, snr, v.relays + 1)
            numeric = (sol.rate if protocol == "base"
                       else 2.0 * sol.rate / analytic.expected_phases_exact(gamma, v))
        gamma = analytic.gamma_threshold(sol.rate, snr, v.relays + 1)
        return SweepRow(param=eps, analytic=closed_form(eps), mc_estimate=numeric,
                        trials=used_trials,
                        validity=1 if analytic.in_asymptotic_domain(gamma) else 0)

    return _map_points(parse_range(eps_range), point, _sweep_workers(opt.args))


def cmd_placement(opt: _Options) -> list[SweepRow]:
    alpha_range = opt.get("alpha-range", "2:5:0.05", str)

    def point(alpha: float) -> SweepRow:
        return SweepRow(param=alpha,
                        analytic=analytic.optimal_relay_distance(alpha),
                        mc_estimate=solver.optimize_placement(alpha))

    return _map_points(parse_range(alpha_range), point, _sweep_workers(opt.args))


def cmd_delta(opt: _Options) -> list[SweepRow]:
    dsr_range = opt.get("dsr-range", "0.02:0.98:0.02", str)
    alpha = opt.get("alpha", 3.0, float)
    eps = opt.get("epsilon", 1e-4, float)
    snr = _snr_linear(opt.get("snr-db", 0.0, float))

    def point(d_sr: float) -> SweepRow:
        v = variances_from_geometry(NetworkGeometry.collinear(d_sr, alpha))
        gamma = math.sqrt(eps / analytic.outage_constant_ir(v))
        return SweepRow(param=d_sr,
                        analytic=analytic.capacity_ratio_upper_bound(v),
                        mc_estimate=analytic.capacity_ratio_finite(snr, eps, v),
                        validity=1 if analytic.in_asymptotic_domain(gamma) else 0)

    return _map_points(parse_range(dsr_range), point, _sweep_workers(opt.args))


def cmd_krelay(opt: _Options) -> list[SweepRow]:
    v = _variances(opt)
    if v.relays < 1:
        raise ConfigError("krelay needs at least one relay")
    protocol = opt.get("protocol", "ir", str)
    quantity = opt.get("quantity", "outage", str)
    seed = opt.get("seed", 0, int)
    trials = _parse_trials(str(opt.get("trials", "1e6")))
    phases = v.relays + 1
    constant = (analytic.k_relay_outage_constant_ir(v) if protocol == "ir"
                else analytic.k_relay_outage_constant_csb(v))

    if quantity == "capacity":
        eps_range = opt.get("eps-range", conv=str)
        if eps_range is None:
            raise ConfigError("krelay capacity needs --eps-range")
        snr = _snr_linear(opt.get("snr-db", 0.0, float))

        def cap_point(eps: float) -> SweepRow:
            bounds = analytic.k_relay_capacities(snr, eps, v)
            value = bounds.ir_upper if protocol == "ir" else bounds.csb_lower
            gamma = bounds.gamma_ir if protocol == "ir" else bounds.gamma_csb
            return SweepRow(param=eps, analytic=value,
                            validity=1 if analytic.in_asymptotic_domain(gamma) else 0)

        return _map_points(parse_range(eps_range), cap_point, _sweep_workers(opt.args))

    rate = opt.get("rate", 0.01, float)
    snr_range = opt.get("snr-db", conv=str)
    if snr_range is None:
        raise ConfigError("krelay outage needs --snr-db (value or range)")

    def point(snr_db: float) -> SweepRow:
        snr = _snr_linear(snr_db)
        cfg = SimConfig(variances=v, rate=rate, snr=snr, protocol=protocol)
        gamma = cfg.gamma
        est = estimate_outage(cfg, trials, seed, workers=1)
        return SweepRow(param=snr_db, analytic=min(1.0, constant * gamma ** phases),
                        validity=1 if analytic.in_asymptotic_domain(gamma) else 0,
                        **_mc_columns(est))

    return _map_points(parse_range(snr_range), point, _sweep_workers(opt.args))


# Accept dB ranges like -30:-10:2 as option values, not option names.
_NEGATIVE_VALUE = re.compile(r"^-\d+(?:[\d.:eE+-]*)$")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaycap",
        description="Outage capacity of incremental relaying at low SNR: "
                    "closed forms cross-validated against Monte Carlo simulation.",
    )
    parser._negative_number_matcher = _NEGATIVE_VALUE
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("outage", help="outage probability vs SNR")
    _add_common(p)
    _add_channel(p)
    p.add_argument("--protocol", choices=("ir", "csb"), default=None)
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--snr-db", type=str, default=None, help="value or range a:b:step")

    p = sub.add_parser("capacity", help="epsilon-outage capacity vs epsilon")
    _add_common(p)
    _add_channel(p)
    p.add_argument("--protocol", choices=("ir", "csb", "base"), default=None)
    p.add_argument("--eps-range", type=str, default=None,
                   help="value or range, geometric steps via a:b:x10")
    p.add_argument("--snr-db", type=str, default=None)
    p.add_argument("--mc-budget", type=str, default=None,
                   help="trial cap for the adaptive mc evaluator (default 5e7)")

    p = sub.add_parser("placement", help="optimal relay distance vs path loss")
    _add_common(p)
    p.add_argument("--alpha-range", type=str, default=None)

    p = sub.add_parser("delta", help="capacity ratio bound vs relay position")
    _add_common(p)
    p.add_argument("--dsr-range", type=str, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--snr-db", type=str, default=None)

    p = sub.add_parser("phases", help="mean transmission phases vs SNR")
    _add_common(p)
    _add_channel(p)
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--snr-db", type=str, default=None)

    p = sub.add_parser("krelay", help="multi-relay outage bounds and capacities")
    _add_common(p)
    _add_channel(p)
    p.add_argument("--protocol", choices=("ir", "csb"), default=None)
    p.add_argument("--quantity", choices=("outage", "capacity"), default=None)
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--snr-db", type=str, default=None)
    p.add_argument("--eps-range", type=str, default=None)

    p = sub.add_parser("fig3", help="placement preset: alpha from 2 to 5")
    _add_common(p)
    p.add_argument("--alpha-range", type=str, default="2:5:0.05")

    p = sub.add_parser("fig4", help="delta preset: alpha 3, d_sr from 0.02 to 0.98")
    _add_common(p)
    p.add_argument("--dsr-range", type=str, default="0.02:0.98:0.02")
    p.add_argument("--alpha", type=float, default=3.0)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--snr-db", type=str, default=None)

    for action in sub.choices.values():
        action._negative_number_matcher = _NEGATIVE_VALUE
    return parser


_COMMANDS = {
    "outage": cmd_outage,
    "capacity": cmd_capacity,
    "placement": cmd_placement,
    "delta": cmd_delta,
    "phases": cmd_phases,
    "krelay": cmd_krelay,
    "fig3": cmd_placement,
    "fig4": cmd_delta,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opt = _Options(args)
        rows = _COMMANDS[args.command](opt)
        emit_report(rows, opt.get("format", "csv", str), opt.get("out", None, str))
    except ConfigError as exc:
        print(f"relaycap: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except solver.InfeasibleRateError as exc:
        print(f"relaycap: infeasible solve: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except solver.McBudgetError as exc:
        print(f"relaycap: Monte Carlo budget exceeded: {exc}", file=sys.stderr)
        return EXIT_MC_BUDGET
    except (ValueError, RuntimeError) as exc:
        print(f"relaycap: error: {exc}", file=sys.stderr)
        return 1
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
