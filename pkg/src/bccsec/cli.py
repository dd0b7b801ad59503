"""Command-line drivers emitting plot-ready CSV or JSON.

Exit codes: 0 success, 1 infeasible power budget, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from typing import Optional, Sequence

import numpy as np

from .channel_core import (
    COMPLEX,
    REAL,
    EffectiveState,
    FadingState,
    GaussianSubchannel,
    InvalidInput,
    db_to_linear,
    effective_state,
)
from .fading_mc import (
    MCConfig,
    RayleighModel,
    default_weight_grid,
    equal_power_outage,
    ergodic_boundary,
    infeasible_mass,
    outage_curve,
    sample_states,
    secrecy_capacity,
    uniform_baseline_rate,
)
from .oracle import brute_force_plan, grid_search_weighted, two_state_secrecy
from .outage_planner import (
    InfeasibleBudget,
    PlanMode,
    TargetRates,
    constant_common_plan,
    outage_probability,
    required_power,
    threshold_plan,
)
from .power_alloc import InfeasibleCase, Weights, boundary_sweep, optimal_allocation
from .rate_region import DiscreteJoint, dm_rate_point, gaussian_bcc_point

__all__ = ["main", "run", "parse_power", "parse_power_grid", "ConfigError"]


class ConfigError(Exception):
    """Bad command-line or file configuration; ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_power(text: str, field: str = "--power") -> float:
    """``"5dB"`` -> ``10**0.5``; a bare number is linear."""
    m = re.fullmatch(rf"\s*({_NUMBER})\s*(dB|db)?\s*", str(text))
    if not m:
        raise ConfigError(field, f"cannot read power {text!r}; use e.g. 5dB or 3.16")
    value = float(m.group(1))
    if m.group(2):
        return db_to_linear(value)
    if value < 0:
        raise ConfigError(field, "linear power must be nonnegative")
    return value


def parse_power_grid(text: str, field: str = "--power-grid") -> list[tuple[float, float]]:
    """``start:stop:count`` with an optional ``dB`` suffix on either bound.

    Points are evenly spaced in dB when ``dB`` is given, otherwise linearly.
    Returns ``(label, linear power)`` pairs where the label is the value in
    the grid's own unit.
    """
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(field, "expected start:stop:count, e.g. 0:20dB:40")
    in_db = any(p.strip().lower().endswith("db") for p in parts[:2])
    try:
        lo, hi = (float(p.strip()[:-2] if p.strip().lower().endswith("db") else p) for p in parts[:2])
        count = int(parts[2])
    except ValueError:
        raise ConfigError(field, f"cannot read grid {text!r}") from None
    if count < 1:
        raise ConfigError(field, "count must be at least 1")
    labels = np.linspace(lo, hi, count).tolist()
    if in_db:
        return [(x, db_to_linear(x)) for x in labels]
    if lo < 0:
        raise ConfigError(field, "linear powers must be nonnegative")
    return [(x, x) for x in labels]


# -- file inputs ---------------------------------------------------------------

def _read_json(path: str, field: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(field, f"cannot open {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(field, f"{path!r} is not valid JSON ({exc.msg})") from None


def load_subchannels(path: str, field: str = "--subchannels") -> list[EffectiveState]:
    """Subchannel list: ``[{"mu_sq": .., "nu_sq": .., "weight": 1}, ...]`` or
    ``{"prefactor": 0.5, "subchannels": [...]}``.  Entries may instead give
    fading gains ``h1_sq, h2_sq`` (with optional noise variances)."""
    data = _read_json(path, field)
    prefactor = REAL
    if isinstance(data, dict):
        prefactor = data.get("prefactor", REAL)
        data = data.get("subchannels")
    if not isinstance(data, list) or not data:
        raise ConfigError(field, "expected a non-empty list of subchannels")
    out = []
    for i, entry in enumerate(data):
        where = f"{field}[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(where, "each subchannel must be a JSON object")
        try:
            weight = float(entry.get("weight", 1.0))
            if "h1_sq" in entry:
                src = FadingState(float(entry["h1_sq"]), float(entry["h2_sq"]),
                                  float(entry.get("mu_sq", 1.0)), float(entry.get("nu_sq", 1.0)))
            else:
                src = GaussianSubchannel(float(entry["mu_sq"]), float(entry["nu_sq"]))
            out.append(effective_state(src, float(entry.get("prefactor", prefactor)), weight))
        except KeyError as exc:
            raise ConfigError(f"{where}.{exc.args[0]}", "missing field") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(where, str(exc)) from None
    return out


def load_dm(path: str, field: str = "--dist") -> list[DiscreteJoint]:
    data = _read_json(path, field)
    if isinstance(data, dict):
        data = data.get("subchannels", [data])
    out = []
    for i, entry in enumerate(data):
        try:
            out.append(DiscreteJoint.from_dict(entry))
        except KeyError as exc:
            raise ConfigError(f"{field}[{i}].{exc.args[0]}", "missing field") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{field}[{i}]", str(exc)) from None
    return out


# -- output --------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def _json_value(x):
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    if isinstance(x, (str, bool)) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if not math.isfinite(x):
        return None
    # 12 significant digits keeps output readable and stable across platforms
    y = float(f"{x:.12g}")
    return int(y) if y.is_integer() and abs(y) < 1e15 else y


def _emit(args, header: Optional[list[str]], rows, payload=None):
    fmt = args.format or ("json" if payload is not None and header is None else "csv")
    buf = io.StringIO()
    if fmt == "json":
        obj = payload if payload is not None else [dict(zip(header, r)) for r in rows]
        buf.write(json.dumps(_json_value(obj), indent=2))
        buf.write("\n")
    else:
        if header is None:
            header = list(payload.keys())
            rows = [[payload[k] if not isinstance(payload[k], (list, dict))
                     else json.dumps(_json_value(payload[k])) for k in header]]
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for r in rows:
            writer.writerow([_fmt(v) for v in r])
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands ---------------------------------------------------------------

def _weights(args) -> Weights:
    try:
        return Weights(args.gamma0, args.gamma1)
    except InvalidInput as exc:
        raise ConfigError("--gamma0/--gamma1", str(exc)) from None


def _require_power(args) -> float:
    if args.power is None:
        raise ConfigError("--power", "a power budget is required")
    return parse_power(args.power)


def _model(args) -> RayleighModel:
    try:
        return RayleighModel(args.sigma1, args.sigma2, args.mu_sq, args.nu_sq, args.correlation)
    except InvalidInput as exc:
        raise ConfigError("--sigma1/--sigma2/--mu-sq/--nu-sq", str(exc)) from None


def _mc(args) -> MCConfig:
    if args.samples < 1:
        raise ConfigError("--samples", "must be at least 1")
    return MCConfig(args.samples, args.seed, args.grid_size)


def cmd_region(args):
    P = _require_power(args)
    if args.subchannels:
        states = load_subchannels(args.subchannels)
        grid = default_weight_grid(args.grid_size)
        pts = boundary_sweep(states, P, grid)
        rows = [(bp.weights.ratio, bp.weights.gamma0, bp.weights.gamma1, bp.r0, bp.r1, str(bp.case))
                for bp in pts]
        _emit(args, ["gamma_ratio", "gamma0", "gamma1", "R0", "R1", "case"], rows)
        return 0
    try:
        sub = GaussianSubchannel(args.mu_sq, args.nu_sq)
    except InvalidInput as exc:
        raise ConfigError("--mu-sq/--nu-sq", str(exc)) from None
    rows = []
    for beta in np.linspace(0.0, 1.0, args.points).tolist():
        pt = gaussian_bcc_point(P, sub, beta, args.prefactor)
        rows.append((beta, pt.r0, pt.r1))
    _emit(args, ["beta", "R0", "R1"], rows)
    return 0


def cmd_alloc(args):
    if not args.subchannels:
        raise ConfigError("--subchannels", "a subchannel file is required")
    states = load_subchannels(args.subchannels)
    P = _require_power(args)
    res = optimal_allocation(states, _weights(args), P)
    payload = {
        "case": res.case.name,
        "alpha": res.case.alpha,
        "lambda": res.lam,
        "R0": res.rates.r0,
        "R1": res.rates.r1,
        "r01": res.rates.r01,
        "r02": res.rates.r02,
        "objective": res.objective,
        "alloc": [list(p) for p in res.alloc.pairs()],
    }
    _emit(args, None, None, payload)
    return 0


def cmd_ergodic(args):
    model = _model(args)
    cfg = _mc(args)
    if args.power_grid:
        rows = []
        for label, P in parse_power_grid(args.power_grid):
            cap, se = secrecy_capacity(model, P, cfg)
            uni, use = uniform_baseline_rate(model, P, cfg)
            rows.append((label, P, cap, se, uni, use))
        _emit(args, ["P_label", "P", "secrecy_capacity", "secrecy_se",
                     "uniform_rate", "uniform_se"], rows)
        return 0
    P = _require_power(args)
    eb = ergodic_boundary(model, P, cfg)
    rows = [(bp.weights.ratio, bp.r0, bp.r1, str(bp.case)) for bp in eb.points]
    _emit(args, ["gamma_ratio", "R0", "R1", "case"], rows)
    return 0


def cmd_outage(args):
    model = _model(args)
    cfg = _mc(args)
    try:
        targets = TargetRates(args.r0, args.r1)
    except InvalidInput as exc:
        raise ConfigError("--r0/--r1", str(exc)) from None
    mode = PlanMode(args.mode)
    if args.power_grid:
        grid = parse_power_grid(args.power_grid)
        powers = [P for _, P in grid]
        opt = outage_curve(model, targets, powers, cfg, mode)
        header = ["P_dB" if "db" in args.power_grid.lower() else "P", "outage", "se"]
        cols = [[label for label, _ in grid], [o.outage for o in opt], [o.se for o in opt]]
        if args.equal_power:
            eq = equal_power_outage(model, targets, powers, cfg)
            header.append("equal_power_outage")
            cols.append([o.outage for o in eq])
        _emit(args, header, list(zip(*cols)))
        return 0
    P = _require_power(args)
    states = sample_states(model, cfg)
    if mode is PlanMode.CONSTANT_COMMON:
        plan = constant_common_plan(states, targets, P)
    else:
        plan = threshold_plan(states, required_power(states, targets, mode).tolist(), P,
                              targets, mode)
    floor, floor_se = infeasible_mass(model, targets, cfg, mode)
    payload = {"P": P, "s_star": plan.s_star, "w_star": plan.w_star,
               "outage": outage_probability(states, plan), "floor": floor, "floor_se": floor_se}
    _emit(args, list(payload), [list(payload.values())])
    return 0


def cmd_dm(args):
    if not args.dist:
        raise ConfigError("--dist", "a distribution file is required")
    subs = load_dm(args.dist)
    r = dm_rate_point(subs)
    _emit(args, ["r01", "r02", "R0", "R1"], [(r.r01, r.r02, r.r0, r.r1)])
    return 0


def cmd_oracle(args):
    if args.check == "two-state":
        P = _require_power(args)
        rows = [(corr, two_state_secrecy(corr, P, args.mu_sq)) for corr in ("identical", "anti")]
        _emit(args, ["correlation", "secrecy_rate"], rows)
        return 0
    if args.check == "plan":
        if not args.pmin:
            raise ConfigError("--pmin", "give the per-state minimum powers")
        pmin = [float(x) for x in args.pmin.split(",")]
        weights = [1.0 / len(pmin)] * len(pmin)
        P = _require_power(args)
        # only the weights matter to the planner once pmin is given
        states = [EffectiveState(1.0, 2.0, REAL, wt) for wt in weights]
        plan_out = outage_probability(states, threshold_plan(states, pmin, P), pmin)
        _emit(args, ["threshold_outage", "brute_force_outage"],
              [(plan_out, brute_force_plan(weights, pmin, P))])
        return 0
    if not args.subchannels:
        raise ConfigError("--subchannels", "a subchannel file is required")
    states = load_subchannels(args.subchannels)
    P = _require_power(args)
    w = _weights(args)
    closed = optimal_allocation(states, w, P)
    grid = grid_search_weighted(states, w, P, args.resolution)
    _emit(args, ["closed_form_objective", "grid_objective", "case"],
          [(closed.objective, grid.objective, str(closed.case))])
    return 0


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="Monte Carlo seed (default 0)")
    g.add_argument("--samples", type=int, default=100_000, help="Monte Carlo sample count")
    g.add_argument("--power", help="power budget, linear or in dB (e.g. 5dB)")
    g.add_argument("--out", help="write output here instead of stdout")
    g.add_argument("--format", choices=("csv", "json"), help="output format")

    fading = argparse.ArgumentParser(add_help=False)
    f = fading.add_argument_group("fading model")
    f.add_argument("--sigma1", type=float, default=1.0, help="mean of |h1|^2")
    f.add_argument("--sigma2", type=float, default=1.0, help="mean of |h2|^2")
    f.add_argument("--mu-sq", type=float, default=1.0, help="noise variance at receiver 1")
    f.add_argument("--nu-sq", type=float, default=1.0, help="noise variance at receiver 2")
    f.add_argument("--correlation", choices=("independent", "identical", "anti"),
                   default="independent")
    f.add_argument("--grid-size", type=int, default=25, help="number of weight pairs swept")

    parser = argparse.ArgumentParser(prog="bccsec", description=__doc__.splitlines()[0],
                                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("region", parents=[common],
                       help="rate region of one Gaussian channel or a subchannel list",
                       description="Single channel: CSV columns beta,R0,R1 over the "
                                   "confidential power fraction. With --subchannels: "
                                   "gamma_ratio,gamma0,gamma1,R0,R1,case along the boundary.")
    p.add_argument("--mu-sq", type=float, default=1.0)
    p.add_argument("--nu-sq", type=float, default=2.0)
    p.add_argument("--prefactor", type=float, choices=(REAL, COMPLEX), default=REAL)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--subchannels")
    p.add_argument("--grid-size", type=int, default=25)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("alloc", parents=[common], help="optimal allocation for one weight pair",
                       description="JSON fields: case, alpha, lambda, R0, R1, r01, r02, "
                                   "objective, alloc ([p0, p1] per subchannel).")
    p.add_argument("--subchannels")
    p.add_argument("--gamma0", type=float, default=1.0)
    p.add_argument("--gamma1", type=float, default=1.0)
    p.set_defaults(func=cmd_alloc)

    p = sub.add_parser("ergodic", parents=[common, fading], help="ergodic region of Rayleigh fading",
                       description="With --power: CSV gamma_ratio,R0,R1,case along the "
                                   "boundary. With --power-grid: P_label,P,secrecy_capacity,"
                                   "secrecy_se,uniform_rate,uniform_se.")
    p.add_argument("--power-grid")
    p.set_defaults(func=cmd_ergodic)

    p = sub.add_parser("outage", parents=[common, fading], help="outage under a long-term budget",
                       description="With --power-grid: CSV P_dB (or P),outage,se"
                                   "[,equal_power_outage]; budgets below the common-rate "
                                   "power in constant-common mode give nan. With --power: "
                                   "one row P,s_star,w_star,outage,floor,floor_se; exit 1 "
                                   "if the budget cannot cover the common rate.")
    p.add_argument("--r0", type=float, default=0.0)
    p.add_argument("--r1", type=float, default=0.0)
    p.add_argument("--mode", choices=[m.value for m in PlanMode], default="joint")
    p.add_argument("--power-grid")
    p.add_argument("--equal-power", action="store_true", help="add the equal-power baseline")
    p.set_defaults(func=cmd_outage)

    p = sub.add_parser("dm", parents=[common], help="rates of discrete memoryless subchannels",
                       description="CSV r01,r02,R0,R1 from row-major probability tables.")
    p.add_argument("--dist")
    p.set_defaults(func=cmd_dm)

    p = sub.add_parser("oracle", parents=[common], help="brute-force cross-checks",
                       description="grid: closed_form_objective,grid_objective,case. "
                                   "plan: threshold_outage,brute_force_outage. "
                                   "two-state: correlation,secrecy_rate.")
    p.add_argument("--check", choices=("grid", "plan", "two-state"), default="grid")
    p.add_argument("--subchannels")
    p.add_argument("--gamma0", type=float, default=1.0)
    p.add_argument("--gamma1", type=float, default=1.0)
    p.add_argument("--resolution", type=float, default=1e-3)
    p.add_argument("--pmin", help="comma-separated minimum powers of equiprobable states")
    p.add_argument("--mu-sq", type=float, default=1.0)
    p.set_defaults(func=cmd_oracle)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"bccsec {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleBudget as exc:
        print(f"bccsec {args.command}: infeasible: {exc}", file=sys.stderr)
        return 1
    except InfeasibleCase as exc:
        print(f"bccsec {args.command}: solver failed: {exc}", file=sys.stderr)
        return 1
    except InvalidInput as exc:
        print(f"bccsec {args.command}: error: {exc}", file=sys.stderr)
        return 2


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
