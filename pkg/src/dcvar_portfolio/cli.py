"""Command-line entry point: solve, bounds, frontier, simulate.

A single JSON config describes the market, the problem, and optional
search / simulation settings.  Scalar flags (--K, --B, --seed) override the
config for sweep scripting.  Outputs are deterministic: JSON numbers are
serialized with 12 significant digits and sorted keys, CSV headers are
fixed.  Exit codes: 0 success, 1 IO or config error, 2 infeasible problem.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, DcvarError, InfeasibleK, InfeasibleSpec, NoFeasibleAlpha
from .gaussian import LognormalStatePrice
from .market import DerivedMarket, MarketParams, build_market
from .montecarlo import (PathConfig, frontier, simulate_paths, simulate_terminal,
                         terminal_stats)
from .multipliers import ProblemSpec, delta_bounds, k_bounds
from .policy import (AlphaSearchConfig, DEGENERATE_NU, allocation_at,
                     asymptotic_k_bounds, atom_probabilities, optimize_alpha,
                     terminal_wealth)

MAX_EMITTED_PATHS = 16


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"missing '{key}' in {where}")
    return mapping[key]


def load_config(path: str | Path) -> dict:
    """Parse and validate the run configuration."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc

    market_raw = _require(raw, "market", "config")
    problem_raw = _require(raw, "problem", "config")
    try:
        market = MarketParams(
            horizon=float(_require(market_raw, "horizon", "market")),
            riskfree=float(_require(market_raw, "riskfree", "market")),
            s0=market_raw.get("s0", [100.0]),
            mu=_require(market_raw, "mu", "market"),
            vol=_require(market_raw, "vol", "market"),
            corr=_require(market_raw, "corr", "market"),
        )
    except DcvarError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad market block: {exc}") from exc

    problem = {
        "w0": float(_require(problem_raw, "w0", "problem")),
        "K": float(_require(problem_raw, "K", "problem")),
        "kappa": float(_require(problem_raw, "kappa", "problem")),
        "B": float(_require(problem_raw, "B", "problem")),
    }
    search_raw = raw.get("alpha_search", {})
    search = AlphaSearchConfig(
        alpha0=search_raw.get("alpha0"),
        zeta=float(search_raw.get("zeta", 1e-3)),
        step_scale=float(search_raw.get("step_scale", 10.0)),
        eps=float(search_raw.get("eps", 1e-3)),
        max_iters=int(search_raw.get("max_iters", 500)),
    )
    paths_raw = raw.get("paths", {})
    paths = PathConfig(
        n_paths=int(paths_raw.get("n_paths", 100_000)),
        n_steps=int(paths_raw.get("n_steps", 1)),
        seed=int(paths_raw.get("seed", 0)),
        rebalance_steps=paths_raw.get("rebalance_steps"),
    )
    return {
        "market": market,
        "problem": problem,
        "alpha_search": search,
        "paths": paths,
        "output_dir": raw.get("output_dir", "out"),
    }


def _round12(obj):
    """Recursively round floats to 12 significant digits for serialization."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return obj
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_round12(payload), indent=2, sort_keys=True) + "\n")


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _solve_config(cfg: dict):
    mkt = build_market(cfg["market"])
    prob = cfg["problem"]
    dist = None if mkt.nu0 < DEGENERATE_NU else LognormalStatePrice.from_market(mkt)
    sol = optimize_alpha(dist, mkt, prob["w0"], prob["K"], prob["kappa"], prob["B"],
                         cfg["alpha_search"])
    return mkt, dist, sol


def _solution_payload(mkt: DerivedMarket, dist, sol, K: float) -> dict:
    p0, pb, pa = atom_probabilities(sol, K)
    if dist is not None:
        bounds = k_bounds(dist, sol.problem)
        k_lo, k_up = bounds.k_lower, bounds.k_upper
    else:
        k_lo, k_up = 0.0, math.inf
    mult = sol.multipliers
    return {
        "alpha_star": sol.alpha,
        "lambda": mult.lam,
        "eta": mult.eta,
        "delta": mult.delta,
        "rho": mult.rho,
        "threshold_a": sol.threshold_a,
        "threshold_b": sol.threshold_b,
        "expected_terminal": sol.expected_terminal,
        "atom_probs": {"p0": p0, "pb": pb, "palpha": pa},
        "k_lower": k_lo,
        "k_upper": k_up,
        "case_tag": sol.case_tag.value,
    }


def cmd_solve(cfg: dict, out_dir: Path) -> int:
    mkt, dist, sol = _solve_config(cfg)
    payload = _solution_payload(mkt, dist, sol, cfg["problem"]["K"])
    write_json(out_dir / "solution.json", payload)
    print(f"E[V_T*] = {sol.expected_terminal:.4f}  alpha* = {sol.alpha:.4f}  "
          f"case = {sol.case_tag.value}  K in [{payload['k_lower']:.6g}, "
          f"{payload['k_upper']:.6g}]")
    return 0


def cmd_bounds(cfg: dict, out_dir: Path, alpha: float) -> int:
    mkt = build_market(cfg["market"])
    prob = cfg["problem"]
    dist = LognormalStatePrice.from_market(mkt)
    spec = ProblemSpec(w0=prob["w0"], alpha=alpha, kappa=prob["kappa"],
                       B=prob["B"], K=prob["K"])
    bounds = k_bounds(dist, spec)
    d_lo, d_up = delta_bounds(dist, spec)
    asym_lo, asym_up = asymptotic_k_bounds(dist, prob["w0"], alpha, prob["kappa"])
    payload = {
        "alpha": alpha,
        "k_lower": bounds.k_lower,
        "k_upper": bounds.k_upper,
        "delta_lower": d_lo,
        "delta_upper": d_up,
        "k_lower_large_cap": asym_lo,
        "k_upper_large_cap": asym_up,
    }
    write_json(out_dir / "bounds.json", payload)
    print(f"K in [{bounds.k_lower:.6g}, {bounds.k_upper:.6g}] at alpha = {alpha:.6g}")
    return 0


FRONTIER_HEADER = ["K", "alpha_star", "expected_terminal", "k_lower", "k_upper", "case_tag"]


def cmd_frontier(cfg: dict, out_dir: Path, k_min: float, k_max: float,
                 n_points: int, sweep_b: list[float] | None) -> int:
    mkt = build_market(cfg["market"])
    prob = cfg["problem"]
    dist = None if mkt.nu0 < DEGENERATE_NU else LognormalStatePrice.from_market(mkt)

    if sweep_b:
        rows = []
        for b_val in sweep_b:
            sol = optimize_alpha(dist, mkt, prob["w0"], prob["K"], prob["kappa"],
                                 b_val, cfg["alpha_search"])
            bounds = k_bounds(dist, sol.problem) if dist is not None else None
            rows.append([b_val, sol.alpha, sol.expected_terminal,
                         bounds.k_lower if bounds else 0.0,
                         bounds.k_upper if bounds else math.inf,
                         sol.case_tag.value])
        path = out_dir / "b_sweep.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["B"] + FRONTIER_HEADER[1:])
            for row in rows:
                writer.writerow([_fmt(x) for x in row])
        print(f"wrote {path} ({len(rows)} rows)")
        return 0

    if k_min >= k_max and n_points > 1:
        raise ConfigError(f"need k_min < k_max, got {k_min} >= {k_max}")
    grid = np.linspace(k_min, k_max, n_points)
    points = frontier(dist, mkt, prob["w0"], prob["kappa"], prob["B"], grid,
                      cfg["alpha_search"])
    path = out_dir / "frontier.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FRONTIER_HEADER)
        for pt in points:
            writer.writerow([_fmt(pt.K), _fmt(pt.alpha_star),
                             _fmt(pt.expected_terminal), _fmt(pt.k_lower),
                             _fmt(pt.k_upper),
                             pt.case_tag.value if pt.case_tag else ""])
    feasible = sum(1 for pt in points if not math.isnan(pt.alpha_star))
    print(f"wrote {path} ({feasible}/{len(points)} feasible rows)")
    return 0


def _emit_paths(cfg: dict, out_dir: Path, mkt: DerivedMarket, sol, seeds: list[int]) -> Path:
    """Per-seed single-path trajectories of prices, wealth, and allocations."""
    paths_cfg: PathConfig = cfg["paths"]
    n_assets = mkt.n_assets
    header = (["path_seed", "step", "t", "Z", "V", "cash"]
              + [f"S{i + 1}" for i in range(n_assets)]
              + [f"risky{i + 1}" for i in range(n_assets)])
    path = out_dir / "paths.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for seed in seeds[:MAX_EMITTED_PATHS]:
            one = PathConfig(n_paths=1, n_steps=paths_cfg.n_steps, seed=seed)
            ens = simulate_paths(mkt, one)
            for step, t in enumerate(ens.times):
                z = float(ens.z[0, step])
                s_row = ens.s[0, step]
                if t < mkt.horizon:
                    state = allocation_at(mkt, sol, float(t), z, s_row)
                    row = ([seed, step, t, z, state.wealth, state.cash]
                           + list(s_row) + list(state.risky_value))
                else:
                    v_t = float(terminal_wealth(z, sol))
                    row = ([seed, step, t, z, v_t, ""] + list(s_row)
                           + [""] * n_assets)
                writer.writerow([_fmt(x) for x in row])
    return path


def cmd_simulate(cfg: dict, out_dir: Path, emit_seeds: list[int] | None) -> int:
    mkt, dist, sol = _solve_config(cfg)
    prob = cfg["problem"]
    paths_cfg: PathConfig = cfg["paths"]
    _, z_t = simulate_terminal(mkt, paths_cfg)
    v_t = terminal_wealth(z_t, sol)
    atoms = (0.0, -sol.alpha, prob["B"])
    stats = terminal_stats(v_t, prob["kappa"], atoms=atoms)
    p0, pb, pa = atom_probabilities(sol, prob["K"])
    n = paths_cfg.n_paths
    zv = z_t * v_t
    payload = {
        "n_paths": n,
        "n_steps": paths_cfg.n_steps,
        "seed": paths_cfg.seed,
        "kappa": prob["kappa"],
        "mean": stats.mean,
        "var_kappa": stats.var_kappa,
        "cvar_kappa": stats.cvar_kappa,
        "dcvar_kappa": stats.dcvar_kappa,
        "std_error": stats.std_error,
        "atom_freqs": {"p0": stats.atom_freqs[0], "pb": stats.atom_freqs[2],
                       "palpha": stats.atom_freqs[1]},
        "atom_probs_model": {"p0": p0, "pb": pb, "palpha": pa},
        "martingale": {
            "mean_z": float(z_t.mean()),
            "se_z": float(z_t.std(ddof=1)) / math.sqrt(n),
            "ez_model": mkt.ez,
            "mean_z_times_payoff": float(zv.mean()),
            "se_z_times_payoff": float(zv.std(ddof=1)) / math.sqrt(n),
            "w0": prob["w0"],
        },
        "expected_terminal_model": sol.expected_terminal,
        "alpha_star": sol.alpha,
    }
    write_json(out_dir / "stats.json", payload)
    msg = (f"dcvar = {stats.dcvar_kappa:.4f}  mean = {stats.mean:.4f}  "
           f"var = {stats.var_kappa:.4f} over {n} paths")
    if emit_seeds:
        path = _emit_paths(cfg, out_dir, mkt, sol, emit_seeds)
        msg += f"  (+ {path.name})"
    print(msg)
    return 0


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcvar",
        description="Optimal dynamic portfolio under a deviation-CVaR budget.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="path to config JSON")
        p.add_argument("--out-dir", default=None, help="output directory override")
        p.add_argument("--K", type=float, default=None, help="risk budget override")
        p.add_argument("--B", type=float, default=None, help="wealth cap override")
        p.add_argument("--seed", type=int, default=None, help="simulation seed override")

    p_solve = sub.add_parser("solve", help="solve the policy, write solution.json")
    common(p_solve)

    p_bounds = sub.add_parser("bounds", help="risk-budget bounds at a fixed alpha")
    common(p_bounds)
    p_bounds.add_argument("--alpha", type=float, required=True,
                          help="VaR anchor alpha (<= 0)")

    p_front = sub.add_parser("frontier", help="sweep the risk budget, write frontier.csv")
    common(p_front)
    p_front.add_argument("--k-min", type=float, default=None)
    p_front.add_argument("--k-max", type=float, default=None)
    p_front.add_argument("--n-points", type=int, default=21)
    p_front.add_argument("--sweep-b", default=None,
                         help="comma-separated cap values: sweep B instead of K")

    p_sim = sub.add_parser("simulate", help="Monte Carlo terminal statistics")
    common(p_sim)
    p_sim.add_argument("--emit-paths", default=None,
                       help=f"comma-separated path seeds (up to {MAX_EMITTED_PATHS}) "
                            "to dump step-by-step into paths.csv")
    return parser


def _apply_overrides(cfg: dict, args) -> None:
    if args.K is not None:
        cfg["problem"]["K"] = args.K
    if args.B is not None:
        cfg["problem"]["B"] = args.B
    if args.seed is not None:
        p = cfg["paths"]
        cfg["paths"] = PathConfig(n_paths=p.n_paths, n_steps=p.n_steps,
                                  seed=args.seed, rebalance_steps=p.rebalance_steps)
    if args.out_dir is not None:
        cfg["output_dir"] = args.out_dir


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        _apply_overrides(cfg, args)
        out_dir = Path(cfg["output_dir"])
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "solve":
            return cmd_solve(cfg, out_dir)
        if args.command == "bounds":
            return cmd_bounds(cfg, out_dir, args.alpha)
        if args.command == "frontier":
            sweep_b = None
            if args.sweep_b:
                sweep_b = [float(x) for x in args.sweep_b.split(",") if x.strip()]
            k_min = args.k_min if args.k_min is not None else 1.0
            k_max = args.k_max if args.k_max is not None else cfg["problem"]["K"]
            return cmd_frontier(cfg, out_dir, k_min, k_max, args.n_points, sweep_b)
        if args.command == "simulate":
            seeds = None
            if args.emit_paths:
                seeds = [int(x) for x in args.emit_paths.split(",") if x.strip()]
            return cmd_simulate(cfg, out_dir, seeds)
        raise ConfigError(f"unknown command {args.command}")
    except (NoFeasibleAlpha, InfeasibleSpec, InfeasibleK) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, OSError, DcvarError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
