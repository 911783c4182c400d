"""Command-line entry points for simulation, control and utility tasks.

Exit codes: 0 success, 1 bad usage or configuration, 2 runtime failure
(solver or plant fault).
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .controller import solve_ocp
from .errors import AtesError, ControllerFault, ScenarioError, SolverError
from .harness import (demand_window, power_form_study, replay_observer,
                      run_closed_loop)
from .plant import init_truth, restrict_to_coarse, truth_step
from .power import EnergyLedger, power_bilinear, power_linear, update_balance
from .pwa import build_pwa, pwa_step
from .scenario import (gen_synthetic_demand, load_scenario, read_results,
                       write_demand_csv, write_results)

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", default=None,
                        help="scenario config file (defaults apply when omitted)")
    parser.add_argument("--out", default=None, help="results CSV path")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the scenario seed")
    parser.add_argument("--steps", type=int, default=None,
                        help="number of hourly steps (default: scenario duration)")


def _load(args) -> "Scenario":
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        from dataclasses import replace
        truth = replace(scenario.truth, seed=args.seed)
        scenario = replace(scenario, truth=truth, seed=args.seed)
    return scenario


def _cmd_run(args) -> int:
    scenario = _load(args)
    report = run_closed_loop(scenario, steps=args.steps, out_path=args.out,
                             log_every=args.log_every)
    print(f"steps: {report.steps}")
    print(f"final balance: {report.final_balance_j / 3.6e9:.3f} MWh")
    print(f"coverage: {report.coverage:.3f}")
    print(f"solve time median/max: {report.solve_ms_median:.1f}/"
          f"{report.solve_ms_max:.1f} ms")
    return 0


def _parse_schedule(text: str, steps: int) -> np.ndarray:
    """Comma-separated flows, or a CSV whose second column holds flows."""
    try:
        if "," in text and not text.endswith(".csv"):
            values = np.array([float(v) for v in text.split(",")])
        else:
            values = np.loadtxt(text, delimiter=",", skiprows=1, usecols=1,
                                ndmin=1)
    except (OSError, ValueError) as exc:
        raise ScenarioError(f"cannot parse schedule {text!r}: {exc}") from exc
    if values.size < steps:
        raise ScenarioError(f"schedule has {values.size} entries, need {steps}")
    return values[:steps]


def _cmd_sim(args) -> int:
    """Open-loop plant rollout under a prescribed flow schedule."""
    scenario = _load(args)
    steps = args.steps if args.steps is not None else scenario.duration
    if args.schedule:
        flows = _parse_schedule(args.schedule, steps)
    else:
        flows = np.zeros(steps)
    truth = init_truth(scenario.truth, scenario.grid, scenario.params)
    ledger = EnergyLedger(dt=scenario.ocp.dt)
    records = []
    for k in range(steps):
        x = restrict_to_coarse(truth, scenario.grid)
        u = float(flows[k])
        truth_step(truth, u, scenario.hx, scenario.ocp.dt, audit=args.audit)
        p = power_bilinear(x, u, scenario.params.c_w)
        update_balance(ledger, p, float(scenario.demand[k]), u,
                       (k + 1) * scenario.ocp.dt)
        records.append({
            "t": k * scenario.ocp.dt, "u_applied": u,
            "mode": "heating" if u > 0 else ("cooling" if u < 0 else "storing"),
            "P_bilinear": p, "D": float(scenario.demand[k]),
            "B_past": ledger.b_past,
            "warm_borehole_truth": float(x[0]),
            "cold_borehole_truth": float(x[scenario.grid.nu + 1]),
        })
    if args.out:
        write_results(args.out, records)
    print(f"simulated {steps} steps, final balance "
          f"{ledger.b_past / 3.6e9:.3f} MWh")
    if args.audit:
        print(f"worst maximum-principle excess: {truth.dmp_violation:.3e} K")
    return 0


def _cmd_observe(args) -> int:
    """Replay the state estimator on a logged results CSV."""
    scenario = _load(args)
    records = read_results(args.results)
    if args.steps is not None:
        records = records[:args.steps]
    means = replay_observer(scenario, records)
    nu = scenario.grid.nu
    max_dev = 0.0
    for rec, mean in zip(records, means):
        if rec.get("warm_borehole_est") is not None:
            max_dev = max(max_dev,
                          abs(mean[0] - rec["warm_borehole_est"]),
                          abs(mean[nu + 1] - rec["cold_borehole_est"]))
    print(f"replayed {len(means)} steps, max deviation from logged "
          f"estimates: {max_dev:.3e} K")
    return 0


def _cmd_gen_demand(args) -> int:
    seed = args.seed if args.seed is not None else 0
    demand = gen_synthetic_demand(seed, args.hours,
                                  args.heat_mwh * 3.6e9, args.cold_mwh * 3.6e9)
    out = args.out or "demand.csv"
    write_demand_csv(out, demand)
    print(f"wrote {demand.size} hourly samples to {out}")
    return 0


def _cmd_validate_power(args) -> int:
    """Compare the bilinear and state-linear power forms along a model rollout."""
    scenario = _load(args)
    steps = args.steps if args.steps is not None else 720
    _, p_bil, p_lin = power_form_study(scenario, steps)
    peak = float(np.abs(p_bil).max())
    mean_err = float(np.abs(p_lin - p_bil).mean())
    ratio = mean_err / peak if peak > 0 else 0.0
    print(f"{steps} model steps: mean |linear - bilinear| = "
          f"{mean_err / 1e3:.1f} kW, peak |P| = {peak / 1e6:.3f} MW "
          f"({ratio:.2%} of peak)")
    return 0 if ratio <= 0.05 else 2


def _cmd_solve_once(args) -> int:
    """Solve a single OCP from the ambient state and print the plan."""
    scenario = _load(args)
    grid, params, ocp = scenario.grid, scenario.params, scenario.ocp
    x0 = np.full(grid.n_states, params.t_amb)
    model = build_pwa(grid, params, scenario.hx, ocp.dt, x0, 0.0)
    window = demand_window(scenario.demand, args.at, ocp.horizon)
    solution = solve_ocp(x0, window, 0.0, ocp, model, grid, params)
    print(f"mode sequence: {' '.join(solution.mode_sequence)}")
    print("block flows [m^3/s]: "
          + " ".join(f"{u:+.5f}" for u in solution.u_blocks))
    print(f"cost: {solution.cost:.6f}  (slack used: {solution.slack_used:.3e} K)")
    for name, value in solution.cost_terms.items():
        print(f"  {name}: {value:.6f}")
    print("candidates (sorted by cost):")
    for rec in sorted(solution.per_candidate, key=lambda r: r.cost):
        print(f"  {' '.join(m[:4] for m in rec.mode_sequence):<16} "
              f"{rec.status:<10} cost {rec.cost:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ates-mpc",
        description="Closed-loop aquifer thermal storage simulation and MPC.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="closed-loop MPC run against the truth plant")
    _add_common(p)
    p.add_argument("--log-every", type=int, default=0,
                   help="log progress every N steps")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sim", help="open-loop plant rollout with a flow schedule")
    _add_common(p)
    p.add_argument("--schedule", default=None,
                   help="comma-separated flows or CSV (second column)")
    p.add_argument("--audit", action="store_true",
                   help="check the discrete maximum principle every substep")
    p.set_defaults(func=_cmd_sim)

    p = sub.add_parser("observe", help="replay the estimator on logged results")
    _add_common(p)
    p.add_argument("results", help="results CSV from a previous run")
    p.set_defaults(func=_cmd_observe)

    p = sub.add_parser("gen-demand", help="write a synthetic hourly demand CSV")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--hours", type=int, default=8760)
    p.add_argument("--heat-mwh", type=float, default=3416.67)
    p.add_argument("--cold-mwh", type=float, default=2722.22)
    p.set_defaults(func=_cmd_gen_demand)

    p = sub.add_parser("validate-power",
                       help="compare bilinear and linear power forms")
    _add_common(p)
    p.set_defaults(func=_cmd_validate_power)

    p = sub.add_parser("solve-once", help="solve one OCP and print the plan")
    _add_common(p)
    p.add_argument("--at", type=int, default=0,
                   help="demand index the horizon starts at")
    p.set_defaults(func=_cmd_solve_once)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ControllerFault, SolverError, AtesError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
