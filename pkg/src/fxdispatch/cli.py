"""Command-line front end: `check`, `bound`, `run`, `oracle`.

Exit codes: 0 success / all gates pass, 1 validation or assumption
failure, 2 runtime failure (integration or equilibrium solve).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import analysis, dynamics, oracle
from .analysis import AssumptionReport, settling_bound
from .config import RunConfig, atomic_write_text, load_config
from .grid_model import AssumptionViolation, ConfigurationError, cost_summary
from .oracle import NewtonFailure
from .topology import spectrum

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


@dataclass
class Gates:
    report: AssumptionReport
    phi2: float
    tau1: float

    @property
    def all_ok(self) -> bool:
        return self.report.all_ok


def evaluate_gates(config: RunConfig) -> Gates:
    system = config.system()
    report = analysis.assemble_assumption_report(config.loss, config.generators, config.topology)
    phi2 = spectrum(config.topology).phi2
    sm = analysis.build_s_matrix(config.loss, cost_summary(config.generators))
    return Gates(report=report, phi2=phi2, tau1=float(sm.tau[0]))


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def cmd_check(config: RunConfig, out=None) -> int:
    out = out if out is not None else sys.stdout
    g = evaluate_gates(config)
    r = g.report
    rows = [
        ("connected", r.connected_ok, ""),
        ("gradient_condition (A1)", r.a1_ok, ""),
        ("coefficient_magnitude", r.remark2_ok, ""),
        ("convexity (sigma>0, delta!=0)", r.sigma > 0 and r.delta != 0,
         f"sigma={_fmt(r.sigma)} delta={_fmt(r.delta)}"),
        ("eigenvalue_condition (A2)", r.a2_ok, f"value={_fmt(r.a2_value)}"),
    ]
    for name, ok, extra in rows:
        print(f"{name:36s} {'PASS' if ok else 'FAIL'}  {extra}", file=out)
    print(f"rho={_fmt(r.rho)} b1={_fmt(r.b1)} bN={_fmt(r.bN)} "
          f"tau1={_fmt(g.tau1)} phi2={_fmt(g.phi2)}", file=out)
    return EXIT_OK if g.all_ok else EXIT_VALIDATION


def cmd_bound(config: RunConfig, out=None) -> int:
    out = out if out is not None else sys.stdout
    g = evaluate_gates(config)
    if not g.all_ok:
        print("assumption gates failed; settling bound undefined (run `check`)", file=out)
        return EXIT_VALIDATION
    sb = settling_bound(config.params, g.report.rho, g.tau1, g.phi2, len(config.generators))
    print(f"alpha={_fmt(sb.alpha)} beta={_fmt(sb.beta)} p={_fmt(sb.p)} q={_fmt(sb.q)}", file=out)
    print(f"settling_time_bound_s={_fmt(sb.ts)}", file=out)
    return EXIT_OK


def _csv_text(traj: dynamics.Trajectory, n: int) -> str:
    cols = (["t"] + [f"P{i + 1}" for i in range(n)] + [f"z{i + 1}" for i in range(n)]
            + ["PL", "Ptotal", "cost", "residual", "V"])
    lines = [",".join(cols)]
    for k in range(len(traj.t)):
        vals = ([traj.t[k]] + list(traj.P[k]) + list(traj.z[k])
                + [traj.loss[k], traj.P[k].sum(), traj.cost[k], traj.residual[k], traj.V[k]])
        lines.append(",".join(f"{v:.12g}" for v in vals))
    return "\n".join(lines) + "\n"


def cmd_run(config: RunConfig, out_dir: str | None = None, force: bool = False, out=None) -> int:
    out = out if out is not None else sys.stdout
    g = evaluate_gates(config)
    if not g.all_ok and not force:
        print("assumption gates failed; refusing to run (use --force to override)", file=out)
        cmd_check(config, out=out)
        return EXIT_VALIDATION

    n = len(config.generators)
    try:
        sb = settling_bound(config.params, g.report.rho, g.tau1, g.phi2, n)
        ts_bound = sb.ts
    except AssumptionViolation:
        ts_bound = None

    dbar = float(sum(gen.d0 for gen in config.generators))
    eq = pf = None
    try:
        eq = oracle.solve_equilibrium(config.generators, config.loss, dbar)
        pf = oracle.kkt_penalty_solution(config.generators, config.loss, dbar)
    except NewtonFailure:
        pass

    t0 = time.perf_counter()
    result = dynamics.run(
        config.system(), config.params, disturbance=config.disturbance,
        z0=np.array(config.z0) if config.z0 is not None else None,
        c_star=eq.cost_star if eq is not None else None,
        stride=config.output.stride,
    )
    wall = time.perf_counter() - t0

    term = result.terminal
    within = (result.settle_time is not None and ts_bound is not None
              and result.settle_time <= ts_bound) if g.all_ok else None
    report = {
        "status": result.status,
        "terminal_power": [float(p) for p in term.P],
        "total_power": term.total_power,
        "cost": term.cost,
        "loss": term.loss,
        "consensus_residual": term.residual,
        "settled": result.settled,
        "measured_settling_time": result.settle_time,
        "settling_time_bound": ts_bound,
        "settling_within_bound": within,
        "negative_power_seen": result.negative_power_seen,
        "assumptions": {
            "connected_ok": g.report.connected_ok,
            "a1_ok": g.report.a1_ok,
            "remark2_ok": g.report.remark2_ok,
            "a2_ok": g.report.a2_ok,
            "all_ok": g.report.all_ok,
            "sigma": g.report.sigma,
            "delta": g.report.delta,
            "a2_value": g.report.a2_value,
        },
        "spectra": {
            "phi2": g.phi2,
            "b1": g.report.b1,
            "bN": g.report.bN,
            "rho": g.report.rho,
            "tau1": g.tau1,
        },
        "oracle_gap": {
            "consensus_equilibrium": [float(p) for p in eq.P_star] if eq else None,
            "penalty_factor": [float(p) for p in pf.P_star] if pf else None,
            "max_abs_gap_consensus": float(np.max(np.abs(term.P - eq.P_star))) if eq else None,
            "max_abs_gap_penalty": float(np.max(np.abs(term.P - pf.P_star))) if pf else None,
        },
        # wall time goes to stdout, not the report, to keep outputs
        # byte-identical across reruns of the same config
        "timing": {
            "dt": config.params.dt,
            "t_end": config.params.t_end,
            "steps_emitted": int(len(result.trajectory.t)),
            "stride": config.output.stride,
        },
    }

    directory = out_dir or config.output.directory
    if config.output.write_trajectory:
        atomic_write_text(os.path.join(directory, "trajectory.csv"),
                          _csv_text(result.trajectory, n))
    if config.output.write_report:
        atomic_write_text(os.path.join(directory, "report.json"),
                          json.dumps(report, indent=2) + "\n")
    print(f"run {result.status}: terminal P = {[round(float(p), 3) for p in term.P]}, "
          f"cost = {term.cost:.2f}, loss = {term.loss:.3f}, "
          f"settled = {result.settled}, wall = {wall:.1f}s", file=out)
    return EXIT_OK if result.status == "ok" else EXIT_RUNTIME


def cmd_oracle(config: RunConfig, out=None) -> int:
    out = out if out is not None else sys.stdout
    dbar = float(sum(g.d0 for g in config.generators))
    try:
        eq = oracle.solve_equilibrium(config.generators, config.loss, dbar)
        pf = oracle.kkt_penalty_solution(config.generators, config.loss, dbar)
    except NewtonFailure as e:
        print(f"equilibrium solve failed: {e}; best iterate: {e.best}", file=out)
        return EXIT_RUNTIME
    gap = np.max(np.abs(eq.P_star - pf.P_star))
    print("consensus equilibrium (H*lambda equal):", file=out)
    print(f"  P* = {[round(float(p), 6) for p in eq.P_star]}", file=out)
    print(f"  mu* = {_fmt(eq.mu_star)} cost = {_fmt(eq.cost_star)} loss = {_fmt(eq.loss_star)}", file=out)
    print("penalty-factor coordination:", file=out)
    print(f"  P* = {[round(float(p), 6) for p in pf.P_star]}", file=out)
    print(f"  mu* = {_fmt(pf.mu_star)} cost = {_fmt(pf.cost_star)} loss = {_fmt(pf.loss_star)}", file=out)
    print(f"max per-generator dispatch gap = {_fmt(float(gap))} MW", file=out)
    return EXIT_OK


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    from dataclasses import replace

    params = config.params
    if args.dt is not None:
        params = replace(params, dt=args.dt)
    if args.t_end is not None:
        params = replace(params, t_end=args.t_end)
    disturbance = config.disturbance
    if args.seed is not None:
        disturbance = replace(disturbance, seed=args.seed)
    return RunConfig(generators=config.generators, loss=config.loss,
                     topology=config.topology, params=params,
                     disturbance=disturbance, output=config.output, z0=config.z0)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fxdispatch",
        description="Fixed-time consensus economic dispatch simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("run", "simulate and write trajectory.csv + report.json"),
        ("check", "evaluate assumption gates"),
        ("bound", "print the analytic settling-time bound"),
        ("oracle", "solve the equilibrium independently of the dynamics"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="path to the YAML run file")
        p.add_argument("--out", default=None, help="output directory (run only)")
        p.add_argument("--force", action="store_true", help="run despite failed gates")
        p.add_argument("--seed", type=int, default=None, help="disturbance seed override")
        p.add_argument("--dt", type=float, default=None, help="integrator step override (s)")
        p.add_argument("--t-end", type=float, default=None, help="horizon override (s)")
    args = parser.parse_args(argv)

    try:
        config = _apply_overrides(load_config(args.config), args)
    except (ConfigurationError, AssumptionViolation, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        if args.command == "check":
            return cmd_check(config)
        if args.command == "bound":
            return cmd_bound(config)
        if args.command == "oracle":
            return cmd_oracle(config)
        return cmd_run(config, out_dir=args.out, force=args.force)
    except AssumptionViolation as e:
        print(f"assumption violation: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (dynamics.StepFailure, NewtonFailure) as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
