"""Command-line interface: ``robust-consensus {synthesize,simulate,verify,demo}``.

Exit codes: 0 ok, 1 input error, 2 infeasible design, 3 divergence,
4 verification failed.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .errors import (
    ConsensusError,
    DivergenceDetected,
    FeasibilityCheckFailed,
    InfeasiblePError,
    NotStabilizableError,
    NumericalFailure,
    SingularPError,
)
from .graph import LeaderFollowerGraph, graph_from_dict, laplacian, leader_follower_partition, spectrum
from .io import dumps, read_json, read_trajectory_csv, write_json, write_trajectory_csv
from .scenarios import build_scenario, chua_config, mass_spring_config, resolve_config
from .simulation import simulate
from .synthesis import AgentDynamics, design_gains
from .verification import verify_trajectory

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_DIVERGED, EXIT_FAILED = 0, 1, 2, 3, 4
_INFEASIBLE = (NotStabilizableError, InfeasiblePError, SingularPError, FeasibilityCheckFailed, NumericalFailure)


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


# -- synthesize ----------------------------------------------------------------

def cmd_synthesize(args) -> int:
    try:
        doc = read_json(args.input)
        dyn_doc = doc.get("dynamics", doc)
        dyn = AgentDynamics(dyn_doc["A"], dyn_doc["B"])
        lam, mode, gamma = None, "leaderless", None
        if "graph" in doc:
            graph = graph_from_dict(doc["graph"])
            if isinstance(graph, LeaderFollowerGraph):
                L1, _ = leader_follower_partition(graph)
                lam, mode = float(np.linalg.eigvalsh(L1)[0]), "leader_follower"
                gamma = doc.get("protocol", {}).get("gamma", doc.get("leader", {}).get("gamma", 0.0))
            else:
                lam = spectrum(laplacian(graph)).lambda2
        epsilon = args.epsilon
        if epsilon is None and doc.get("non_matching"):
            epsilon = doc["non_matching"].get("epsilon", 2.0)
    except _INFEASIBLE as exc:
        _err(str(exc))
        return EXIT_INFEASIBLE
    except (OSError, ValueError, KeyError, TypeError, AttributeError, ConsensusError) as exc:
        _err(f"malformed input: {exc}")
        return EXIT_INPUT
    try:
        gains = design_gains(dyn, lam=lam, mode=mode, gamma=gamma, epsilon=epsilon, multiplier=args.multiplier)
    except _INFEASIBLE as exc:
        msg = str(exc)
        if isinstance(exc, NotStabilizableError) and "stabilizable" not in msg:
            msg = f"not stabilizable: {msg}"
        _err(msg)
        return EXIT_INFEASIBLE
    except (ValueError, ConsensusError) as exc:
        _err(f"malformed input: {exc}")
        return EXIT_INPUT
    out = gains.to_dict()
    out["feasible"] = True
    if epsilon is not None:
        out["Q"] = out["P"]
    print(dumps(out))
    return EXIT_OK


# -- simulate ------------------------------------------------------------------

def _manifest(scenario_path, out_dir, seed, h, auto):
    return {"scenario_path": os.path.abspath(scenario_path), "output_dir": os.path.abspath(out_dir),
            "command": "simulate", "tool_version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "resolved_seed": seed, "h": h, "auto_synthesize": auto}


def run_simulation(scenario_path, out_dir, seed=None, h=None, auto_synthesize=False):
    """Simulate one scenario file into ``out_dir``; returns ``(exit_code, message)``."""
    try:
        config = read_json(scenario_path)
        resolved = resolve_config(config, auto_synthesize=auto_synthesize, seed=seed, h=h)
    except _INFEASIBLE as exc:
        return EXIT_INFEASIBLE, str(exc)
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError, ConsensusError) as exc:
        return EXIT_INPUT, f"malformed scenario {scenario_path}: {exc}"
    os.makedirs(out_dir, exist_ok=True)
    sim = resolved["sim"]
    write_json(os.path.join(out_dir, "manifest.json"),
               _manifest(scenario_path, out_dir, sim["seed"], sim["h"], auto_synthesize))
    write_json(os.path.join(out_dir, "scenario_resolved.json"), resolved)
    try:
        scenario = build_scenario(resolved, auto_synthesize=False)
        traj = simulate(scenario, on_violation="record")
    except DivergenceDetected as exc:
        if exc.trajectory is not None:
            write_trajectory_csv(os.path.join(out_dir, "trajectory.csv"), exc.trajectory)
        return EXIT_DIVERGED, str(exc)
    except (ValueError, ConsensusError) as exc:
        return EXIT_INPUT, str(exc)
    write_trajectory_csv(os.path.join(out_dir, "trajectory.csv"), traj)
    write_json(os.path.join(out_dir, "monitors.json"), [m.to_dict() for m in traj.monitors])
    fired = [m.name for m in traj.monitors if m.violations]
    if fired:
        return EXIT_OK, f"warning: assumption monitors fired: {', '.join(fired)}"
    return EXIT_OK, ""


def _sim_job(job):
    return run_simulation(*job)


def cmd_simulate(args) -> int:
    seed, h, auto = args.seed, args.h, args.auto_synthesize
    scenarios = list(args.scenario)
    out = args.out
    if args.manifest:
        try:
            man = read_json(args.manifest)
            scenarios = [man["scenario_path"]]
            seed = man["resolved_seed"] if seed is None else seed
            h = man.get("h") if h is None else h
            auto = auto or man.get("auto_synthesize", False)
            out = out or man["output_dir"]
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            _err(f"bad manifest: {exc}")
            return EXIT_INPUT
    if not scenarios:
        _err("no scenario given")
        return EXIT_INPUT
    out = out or "."
    if len(scenarios) == 1:
        jobs = [(scenarios[0], out, seed, h, auto)]
    else:
        jobs = [(p, os.path.join(out, os.path.splitext(os.path.basename(p))[0]), seed, h, auto) for p in scenarios]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sim_job, jobs))
    else:
        results = [_sim_job(j) for j in jobs]
    code = EXIT_OK
    for (path, *_), (rc, msg) in zip(jobs, results):
        if msg:
            print(f"{path}: {msg}", file=sys.stderr)
        code = max(code, rc)
    return code


# -- verify --------------------------------------------------------------------

def cmd_verify(args) -> int:
    try:
        traj = read_trajectory_csv(args.trajectory)
        config = read_json(args.scenario)
        scenario = build_scenario(config, auto_synthesize=True)
    except _INFEASIBLE as exc:
        _err(str(exc))
        return EXIT_INFEASIBLE
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError, ConsensusError) as exc:
        _err(f"malformed input: {exc}")
        return EXIT_INPUT
    _, N, n = traj.states.shape
    p = traj.controls.shape[2]
    lf_csv = traj.leader is not None
    adaptive = scenario.kind.adaptive_channels
    expected = (scenario.n_agents, scenario.dynamics.n, scenario.dynamics.p, scenario.kind.leader_follower,
                adaptive >= 1, adaptive == 2)
    got = (N, n, p, lf_csv, traj.d_bar is not None, traj.e_bar is not None)
    if expected != got:
        _err(f"trajectory/scenario mismatch: scenario (N, n, p, leader, dbar, ebar) = {expected}, csv = {got}")
        return EXIT_INPUT
    try:
        report = verify_trajectory(scenario, traj, args.bound, settle_fraction=args.settle_fraction)
    except (ValueError, ConsensusError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    print(dumps(report.to_dict()))
    return EXIT_OK if report.passed else EXIT_FAILED


# -- demo ----------------------------------------------------------------------

def demo_rows(quick=False):
    """Run both worked examples and return summary rows."""
    runs = [
        ("mass-spring", mass_spring_config(kind="static_leaderless", t_final=10.0 if quick else 20.0)),
        ("mass-spring", mass_spring_config(kind="adaptive_leaderless", t_final=10.0 if quick else 30.0)),
        ("chua", chua_config(kind="adaptive_leader_follower", t_final=5.0 if quick else 30.0)),
    ]
    rows = []
    for name, cfg in runs:
        s = build_scenario(cfg)
        traj = simulate(s, on_violation="record")
        rep = verify_trajectory(s, traj)
        rows.append({"example": name, "protocol": s.kind.value, "bound": rep.bound_id,
                     "threshold": rep.bound_value, "metric": rep.metric,
                     "final_error_norm": float(traj.error_norm[-1]), "entry_time": rep.entry_time,
                     "passed": rep.passed})
    return rows


def cmd_demo(args) -> int:
    rows = demo_rows(args.quick)
    fmt = "{:<12} {:<26} {:<5} {:>12} {:>14} {:>10} {:>6}"
    print(fmt.format("example", "protocol", "set", "threshold", "final ||err||", "entry t", "pass"))
    for r in rows:
        entry = "-" if r["entry_time"] is None else f"{r['entry_time']:.3f}"
        print(fmt.format(r["example"], r["protocol"], r["bound"], f"{r['threshold']:.4g}",
                         f"{r['final_error_norm']:.4g}", entry, "yes" if r["passed"] else "no"))
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robust-consensus", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="design P, K, Gamma, alpha and coupling gains")
    p.add_argument("input", help="scenario or dynamics JSON")
    p.add_argument("--epsilon", type=float, default=None, help="shifted design for non-matching disturbances")
    p.add_argument("--multiplier", type=float, default=1.0, help="scale on the minimal coupling gains")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="integrate scenario(s) and write trajectory CSV")
    p.add_argument("scenario", nargs="*", help="scenario JSON file(s)")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--h", type=float, default=None, help="step size")
    p.add_argument("--auto-synthesize", action="store_true", help="synthesize gains missing from the scenario")
    p.add_argument("--manifest", default=None, help="re-run from a manifest.json")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for several scenario files")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="check a trajectory against a residual set")
    p.add_argument("--trajectory", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--bound", default=None, choices=[f"D{i}" for i in range(1, 10)])
    p.add_argument("--settle-fraction", type=float, default=0.2)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("demo", help="run both worked examples and print a summary table")
    p.add_argument("--quick", action="store_true", help="shorter horizons")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
