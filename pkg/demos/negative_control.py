#!/usr/bin/env python3
"""Can the verifier say no?

A verifier that always passes is worthless, so this script runs the same
network twice through the command-line tool: once with the designed
coupling ``c = 1 / lambda_2`` and once with a tenth of it. Without spring
uncertainty the coupling alone drives consensus, and the under-gained run
breaks the Lyapunov envelope, so ``verify`` exits with code 4.

With stiff springs the state-proportional switching term takes over and
even the under-gained run stays inside the set. That case is shown last.
"""
import contextlib
import io
import json
import tempfile
from pathlib import Path

from robust_consensus.cli import main as cli
from robust_consensus.scenarios import mass_spring_config


def simulate_and_verify(workdir, name, **kw):
    path = workdir / f"{name}.json"
    path.write_text(json.dumps(mass_spring_config(kind="static_leaderless", t_final=20.0, **kw)))
    out = workdir / name
    with contextlib.redirect_stdout(io.StringIO()):
        cli(["simulate", str(path), "--out", str(out), "--auto-synthesize"])
        return cli(["verify", "--trajectory", str(out / "trajectory.csv"),
                    "--scenario", str(out / "scenario_resolved.json"), "--bound", "D1"])


def main():
    cases = [("nominal, no springs", dict(c_multiplier=1.0, spring_constants=0.0)),
             ("c / 10, no springs", dict(c_multiplier=0.1, spring_constants=0.0)),
             ("c / 10, k in [20, 50]", dict(c_multiplier=0.1, k_range=(20.0, 50.0)))]
    with tempfile.TemporaryDirectory() as tmp:
        codes = [(label, simulate_and_verify(Path(tmp), f"case{i}", **kw)) for i, (label, kw) in enumerate(cases)]
    for label, code in codes:
        print(f"{label:<24} verify exit code {code}")


if __name__ == "__main__":
    main()
