"""Acceptance suite: one or more tests per criterion, summarized as PASS/FAIL lines."""
import json
import time

import numpy as np
import pytest

from robust_consensus.cli import main
from robust_consensus.graph import path_graph
from robust_consensus.protocols import ProtocolConfig, UncertaintyModel
from robust_consensus.scenarios import build_scenario, chua_config, chua_state_matrix, mass_spring_config, \
    mass_spring_dynamics
from robust_consensus.simulation import Scenario, simulate
from robust_consensus.synthesis import (
    AgentDynamics,
    GainSet,
    care_residual,
    check_gamma_identity,
    is_stabilizable,
    solve_care,
    solve_consensus_lmi,
    verify_lmi,
)
from robust_consensus.verification import verify_trajectory

# reference gains of the mass-spring and Chua designs, four decimals
EXAMPLE_GAINS = {
    "mass_spring": {
        "K": [[-0.6693, -2.4595]],
        "Gamma": [[0.4480, 1.6462], [1.6462, 6.0489]],
        "atol": 5e-4,
    },
    "chua": {
        "K": [[-16.9070, -16.5791, -1.8297]],
        "Gamma": [[285.8453, 280.3016, 30.9344], [280.3016, 274.8654, 30.3344], [30.9344, 30.3344, 3.3477]],
        "atol": 5e-3,
    },
}


def _random_suite(count=100, seed=2024):
    rng = np.random.default_rng(seed)
    systems = []
    while len(systems) < count:
        n, p = int(rng.integers(1, 7)), int(rng.integers(1, 3))
        A, B = rng.normal(size=(n, n)), rng.normal(size=(n, p))
        if is_stabilizable(A, B):
            systems.append((A, B))
    return systems


def _example_dynamics():
    return [mass_spring_dynamics(2.5), AgentDynamics(chua_state_matrix(), [[1.0], [0.0], [0.0]])]


@pytest.mark.criterion(1, "reference K and Gamma satisfy Gamma = K^T K")
def test_reference_gain_identity():
    start = time.perf_counter()
    for fixture in EXAMPLE_GAINS.values():
        assert check_gamma_identity(np.array(fixture["K"]), np.array(fixture["Gamma"]), fixture["atol"])
    assert time.perf_counter() - start < 1.0


@pytest.mark.criterion(2, "CARE residual, Hurwitz closed loop, scalar case")
def test_care_oracle():
    start = time.perf_counter()
    for A, B in _random_suite():
        W = solve_care(A, B)
        res = np.linalg.norm(care_residual(A, B, W), "fro")
        assert res <= 1e-8 * (1 + np.linalg.norm(W, "fro"))
        assert np.linalg.eigvals(A - 2 * B @ B.T @ W).real.max() < 0
    W = solve_care(np.zeros((1, 1)), np.ones((1, 1)))
    assert abs(W[0, 0] - 1 / np.sqrt(2)) <= 1e-12
    assert time.perf_counter() - start < 10.0


@pytest.mark.criterion(3, "LMI margin below -1e-8 on examples and random suite")
def test_lmi_feasibility():
    start = time.perf_counter()
    cases = [(d.A, d.B) for d in _example_dynamics()] + _random_suite()
    for A, B in cases:
        P = solve_consensus_lmi(AgentDynamics(A, B))
        check = verify_lmi(A, B, P)
        assert check.feasible and check.margin < -1e-8
    assert time.perf_counter() - start < 10.0


@pytest.fixture(scope="module")
def static_mass_spring():
    start = time.perf_counter()
    s = build_scenario(mass_spring_config(kind="static_leaderless", t_final=20.0, h=1e-3))
    traj = simulate(s)
    return s, traj, time.perf_counter() - start


@pytest.mark.criterion(4, "static leaderless envelope on mass-spring")
def test_static_envelope(static_mass_spring):
    s, traj, elapsed = static_mass_spring
    rep = verify_trajectory(s, traj, "D1")
    assert traj.completed and rep.envelope_ok
    assert elapsed < 30.0


@pytest.mark.criterion(5, "static leaderless residual set D1")
def test_static_residual_set(static_mass_spring):
    s, traj, _ = static_mass_spring
    rep = verify_trajectory(s, traj, "D1")
    assert rep.passed
    tail = traj.times >= 0.8 * traj.times[-1]
    assert traj.error_norm_sq[tail].max() <= 1.02 * rep.bound_value


@pytest.mark.criterion(6, "adaptive leaderless gains bounded, V2 inside D2")
def test_adaptive_mass_spring():
    s = build_scenario(mass_spring_config(kind="adaptive_leaderless", t_final=30.0, phi=0.05, psi=0.05,
                                          tau=10.0, eps_rates=10.0, kappa=0.5))
    traj = simulate(s)
    assert traj.completed
    assert traj.d_bar.max() < 1e3 and traj.e_bar.max() < 1e3
    rep = verify_trajectory(s, traj, "D2")
    assert rep.passed and rep.metric == "V"


def _chua_check(gamma):
    s = build_scenario(chua_config(t_final=30.0, h=5e-4, gamma=gamma))
    traj = simulate(s, on_violation="record")
    assert traj.completed
    assert np.all(np.isfinite(traj.d_bar)) and np.all(np.isfinite(traj.e_bar))
    assert traj.d_bar.max() < 1e3 and traj.e_bar.max() < 1e3
    rep = verify_trajectory(s, traj, "D5")
    assert rep.passed
    return traj


@pytest.mark.criterion(7, "Chua adaptive leader-follower enters D5")
def test_chua_half_leader_bound():
    # 2.625 is half the leader's true input supremum, so the monitor records
    # violations while the run continues
    traj = _chua_check(2.625)
    leader = {m.name: m for m in traj.monitors}["leader_input"]
    assert leader.violations > 0


@pytest.mark.criterion(7, "Chua adaptive leader-follower enters D5")
def test_chua_true_leader_bound():
    traj = _chua_check(None)
    assert all(m.violations == 0 for m in traj.monitors)


@pytest.mark.criterion(8, "non-matching disturbance settles in D7")
@pytest.mark.parametrize("phases", [None, "spread"])
def test_non_matching(phases):
    cfg = mass_spring_config(kind="static_leaderless", t_final=20.0, upsilon=0.5, epsilon=2.0)
    if phases == "spread":
        cfg["non_matching"]["phases"] = list(2 * np.pi * np.arange(6) / 6)
    s = build_scenario(cfg)
    assert s.gains.epsilon == 2.0
    traj = simulate(s)
    rep = verify_trajectory(s, traj, "D7")
    assert traj.completed and rep.passed


@pytest.mark.criterion(9, "two-agent closed form delta(0) exp(-2t)")
def test_pair_closed_form():
    dyn = AgentDynamics([[0.0]], [[1.0]])
    gains = GainSet(P=np.eye(1), K=-np.eye(1), Gamma=np.eye(1), alpha=2.0, margin=-2.0, c=1.0)
    s = Scenario(graph=path_graph(2), dynamics=dyn, uncertainty=UncertaintyModel.none(2, 1),
                 protocol=ProtocolConfig("static_leaderless"), gains=gains,
                 x0=np.array([[1.0], [-1.0]]), t_final=1.0, h=1e-3)
    traj = simulate(s)
    delta = traj.states[:, 0, 0] - traj.states[:, 1, 0]
    assert np.abs(delta - 2.0 * np.exp(-2.0 * traj.times)).max() <= 1e-6


def _simulate_and_verify(tmp_path, capsys, name, **cfg_kw):
    scen = tmp_path / f"{name}.json"
    scen.write_text(json.dumps(mass_spring_config(kind="static_leaderless", t_final=20.0, **cfg_kw)))
    out = tmp_path / name
    assert main(["simulate", str(scen), "--out", str(out), "--auto-synthesize"]) == 0
    capsys.readouterr()
    code = main(["verify", "--trajectory", str(out / "trajectory.csv"),
                 "--scenario", str(out / "scenario_resolved.json"), "--bound", "D1"])
    report = json.loads(capsys.readouterr().out)
    return code, report


@pytest.mark.criterion(10, "under-gained run with large k_i fails verification")
def test_negative_control_large_springs(tmp_path, capsys):
    code, report = _simulate_and_verify(tmp_path, capsys, "under", c_multiplier=0.1, k_range=(20.0, 50.0))
    assert code == 4, f"verifier passed the under-gained run: {report}"


def test_negative_control_without_springs(tmp_path, capsys):
    # without the state-proportional switching term the coupling alone must
    # carry consensus; at c = 0.1 / lambda_2 the envelope is violated
    code, report = _simulate_and_verify(tmp_path, capsys, "under", c_multiplier=0.1, spring_constants=0.0)
    assert code == 4 and report["max_violation"] > 0
    code, _ = _simulate_and_verify(tmp_path, capsys, "nominal", c_multiplier=1.0, spring_constants=0.0)
    assert code == 0


@pytest.mark.criterion(11, "manifest rerun gives byte-identical CSV")
def test_manifest_determinism(tmp_path, capsys):
    scen = tmp_path / "ms.json"
    scen.write_text(json.dumps(mass_spring_config(t_final=2.0, seed=17)))
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", str(scen), "--out", str(first), "--auto-synthesize"]) == 0
    manifest = str(first / "manifest.json")
    assert main(["simulate", "--manifest", manifest, "--out", str(second)]) == 0
    third = tmp_path / "c"
    assert main(["simulate", "--manifest", manifest, "--out", str(third)]) == 0
    a, b, c = ((d / "trajectory.csv").read_bytes() for d in (first, second, third))
    assert a == b == c
