"""Scenario-aware verification: pick the residual set, evaluate it, judge a trajectory."""

from __future__ import annotations

import numpy as np

from .graph import LeaderFollowerGraph, laplacian, leader_follower_partition, spectrum
from .metrics import (
    TOL_REL,
    V_LEVEL_BOUNDS,
    analysis_constants,
    envelope_check,
    quadratic_lyapunov,
    residual_bound,
    uub_verdict,
)
from .protocols import ProtocolKind
from .simulation import MonitorReport, evaluate_monitors, monitor_names

# theorem-appropriate default set per protocol kind (with, without non-matching disturbance)
_DEFAULT_BOUND = {
    ProtocolKind.STATIC_LEADERLESS: ("D1", "D7"),
    ProtocolKind.DISCONTINUOUS_LEADERLESS: ("D1", "D7"),
    ProtocolKind.ADAPTIVE_LEADERLESS: ("D2", "D8"),
    ProtocolKind.SIMPLIFIED_ADAPTIVE: ("D2", "D8"),
    ProtocolKind.STATIC_LEADER_FOLLOWER: ("D4", "D4"),
    ProtocolKind.ADAPTIVE_LEADER_FOLLOWER: ("D5", "D5"),
}


def default_bound_id(scenario) -> str:
    plain, disturbed = _DEFAULT_BOUND[scenario.kind]
    return disturbed if scenario.non_matching is not None else plain


def bound_inputs(scenario) -> dict:
    """Every named quantity the residual-set formulas may ask for."""
    g, cfg = scenario.gains, scenario.protocol.resolved(scenario.n_agents)
    ev = np.linalg.eigvalsh(g.P)
    out = {"lam_max_P": float(ev[-1]), "lam_min_P": float(ev[0]), "N": scenario.n_agents,
           "kappa": cfg.kappa, "alpha": g.alpha, "epsilon": g.epsilon}
    if isinstance(scenario.graph, LeaderFollowerGraph):
        L1, _ = leader_follower_partition(scenario.graph)
        out["lam_min_L1"] = float(np.linalg.eigvalsh(L1)[0])
    else:
        sp = spectrum(laplacian(scenario.graph))
        out["lam2"], out["lam_max_L"] = sp.lambda2, sp.lambda_max
    bound = scenario.uncertainty.bound
    d = getattr(bound, "d", None)
    e = getattr(bound, "e", None)
    if scenario.kind.adaptive_channels == 2:
        out["e"], out["psi"] = e, cfg.psi
    gamma = scenario.leader.gamma if scenario.leader is not None else 0.0
    psi = cfg.psi if scenario.kind.adaptive_channels == 2 else None
    eps_rates = cfg.eps_rates if scenario.kind.adaptive_channels == 2 else None
    const = analysis_constants(g.alpha, d=d, lam2=out.get("lam2"), lam_min_L1=out.get("lam_min_L1"),
                               gamma=gamma, phi=cfg.phi if scenario.kind.adaptive_channels else None,
                               tau=cfg.tau, psi=psi, eps_rates=eps_rates, epsilon=g.epsilon)
    out.update(beta=const.beta, beta_hat=const.beta_hat, delta=const.delta, varrho=const.varrho,
               sigma=const.sigma, phi=cfg.phi)
    if scenario.non_matching is not None:
        out["upsilon"] = scenario.non_matching.upsilon
    return out


def _coupling_matrix(scenario):
    if isinstance(scenario.graph, LeaderFollowerGraph):
        return leader_follower_partition(scenario.graph)[0]
    return laplacian(scenario.graph)


def lyapunov_series(scenario, traj, bound_id):
    """The V-function whose level/envelope the chosen set refers to, on the whole trajectory."""
    bid = bound_id.upper()
    L = _coupling_matrix(scenario)
    V = quadratic_lyapunov(traj.error, L, scenario.gains.P)
    if bid in V_LEVEL_BOUNDS:
        inp = bound_inputs(scenario)
        cfg = scenario.protocol.resolved(scenario.n_agents)
        beta = inp["beta_hat"] if bid == "D5" else inp["beta"]
        V = V + np.sum((traj.d_bar - beta) ** 2 / (2.0 * cfg.tau), axis=1)
        if traj.e_bar is not None:
            V = V + np.sum((traj.e_bar - inp["e"]) ** 2 / (2.0 * cfg.eps_rates), axis=1)
    return V


def _envelope_params(bid, inp, threshold):
    """(rate, offset) of the exponential envelope attached to a set, or None."""
    if bid in ("D1", "D4"):
        return inp["alpha"], inp["N"] * inp["kappa"] / inp["alpha"]
    if bid == "D7":
        eps = inp["epsilon"]
        dist = inp["lam_max_L"] / inp["lam_min_P"] * float(np.sum(np.asarray(inp["upsilon"]) ** 2))
        return eps - 1.0, (0.5 * dist + inp["N"] * inp["kappa"]) / (eps - 1.0)
    if bid in ("D2", "D5"):
        return inp["delta"], threshold
    if bid == "D8":
        return inp["sigma"], threshold
    return None


def posthoc_monitors(scenario, traj):
    """Re-evaluate the assumption monitors on stored samples."""
    reports = {name: MonitorReport(name) for name in monitor_names(scenario)}
    for k, t in enumerate(traj.times):
        x0 = traj.leader[k] if traj.leader is not None else None
        ratios, bad = evaluate_monitors(scenario, float(t), traj.states[k], x0)
        for name, r in ratios:
            m = reports[name]
            m.checks += 1
            m.worst_ratio = max(m.worst_ratio, float(np.max(r)))
        for name, agent in bad:
            m = reports[name]
            m.violations += 1
            if m.first_violation is None:
                m.first_violation = {"t": float(t), "agent": agent}
    return list(reports.values())


def verify_trajectory(scenario, traj, bound_id=None, *, settle_fraction=0.2, tol=TOL_REL):
    """Residual-set verdict (plus envelope check where one applies).

    The run passes when the error metric stays inside the set (with
    relative tolerance ``tol``) over the final ``settle_fraction`` of the
    horizon and the envelope, if defined, is never exceeded.
    """
    bid = (bound_id or default_bound_id(scenario)).upper()
    inp = bound_inputs(scenario)
    threshold = residual_bound(bid, **inp)
    notes = []
    if bid in V_LEVEL_BOUNDS:
        if traj.d_bar is None:
            raise ValueError(f"{bid} is a V-level set and needs adaptive-gain histories")
        series, metric = lyapunov_series(scenario, traj, bid), "V"
        notes.append("strict '<' membership checked as '<=' with relative tolerance")
    else:
        series, metric = traj.error_norm_sq, "error_norm_sq"
    report = uub_verdict(traj, threshold, settle_fraction, series=series, tol=tol, bound_id=bid, metric=metric)

    env = _envelope_params(bid, inp, threshold)
    if env is not None:
        V = series if metric == "V" else lyapunov_series(scenario, traj, bid)
        res = envelope_check(V, float(V[0]), env[0], env[1], traj.times, tol_rel=tol)
        report.envelope_ok, report.envelope_max_violation = res.ok, res.max_violation
    monitors = traj.monitors or posthoc_monitors(scenario, traj)
    report.assumption_monitors = [m.to_dict() for m in monitors]
    if not traj.completed:
        notes.append("trajectory is partial (run aborted)")
        report.passed = False
    if report.envelope_ok is False:
        report.passed = False
        report.max_violation = max(report.max_violation, report.envelope_max_violation)
    report.notes = notes
    return report
