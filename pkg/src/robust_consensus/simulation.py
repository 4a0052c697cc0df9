"""Closed-loop network assembly and fixed-step integration.

The integrator is classical RK4 on a uniform grid.  The boundary-layer
laws are only piecewise smooth, and a fixed step keeps runs reproducible
and leaves any chattering of the discontinuous law visible.

State vector layout: stacked follower states (N*n), then the leader state
(n, leader-follower kinds only), then d_bar (N) and e_bar (N) for the
adaptive kinds (d_bar only for the simplified law).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import AssumptionViolatedAtRuntime, DivergenceDetected, NonFiniteStateError
from .graph import Graph, LeaderFollowerGraph, laplacian, leader_follower_partition
from .protocols import (
    AdaptiveState,
    ProtocolConfig,
    ProtocolKind,
    UncertaintyModel,
    adaptive_leaderless_control,
    discontinuous_leaderless_control,
    simplified_adaptive_control,
    static_leaderless_control,
    static_lf_control,
)
from .synthesis import AgentDynamics, GainSet

DIVERGENCE_LIMIT = 1e9
MONITOR_RTOL = 1e-9
MONITOR_ATOL = 1e-12


def step_rk4(f, y, t, h):
    """One classical Runge-Kutta step of y' = f(t, y)."""
    if not h > 0:
        raise ValueError("step size must be positive")
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    y_next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y_next)):
        raise NonFiniteStateError(f"non-finite state after step at t={t:g}")
    return y_next


@dataclass(frozen=True)
class LeaderSpec:
    """Leader with nominal dynamics driven by ``u0(t, x0)``, ||u0|| <= gamma."""

    x0: np.ndarray
    u0: Callable[[float, np.ndarray], np.ndarray]
    gamma: float


@dataclass(frozen=True)
class NonMatching:
    """Additive disturbance ``omega(t) -> (N, n)`` with ||omega_i|| <= upsilon_i."""

    omega: Callable[[float], np.ndarray]
    upsilon: np.ndarray


@dataclass
class Scenario:
    graph: object
    dynamics: AgentDynamics
    uncertainty: UncertaintyModel
    protocol: ProtocolConfig
    gains: GainSet
    x0: np.ndarray
    t_final: float
    h: float = 1e-3
    seed: int = 0
    leader: Optional[LeaderSpec] = None
    non_matching: Optional[NonMatching] = None
    adaptive0: Optional[AdaptiveState] = None
    config: Optional[dict] = None

    @property
    def n_agents(self) -> int:
        g = self.graph
        return g.n_followers if isinstance(g, LeaderFollowerGraph) else g.n_nodes

    @property
    def kind(self) -> ProtocolKind:
        return ProtocolKind(self.protocol.kind)

    def n_steps(self) -> int:
        steps = int(round(self.t_final / self.h))
        if steps < 1 or abs(steps * self.h - self.t_final) > 1e-9 * max(1.0, self.t_final):
            raise ValueError(f"t_final={self.t_final} is not a whole number of steps of h={self.h}")
        return steps


@dataclass
class MonitorReport:
    name: str
    checks: int = 0
    violations: int = 0
    worst_ratio: float = 0.0
    first_violation: Optional[dict] = None

    def to_dict(self):
        return {"name": self.name, "checks": self.checks, "violations": self.violations,
                "worst_ratio": self.worst_ratio, "first_violation": self.first_violation}


@dataclass
class Trajectory:
    """Sampled closed-loop solution on the uniform grid ``k * h``.

    ``error`` is the centred consensus error for leaderless kinds and the
    leader-follower error ``x_i - x_0`` otherwise.  Controls are sampled at
    grid points from the pre-step state.
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    error: np.ndarray
    leader: Optional[np.ndarray] = None
    d_bar: Optional[np.ndarray] = None
    e_bar: Optional[np.ndarray] = None
    monitors: list = field(default_factory=list)
    completed: bool = True

    @property
    def error_norm(self) -> np.ndarray:
        return np.linalg.norm(self.error.reshape(len(self.times), -1), axis=1)

    @property
    def error_norm_sq(self) -> np.ndarray:
        return np.sum(self.error.reshape(len(self.times), -1) ** 2, axis=1)


class _Network:
    """Vectorized closed-loop right-hand side for one scenario."""

    def __init__(self, s: Scenario):
        self.s = s
        self.kind = s.kind
        self.N = s.n_agents
        self.n, self.p = s.dynamics.n, s.dynamics.p
        self.A, self.B = s.dynamics.A, s.dynamics.B
        self.cfg = s.protocol.resolved(self.N)
        self.lf = self.kind.leader_follower
        if self.lf != isinstance(s.graph, LeaderFollowerGraph):
            raise ValueError(f"protocol {self.kind.value} does not match the graph type")
        if self.lf:
            if s.leader is None:
                raise ValueError("leader-follower protocol needs a leader specification")
            self.L1, L2 = leader_follower_partition(s.graph)
            self.a0 = -L2
        else:
            self.L = laplacian(s.graph)
        self.n_adapt = self.kind.adaptive_channels
        self.i_leader = self.N * self.n
        self.i_adapt = self.i_leader + (self.n if self.lf else 0)
        self.size = self.i_adapt + self.n_adapt * self.N
        g = s.gains
        if self.kind in (ProtocolKind.STATIC_LEADERLESS, ProtocolKind.DISCONTINUOUS_LEADERLESS) and g.c is None:
            raise ValueError("static leaderless protocol needs coupling gain c")
        if self.kind is ProtocolKind.STATIC_LEADER_FOLLOWER and (g.c1 is None or g.c2 is None):
            raise ValueError("static leader-follower protocol needs coupling gains c1 and c2")

    def pack(self, X, x0=None, adaptive=None):
        y = np.zeros(self.size)
        y[: self.i_leader] = np.asarray(X, dtype=float).reshape(-1)
        if self.lf:
            y[self.i_leader: self.i_adapt] = x0
        if self.n_adapt:
            adaptive = adaptive or AdaptiveState.zeros(self.N)
            y[self.i_adapt: self.i_adapt + self.N] = adaptive.d_bar
            if self.n_adapt == 2:
                y[self.i_adapt + self.N:] = adaptive.e_bar
        return y

    def unpack(self, y):
        X = y[: self.i_leader].reshape(self.N, self.n)
        x0 = y[self.i_leader: self.i_adapt] if self.lf else None
        d = y[self.i_adapt: self.i_adapt + self.N] if self.n_adapt else None
        e = y[self.i_adapt + self.N:] if self.n_adapt == 2 else None
        return X, x0, d, e

    def delta(self, X, x0):
        if self.lf:
            return self.L1 @ X - np.outer(self.a0, x0)
        return self.L @ X

    def evaluate(self, t, y):
        """Return (y_dot, u) at (t, y)."""
        s, cfg, g = self.s, self.cfg, self.s.gains
        X, x0, d, e = self.unpack(y)
        D = self.delta(X, x0)
        kind = self.kind
        d_dot = e_dot = None
        if kind is ProtocolKind.STATIC_LEADERLESS:
            u = static_leaderless_control(D, s.uncertainty.bound.rho(X, t), g.K, g.c, cfg.kappa)
        elif kind is ProtocolKind.DISCONTINUOUS_LEADERLESS:
            u = discontinuous_leaderless_control(D, s.uncertainty.bound.rho(X, t), g.K, g.c)
        elif kind is ProtocolKind.STATIC_LEADER_FOLLOWER:
            u = static_lf_control(D, s.uncertainty.bound.rho(X, t), g.K, g.c1, g.c2, cfg.gamma, cfg.kappa)
        elif kind is ProtocolKind.SIMPLIFIED_ADAPTIVE:
            u, d_dot = simplified_adaptive_control(D, d, g.K, g.Gamma, cfg.kappa, cfg.tau, cfg.phi)
        else:
            u, d_dot, e_dot = adaptive_leaderless_control(D, d, e, X, g.K, g.Gamma, cfg.kappa,
                                                          cfg.tau, cfg.eps_rates, cfg.phi, cfg.psi)
        Xdot = X @ self.A.T + (u + s.uncertainty.f(X, t)) @ self.B.T
        if s.non_matching is not None:
            Xdot = Xdot + s.non_matching.omega(t)
        ydot = np.empty_like(y)
        ydot[: self.i_leader] = Xdot.reshape(-1)
        if self.lf:
            ydot[self.i_leader: self.i_adapt] = self.A @ x0 + self.B @ np.atleast_1d(s.leader.u0(t, x0))
        if d_dot is not None:
            ydot[self.i_adapt: self.i_adapt + self.N] = d_dot
        if e_dot is not None:
            ydot[self.i_adapt + self.N:] = e_dot
        return ydot, u

    def rhs(self, t, y):
        return self.evaluate(t, y)[0]

    def error(self, X, x0):
        if self.lf:
            return X - x0
        return X - X.mean(axis=0)


def _exceeds(value, bound):
    return value > bound * (1.0 + MONITOR_RTOL) + MONITOR_ATOL


def monitor_names(s: Scenario):
    names = ["matched_uncertainty"]
    if s.leader is not None and s.kind.leader_follower:
        names.append("leader_input")
    if s.non_matching is not None:
        names.append("non_matching_disturbance")
    return names


def evaluate_monitors(s: Scenario, t, X, x0=None):
    """Check the declared bounds at one sample.

    Returns a list of ``(name, ratio_array)`` where ``ratio`` is value/bound
    per agent (inf where the bound is zero but the value is not) and a list
    of ``(name, agent)`` violations.
    """
    out, bad = [], []
    f_norm = np.linalg.norm(np.asarray(s.uncertainty.f(X, t), dtype=float), axis=-1)
    rho = s.uncertainty.bound.rho(X, t)
    out.append(("matched_uncertainty", _ratio(f_norm, rho)))
    bad += [("matched_uncertainty", int(i)) for i in np.nonzero(_exceeds(f_norm, rho))[0]]
    if s.leader is not None and s.kind.leader_follower:
        u0 = np.linalg.norm(np.atleast_1d(s.leader.u0(t, x0)))
        out.append(("leader_input", _ratio(np.array([u0]), np.array([s.leader.gamma]))))
        if _exceeds(u0, s.leader.gamma):
            bad.append(("leader_input", -1))
    if s.non_matching is not None:
        w = np.linalg.norm(np.asarray(s.non_matching.omega(t), dtype=float), axis=-1)
        ups = np.asarray(s.non_matching.upsilon, dtype=float)
        out.append(("non_matching_disturbance", _ratio(w, ups)))
        bad += [("non_matching_disturbance", int(i)) for i in np.nonzero(_exceeds(w, ups))[0]]
    return out, bad


def _ratio(v, b):
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(b > 0, v / np.where(b > 0, b, 1.0), np.where(v > MONITOR_ATOL, np.inf, 0.0))
    return r


def simulate(s: Scenario, *, on_violation="raise") -> Trajectory:
    """Integrate the closed loop over ``[0, t_final]``.

    Parameters
    ----------
    on_violation : {"raise", "record"}
        What to do when a declared bound (matched uncertainty, leader input,
        non-matching disturbance) is exceeded at a grid point.

    Raises
    ------
    DivergenceDetected
        State norm above 1e9 or non-finite; the partial trajectory is attached.
    AssumptionViolatedAtRuntime
        Only with ``on_violation="raise"``.
    """
    if on_violation not in ("raise", "record"):
        raise ValueError("on_violation must be 'raise' or 'record'")
    net = _Network(s)
    N, n, p = net.N, net.n, net.p
    steps = s.n_steps()
    x0_init = np.asarray(s.x0, dtype=float).reshape(N, n)
    leader_x0 = np.asarray(s.leader.x0, dtype=float) if net.lf else None
    y = net.pack(x0_init, leader_x0, s.adaptive0)

    times = np.arange(steps + 1) * s.h
    states = np.zeros((steps + 1, N, n))
    controls = np.zeros((steps + 1, N, p))
    leader = np.zeros((steps + 1, n)) if net.lf else None
    d_hist = np.zeros((steps + 1, N)) if net.n_adapt else None
    e_hist = np.zeros((steps + 1, N)) if net.n_adapt == 2 else None
    monitors = {name: MonitorReport(name) for name in monitor_names(s)}

    def record(k, y):
        t = times[k]
        X, x0, d, e = net.unpack(y)
        _, u = net.evaluate(t, y)
        states[k], controls[k] = X, u
        if leader is not None:
            leader[k] = x0
        if d_hist is not None:
            d_hist[k] = d
        if e_hist is not None:
            e_hist[k] = e
        ratios, bad = evaluate_monitors(s, t, X, x0)
        for name, r in ratios:
            m = monitors[name]
            m.checks += 1
            m.worst_ratio = max(m.worst_ratio, float(np.max(r)))
        for name, agent in bad:
            m = monitors[name]
            m.violations += 1
            if m.first_violation is None:
                m.first_violation = {"t": float(t), "agent": agent}
            if on_violation == "raise":
                raise AssumptionViolatedAtRuntime(
                    f"{name} bound exceeded at t={t:.6g} (agent {agent})", monitor=name, t=float(t), agent=agent)

    def build(k_last, completed):
        sl = slice(0, k_last + 1)
        X = states[sl]
        err = X - leader[sl][:, None, :] if net.lf else X - X.mean(axis=1, keepdims=True)
        return Trajectory(times=times[sl], states=X, controls=controls[sl], error=err,
                          leader=None if leader is None else leader[sl],
                          d_bar=None if d_hist is None else d_hist[sl],
                          e_bar=None if e_hist is None else e_hist[sl],
                          monitors=list(monitors.values()), completed=completed)

    for k in range(steps):
        record(k, y)
        try:
            y = step_rk4(net.rhs, y, times[k], s.h)
        except (NonFiniteStateError, FloatingPointError) as exc:
            raise DivergenceDetected(f"non-finite state at t={times[k + 1]:.6g}", build(k, False)) from exc
        if net.n_adapt:
            # projection onto the nonnegative orthant; RK4 can undershoot slightly
            np.maximum(y[net.i_adapt:], 0.0, out=y[net.i_adapt:])
        if np.linalg.norm(y) > DIVERGENCE_LIMIT:
            raise DivergenceDetected(f"state norm exceeded {DIVERGENCE_LIMIT:g} at t={times[k + 1]:.6g}",
                                     build(k, False))
    record(steps, y)
    return build(steps, True)
