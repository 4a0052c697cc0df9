"""Boundary-layer nonlinearities and the distributed control laws.

Every function here works on one agent (``w`` of shape ``(p,)``) or on a
stack of agents (``w`` of shape ``(N, p)`` with per-agent scalars of shape
``(N,)``); the simulator uses the stacked form.  ``delta`` always denotes
the aggregated neighbour difference ``sum_j a_ij (x_i - x_j)`` (including
the leader term for leader-follower laws).

Ties on the switching surface (``gain * ||w|| == kappa``) take the inner
``w / kappa`` branch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


def _norm(w):
    return np.linalg.norm(w, axis=-1, keepdims=True)


def _col(s):
    # per-agent scalar -> broadcastable against (..., p)
    return np.asarray(s, dtype=float)[..., None]


def _unit_or_linear(w, gain, kappa):
    """w/||w|| where gain*||w|| > kappa, else w/kappa."""
    w = np.asarray(w, dtype=float)
    nrm = _norm(w)
    outer = _col(gain) * nrm > kappa
    safe = np.where(outer, nrm, 1.0)
    return np.where(outer, w / safe, w / kappa)


def g_boundary(w, rho, kappa):
    """Continuous approximation of the unit vector w/||w|| with layer width kappa."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return _unit_or_linear(w, rho, kappa)


def g_hat(w):
    """Discontinuous unit-vector map, 0 at the origin."""
    w = np.asarray(w, dtype=float)
    nrm = _norm(w)
    return np.where(nrm > 0, w / np.where(nrm > 0, nrm, 1.0), 0.0)


def g_tilde(w, rho, gamma, kappa):
    """Leader-follower variant: the switching gain is gamma + rho."""
    return g_boundary(w, np.asarray(gamma, dtype=float) + np.asarray(rho, dtype=float), kappa)


def r_boundary(w, d_bar, e_bar, x_norm, kappa):
    """Adaptive boundary layer with gain d_bar + e_bar * ||x||.

    Outer branch ``w * gain / ||w||``; inner branch ``w * gain**2 / kappa``.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    w = np.asarray(w, dtype=float)
    gain = np.asarray(d_bar, dtype=float) + np.asarray(e_bar, dtype=float) * np.asarray(x_norm, dtype=float)
    nrm = _norm(w)
    outer = _col(gain) * nrm > kappa
    safe = np.where(outer, nrm, 1.0)
    return np.where(outer, w * _col(gain) / safe, w * _col(gain) ** 2 / kappa)


def r_bar(w, d_bar, kappa):
    """Nonlinearity of the simplified adaptive law (constant uncertainty bounds).

    Outer branch ``w * d_bar / ||w||``, inner branch ``w * d_bar / kappa``.
    Unlike :func:`r_boundary` the inner branch is linear in ``d_bar``, so the
    map jumps across the switching surface unless ``d_bar == 1``.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return _col(d_bar) * _unit_or_linear(w, d_bar, kappa)


def _kdelta(delta, K):
    return np.asarray(delta, dtype=float) @ np.asarray(K, dtype=float).T


def _quad(delta, Gamma):
    delta = np.asarray(delta, dtype=float)
    return np.einsum("...i,ij,...j->...", delta, Gamma, delta)


def static_leaderless_control(delta, rho, K, c, kappa):
    w = _kdelta(delta, K)
    return c * w + _col(rho) * g_boundary(w, rho, kappa)


def discontinuous_leaderless_control(delta, rho, K, c):
    w = _kdelta(delta, K)
    return c * w + _col(rho) * g_hat(w)


def adaptive_leaderless_control(delta, d_bar, e_bar, x, K, Gamma, kappa, tau, eps_rates, phi, psi):
    """Adaptive law with sigma-modification.

    Returns
    -------
    u, d_bar_dot, e_bar_dot
    """
    w = _kdelta(delta, K)
    w_norm = np.linalg.norm(w, axis=-1)
    x_norm = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
    u = _col(d_bar) * w + r_boundary(w, d_bar, e_bar, x_norm, kappa)
    d_dot = tau * (-phi * d_bar + _quad(delta, Gamma) + w_norm)
    e_dot = eps_rates * (-psi * e_bar + w_norm * x_norm)
    return u, d_dot, e_dot


def adaptive_lf_control(delta, d_hat, e_hat, x, K, Gamma, kappa, tau, eps_rates, phi, psi):
    """Leader-follower adaptive law; ``delta`` must include the leader term a_i0 (x_i - x_0)."""
    return adaptive_leaderless_control(delta, d_hat, e_hat, x, K, Gamma, kappa, tau, eps_rates, phi, psi)


def static_lf_control(delta, rho, K, c1, c2, gamma, kappa):
    w = _kdelta(delta, K)
    rho = np.asarray(rho, dtype=float)
    return c1 * w + _col(c2 + rho) * g_tilde(w, rho, gamma, kappa)


def simplified_adaptive_control(delta, d_bar, K, Gamma, kappa, tau, phi):
    """Adaptive law for constant uncertainty bounds: one gain per agent.

    Returns ``(u, d_bar_dot)``.
    """
    w = _kdelta(delta, K)
    u = _col(d_bar) * w + r_bar(w, d_bar, kappa)
    d_dot = tau * (-phi * d_bar + _quad(delta, Gamma) + np.linalg.norm(w, axis=-1))
    return u, d_dot


# -- uncertainty descriptions --------------------------------------------------

@dataclass(frozen=True)
class RhoBound:
    """||f_i(x_i, t)|| <= rho(X, t)[i] for an arbitrary continuous rho."""

    func: Callable[[np.ndarray, float], np.ndarray]

    def rho(self, X, t):
        return np.asarray(self.func(X, t), dtype=float)


@dataclass(frozen=True)
class LinearBound:
    """||f_i|| <= d_i + e_i ||x_i||."""

    d: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        d, e = np.atleast_1d(np.asarray(self.d, float)), np.atleast_1d(np.asarray(self.e, float))
        if np.any(d < 0) or np.any(e < 0):
            raise ValueError("bound coefficients must be nonnegative")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "e", e)

    def rho(self, X, t):
        return self.d + self.e * np.linalg.norm(X, axis=-1)


@dataclass(frozen=True)
class ConstantBound:
    """||f_i|| <= d_i."""

    d: np.ndarray

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.d, float))
        if np.any(d < 0):
            raise ValueError("bound must be nonnegative")
        object.__setattr__(self, "d", d)

    @property
    def e(self):
        return np.zeros_like(self.d)

    def rho(self, X, t):
        return np.broadcast_to(self.d, (np.asarray(X).shape[0],)).astype(float)


@dataclass(frozen=True)
class UncertaintyModel:
    """Lumped matched uncertainty of the whole network.

    ``f(X, t)`` maps stacked follower states ``(N, n)`` to ``(N, p)``.
    """

    f: Callable[[np.ndarray, float], np.ndarray]
    bound: object

    @classmethod
    def none(cls, N, p):
        return cls(lambda X, t: np.zeros((N, p)), ConstantBound(np.zeros(N)))


@dataclass
class AdaptiveState:
    d_bar: np.ndarray
    e_bar: np.ndarray

    @classmethod
    def zeros(cls, N):
        return cls(np.zeros(N), np.zeros(N))


class ProtocolKind(str, enum.Enum):
    STATIC_LEADERLESS = "static_leaderless"
    DISCONTINUOUS_LEADERLESS = "discontinuous_leaderless"
    ADAPTIVE_LEADERLESS = "adaptive_leaderless"
    SIMPLIFIED_ADAPTIVE = "simplified_adaptive"
    STATIC_LEADER_FOLLOWER = "static_leader_follower"
    ADAPTIVE_LEADER_FOLLOWER = "adaptive_leader_follower"

    @property
    def leader_follower(self) -> bool:
        return self in (ProtocolKind.STATIC_LEADER_FOLLOWER, ProtocolKind.ADAPTIVE_LEADER_FOLLOWER)

    @property
    def adaptive_channels(self) -> int:
        """Number of adaptive gains per agent (0, 1 or 2)."""
        if self in (ProtocolKind.ADAPTIVE_LEADERLESS, ProtocolKind.ADAPTIVE_LEADER_FOLLOWER):
            return 2
        if self is ProtocolKind.SIMPLIFIED_ADAPTIVE:
            return 1
        return 0


def _per_agent(value, N, name):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (N,)).copy()
    if np.any(arr < 0):
        raise ValueError(f"{name} must be nonnegative")
    return arr


@dataclass
class ProtocolConfig:
    kind: ProtocolKind
    kappa: float = 0.5
    tau: np.ndarray = field(default=10.0)
    eps_rates: np.ndarray = field(default=10.0)
    phi: np.ndarray = field(default=0.05)
    psi: np.ndarray = field(default=0.05)
    gamma: float = 0.0

    def __post_init__(self):
        self.kind = ProtocolKind(self.kind)
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")

    def resolved(self, N) -> "ProtocolConfig":
        """Copy with every per-agent parameter expanded to length N and validated."""
        cfg = ProtocolConfig(self.kind, self.kappa,
                             _per_agent(self.tau, N, "tau"), _per_agent(self.eps_rates, N, "eps_rates"),
                             _per_agent(self.phi, N, "phi"), _per_agent(self.psi, N, "psi"), self.gamma)
        if cfg.kind.adaptive_channels:
            if np.any(cfg.tau <= 0) or np.any(cfg.phi <= 0):
                raise ValueError("adaptive protocols need positive tau and phi")
            if cfg.kind.adaptive_channels == 2 and (np.any(cfg.eps_rates <= 0) or np.any(cfg.psi <= 0)):
                raise ValueError("adaptive protocols need positive eps_rates and psi")
        return cfg

    def to_dict(self) -> dict:
        def plain(v):
            v = np.asarray(v, dtype=float)
            return float(v) if v.ndim == 0 else v.tolist()

        return {"kind": self.kind.value, "kappa": self.kappa, "tau": plain(self.tau),
                "eps_rates": plain(self.eps_rates), "phi": plain(self.phi), "psi": plain(self.psi),
                "gamma": self.gamma}
