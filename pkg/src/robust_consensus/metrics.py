"""Consensus errors, Lyapunov functionals, residual-set bounds and verdicts.

Bound identifiers ``D1`` .. ``D9``:

=====  ============================  =====================================
id     protocol / setting            thresholds
=====  ============================  =====================================
D1     static leaderless             ||xi||^2
D2     adaptive leaderless           V2 level
D3     adaptive leaderless, rho<a    ||xi||^2
D4     static leader-follower        ||zeta||^2
D5     adaptive leader-follower      V4 level
D6     adaptive leader-follower      ||zeta||^2
D7     static, non-matching          ||xi||^2
D8     adaptive, non-matching        V6 level
D9     adaptive, non-matching        ||xi||^2
=====  ============================  =====================================
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import PreconditionViolated
from .graph import centering_projector

V_LEVEL_BOUNDS = ("D2", "D5", "D8")
BOUND_IDS = tuple(f"D{i}" for i in range(1, 10))
TOL_REL = 0.02
TOL_ABS = 1e-9


def consensus_error(x, N=None, n=None):
    """xi = (M ⊗ I_n) x for stacked x of shape (N*n,) or (N, n); same shape back."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if N is None and n is None:
            raise ValueError("flat state needs N or n")
        N = N or x.size // n
        X = x.reshape(N, -1)
        return (centering_projector(N) @ X).reshape(-1)
    return centering_projector(x.shape[-2]) @ x


def lf_consensus_error(x, x0):
    """zeta_i = x_i - x0 with x of shape (N, n) or stacked (N*n,)."""
    x, x0 = np.asarray(x, dtype=float), np.asarray(x0, dtype=float)
    if x.ndim == 1:
        return (x.reshape(-1, x0.size) - x0).reshape(-1)
    return x - x0


def _as_blocks(xi, n):
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 1:
        return xi.reshape(-1, n)
    return xi


def quadratic_lyapunov(xi, L, P):
    """½ xi^T (L ⊗ P^{-1}) xi; xi of shape (N, n), (N*n,) or (T, N, n)."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Pinv = np.linalg.inv(P)
    X = _as_blocks(xi, P.shape[0])
    Y = X @ Pinv
    return 0.5 * np.einsum("ij,...ik,...jk->...", np.asarray(L, dtype=float), X, Y)


def lyapunov_v1(xi, L, P):
    return quadratic_lyapunov(xi, L, P)


def lyapunov_v2(xi, L, P, d_bar, e_bar, beta, e_true, tau, eps_rates):
    """V1 plus the adaptive-gain error terms (d_bar - beta)^2/2tau + (e_bar - e)^2/2eps.

    Works on one sample or on a time series (leading axis); pass ``e_bar``
    as ``None`` for the single-gain simplified law.
    """
    V = quadratic_lyapunov(xi, L, P)
    d_bar = np.asarray(d_bar, dtype=float)
    V = V + np.sum((d_bar - beta) ** 2 / (2.0 * np.asarray(tau, dtype=float)), axis=-1)
    if e_bar is not None:
        e_bar = np.asarray(e_bar, dtype=float)
        V = V + np.sum((e_bar - np.asarray(e_true, dtype=float)) ** 2 / (2.0 * np.asarray(eps_rates, dtype=float)),
                       axis=-1)
    return V


@dataclass(frozen=True)
class AnalysisConstants:
    alpha: float
    beta: Optional[float] = None
    beta_hat: Optional[float] = None
    delta: Optional[float] = None
    varrho: Optional[float] = None
    sigma: Optional[float] = None
    epsilon: Optional[float] = None


def analysis_constants(alpha, *, d=None, lam2=None, lam_min_L1=None, gamma=0.0,
                       phi=None, tau=None, psi=None, eps_rates=None, epsilon=None) -> AnalysisConstants:
    """beta, beta_hat, delta, varrho, sigma at their tightest admissible values.

    ``psi``/``eps_rates`` may be omitted for the single-gain law, in which
    case only the d-channel rates enter the min/max.
    """
    beta = beta_hat = delta = varrho = sigma = None
    dmax = float(np.max(d)) if d is not None else 0.0
    if lam2 is not None:
        beta = max(dmax, 1.0 / lam2)
    if lam_min_L1 is not None:
        beta_hat = max(dmax + gamma, 1.0 / lam_min_L1)
    if phi is not None and tau is not None:
        rates = [np.asarray(phi, float) * np.asarray(tau, float)]
        if psi is not None and eps_rates is not None:
            rates.append(np.asarray(psi, float) * np.asarray(eps_rates, float))
        rates = np.concatenate([np.atleast_1d(r) for r in rates])
        delta = min(alpha, float(rates.min()))
        varrho = float(rates.max())
        if epsilon is not None:
            sigma = min(epsilon - 1.0, float(rates.min()))
    return AnalysisConstants(alpha=alpha, beta=beta, beta_hat=beta_hat, delta=delta,
                             varrho=varrho, sigma=sigma, epsilon=epsilon)


def _need(inputs, *names):
    missing = [k for k in names if inputs.get(k) is None]
    if missing:
        raise PreconditionViolated(f"missing inputs: {', '.join(missing)}")
    return [inputs[k] for k in names]


def _leak_sum(beta, phi, e, psi):
    phi = np.asarray(phi, float)
    s = beta ** 2 * phi
    if e is not None and psi is not None:
        s = s + np.asarray(e, float) ** 2 * np.asarray(psi, float)
    return float(np.sum(s))


def residual_bound(bound_id, **inputs) -> float:
    """Threshold of residual set ``bound_id`` (||error||^2 or V level).

    Inputs by name: lam_max_P, lam_min_P, N, kappa, alpha, lam2, lam_max_L,
    lam_min_L1, beta, beta_hat, phi, psi, e, delta, varrho, sigma, epsilon,
    upsilon.  ``e``/``psi`` may be omitted for the single-gain law.
    """
    bid = str(bound_id).upper()
    g = inputs.get
    if bid == "D1":
        lmp, N, kappa, alpha, lam2 = _need(inputs, "lam_max_P", "N", "kappa", "alpha", "lam2")
        return 2.0 * lmp * N * kappa / (alpha * lam2)
    if bid == "D4":
        lmp, N, kappa, alpha, l1 = _need(inputs, "lam_max_P", "N", "kappa", "alpha", "lam_min_L1")
        return 2.0 * lmp * N * kappa / (alpha * l1)
    if bid in ("D2", "D5"):
        b_name = "beta" if bid == "D2" else "beta_hat"
        b, phi, N, kappa, delta = _need(inputs, b_name, "phi", "N", "kappa", "delta")
        return _leak_sum(b, phi, g("e"), g("psi")) / (2.0 * delta) + N * kappa / (4.0 * delta)
    if bid in ("D3", "D6"):
        b_name, lam_name = ("beta", "lam2") if bid == "D3" else ("beta_hat", "lam_min_L1")
        lmp, b, lam, phi, N, kappa, alpha, varrho = _need(
            inputs, "lam_max_P", b_name, lam_name, "phi", "N", "kappa", "alpha", "varrho")
        if not varrho < alpha:
            raise PreconditionViolated(f"{bid} needs varrho < alpha ({varrho:g} >= {alpha:g})")
        return lmp / (lam * (alpha - varrho)) * (_leak_sum(b, phi, g("e"), g("psi")) + 0.5 * N * kappa)
    if bid in ("D7", "D8", "D9"):
        lmq, lnq, lam2, lml, ups, N, kappa, eps = _need(
            inputs, "lam_max_P", "lam_min_P", "lam2", "lam_max_L", "upsilon", "N", "kappa", "epsilon")
        if not eps > 1:
            raise PreconditionViolated("epsilon must exceed 1")
        dist = lml / lnq * float(np.sum(np.asarray(ups, float) ** 2))
        if bid == "D7":
            return 2.0 * lmq / ((eps - 1.0) * lam2) * (0.5 * dist + N * kappa)
        beta, phi = _need(inputs, "beta", "phi")
        leak = _leak_sum(beta, phi, g("e"), g("psi"))
        if bid == "D8":
            (sigma,) = _need(inputs, "sigma")
            return leak / (2.0 * sigma) + dist / (2.0 * sigma) + N * kappa / (4.0 * sigma)
        (varrho,) = _need(inputs, "varrho")
        if not varrho < eps - 1.0:
            raise PreconditionViolated(f"D9 needs varrho < epsilon - 1 ({varrho:g} >= {eps - 1:g})")
        return lmq / (lam2 * (eps - 1.0 - varrho)) * (leak + dist + 0.5 * N * kappa)
    raise ValueError(f"unknown bound id {bound_id!r}")


@dataclass(frozen=True)
class EnvelopeResult:
    ok: bool
    max_violation: float


def envelope_check(V_series, V0, rate, offset, times=None, *, h=None, tol_rel=TOL_REL, tol_abs=TOL_ABS):
    """Check V(t) <= (V0 - offset) e^{-rate t} + offset + tol_abs + tol_rel V0 at every sample.

    Sample times come from ``times`` or, failing that, the uniform grid ``k*h``.
    """
    V = np.asarray(V_series, dtype=float)
    if not rate > 0:
        raise ValueError("rate must be positive")
    if times is None:
        if h is None:
            raise ValueError("need sample times or a step size")
        times = np.arange(V.size) * h
    env = (V0 - offset) * np.exp(-rate * np.asarray(times, float)) + offset
    excess = V - (env + tol_abs + tol_rel * abs(V0))
    worst = float(np.max(excess)) if excess.size else 0.0
    return EnvelopeResult(ok=worst <= 0.0, max_violation=max(worst, 0.0))


@dataclass
class ResidualReport:
    bound_id: str
    bound_value: float
    entry_time: Optional[float]
    passed: bool
    max_violation: float
    metric: str = "error_norm_sq"
    envelope_ok: Optional[bool] = None
    envelope_max_violation: Optional[float] = None
    settle_fraction: float = 0.2
    tol_rel: float = TOL_REL
    assumption_monitors: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def uub_verdict(traj, bound, settle_fraction=0.2, *, series=None, times=None, tol=TOL_REL,
                bound_id=None, metric="error_norm_sq") -> ResidualReport:
    """Ultimate-boundedness verdict for a sampled series against a threshold.

    Passes iff ``series <= bound * (1 + tol)`` over the final
    ``settle_fraction`` of the horizon.  ``entry_time`` is the first sample
    at or below ``bound`` after which the series never exceeds
    ``bound * (1 + tol)``; ``None`` if there is none.
    """
    if not bound > 0:
        raise ValueError("bound must be positive")
    if not 0 < settle_fraction < 1:
        raise ValueError("settle_fraction must lie in (0, 1)")
    if series is None:
        series = traj.error_norm_sq
    if times is None:
        times = traj.times
    series, times = np.asarray(series, float), np.asarray(times, float)
    limit = bound * (1.0 + tol)
    t_end = times[-1]
    window = times >= times[0] + (1.0 - settle_fraction) * (t_end - times[0]) - 1e-12
    excess = series[window] - limit
    worst = float(np.max(excess)) if excess.size else 0.0
    passed = worst <= 0.0

    above = np.nonzero(series > limit)[0]
    start = above[-1] + 1 if above.size else 0
    inside = np.nonzero(series[start:] <= bound)[0]
    entry = float(times[start + inside[0]]) if inside.size else None
    return ResidualReport(bound_id=bound_id or "custom", bound_value=float(bound), entry_time=entry,
                          passed=passed, max_violation=max(worst, 0.0), metric=metric,
                          settle_fraction=settle_fraction, tol_rel=tol)
