"""Gain synthesis for the consensus protocols.

The design inequality ``A P + P A^T - 2 B B^T < 0`` is not handed to a
general SDP solver.  Pre- and post-multiplying by ``W = P^{-1}`` turns it
into ``W A + A^T W - 2 W B B^T W < 0``; the equality version with slack
``I`` is a Riccati equation, whose stabilizing solution gives a feasible
``P = W^{-1}``.  The shifted inequality with ``+ eps P`` is handled the
same way on ``A + (eps/2) I``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg as sla

from .errors import (
    DisconnectedGraphError,
    FeasibilityCheckFailed,
    InfeasiblePError,
    NotControllableError,
    NotStabilizableError,
    NumericalFailure,
    SingularPError,
)
from .graph import LaplacianSpectrum

RANK_TOL = 1e-9
COND_SWITCH = 1e10
SINGULAR_COND = 1e12
# below this LMI margin the Riccati P is retried with a shifted design
MARGIN_FLOOR = 1e-6
RETRY_SHIFT = 1.0


def _mat(M, name):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise ValueError(f"{name} must be a matrix")
    return M


@dataclass(frozen=True)
class AgentDynamics:
    """Nominal agent model x' = A x + B u."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = _mat(self.A, "A")
        B = _mat(self.B, "B")
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            # allow a row vector for single-input systems
            if B.shape[1] == A.shape[0] and B.shape[0] == 1:
                B = B.T
            else:
                raise ValueError(f"B has {B.shape[0]} rows, expected {A.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]


def _hautus_ok(A, B, eigs):
    n = A.shape[0]
    for lam in eigs:
        M = np.hstack([A - lam * np.eye(n), B])
        s = np.linalg.svd(M, compute_uv=False)
        if s[0] == 0.0 or s[n - 1] <= RANK_TOL * s[0]:
            return False
    return True


def is_stabilizable(A, B, tol=RANK_TOL) -> bool:
    """Hautus test on the eigenvalues of A with nonnegative real part."""
    A, B = _mat(A, "A"), _mat(B, "B")
    eigs = np.linalg.eigvals(A)
    return _hautus_ok(A, B, eigs[eigs.real >= -tol])


def is_controllable(A, B) -> bool:
    A, B = _mat(A, "A"), _mat(B, "B")
    return _hautus_ok(A, B, np.linalg.eigvals(A))


def care_residual(A, B, W, Qw=None, r_scale=2.0) -> np.ndarray:
    A, B, W = _mat(A, "A"), _mat(B, "B"), _mat(W, "W")
    Qw = np.eye(A.shape[0]) if Qw is None else _mat(Qw, "Qw")
    return A.T @ W + W @ A - r_scale * W @ B @ B.T @ W + Qw


def _newton_kleinman(A, G, Qw, W, tol, maxiter=50):
    """Refine a stabilizing Riccati iterate; each step solves one Lyapunov equation."""
    for _ in range(maxiter):
        res = np.linalg.norm(A.T @ W + W @ A - W @ G @ W + Qw, "fro")
        if res <= tol * (1.0 + np.linalg.norm(W, "fro")):
            return W
        Ak = A - G @ W
        if np.max(np.linalg.eigvals(Ak).real) >= 0:
            raise NumericalFailure("Newton-Kleinman iterate lost the stabilizing property")
        W = sla.solve_continuous_lyapunov(Ak.T, -(Qw + W @ G @ W))
        W = 0.5 * (W + W.T)
    return W


def solve_care(A, B, Qw=None, r_scale=2.0, *, tol=1e-8) -> np.ndarray:
    """Stabilizing solution of ``A^T W + W A - r W B B^T W + Qw = 0``.

    The stable invariant subspace of the Hamiltonian
    ``[[A, -r B B^T], [-Qw, -A^T]]`` is taken from an ordered real Schur
    form, then polished with Newton-Kleinman steps until the residual
    meets ``tol * (1 + ||W||_F)``.

    Raises
    ------
    NotStabilizableError
        If (A, B) fails the Hautus test.
    NumericalFailure
        If the stable subspace cannot be separated or the result is not
        stabilizing.
    """
    A, B = _mat(A, "A"), _mat(B, "B")
    n = A.shape[0]
    Qw = np.eye(n) if Qw is None else _mat(Qw, "Qw")
    if r_scale <= 0:
        raise ValueError("r_scale must be positive")
    if not is_stabilizable(A, B):
        raise NotStabilizableError("(A, B) is not stabilizable")
    G = r_scale * B @ B.T
    H = np.block([[A, -G], [-Qw, -A.T]])
    _, Z, sdim = sla.schur(H, output="real", sort="lhp")
    if sdim != n:
        raise NumericalFailure(f"Hamiltonian has {sdim} stable eigenvalues, expected {n}")
    U1, U2 = Z[:n, :n], Z[n:, :n]
    if np.linalg.cond(U1) > COND_SWITCH:
        # poorly separated subspace: start Newton from the Lyapunov solution
        # of a shifted, stabilized closed loop instead
        W = _fallback_initial(A, G, Qw)
    else:
        W = np.linalg.solve(U1.T, U2.T).T
        W = 0.5 * (W + W.T)
    W = _newton_kleinman(A, G, Qw, W, tol)
    if np.max(np.linalg.eigvals(A - G @ W).real) >= 0:
        raise NumericalFailure("Riccati solution is not stabilizing")
    res = np.linalg.norm(A.T @ W + W @ A - W @ G @ W + Qw, "fro")
    if res > tol * (1.0 + np.linalg.norm(W, "fro")):
        raise NumericalFailure(f"Riccati residual {res:.3e} above tolerance")
    return W


def _fallback_initial(A, G, Qw):
    # Bass's construction: with A + bI anti-stable, X solving
    # (A + bI) X + X (A + bI)^T = G makes A - G X^{-1} Hurwitz.
    # Needs (A, B) controllable so that X > 0.
    n = A.shape[0]
    shift = max(0.0, -float(np.min(np.linalg.eigvals(A).real))) + 1.0
    X = sla.solve_continuous_lyapunov(A + shift * np.eye(n), G)
    X = 0.5 * (X + X.T)
    if np.linalg.eigvalsh(X)[0] <= 0:
        raise NumericalFailure("could not seed Newton-Kleinman iteration (pair not controllable)")
    W = np.linalg.inv(X)
    return 0.5 * (W + W.T)


class LMICheck(NamedTuple):
    feasible: bool
    margin: float


def lmi_lhs(A, B, P, epsilon=None) -> np.ndarray:
    A, B, P = _mat(A, "A"), _mat(B, "B"), _mat(P, "P")
    M = A @ P + P @ A.T - 2.0 * B @ B.T
    if epsilon is not None:
        M = M + epsilon * P
    return 0.5 * (M + M.T)


def verify_lmi(A, B, P, epsilon=None) -> LMICheck:
    """Largest eigenvalue of the design LMI and whether P is a strict solution."""
    P = _mat(P, "P")
    margin = float(np.linalg.eigvalsh(lmi_lhs(A, B, P, epsilon))[-1])
    p_spd = bool(np.allclose(P, P.T, atol=1e-10 * max(1.0, np.abs(P).max()))) and np.linalg.eigvalsh(
        0.5 * (P + P.T)
    )[0] > 0
    return LMICheck(bool(margin < 0 and p_spd), margin)


def _inverse_care(A, B):
    P = np.linalg.inv(solve_care(A, B, np.eye(A.shape[0]), 2.0))
    return 0.5 * (P + P.T)


def solve_consensus_lmi(dyn: AgentDynamics) -> np.ndarray:
    """P > 0 with ``A P + P A^T - 2 B B^T < 0``.

    The primary route is ``P = W^{-1}`` from the unit-weight Riccati
    equation, for which the LMI left side equals ``-P^2``. When (A, B) is
    only weakly stabilizable that square makes the margin vanishingly small,
    so a second candidate from the Riccati equation of ``A + I/2`` is also
    tried; its left side is ``-P^2 - P`` and the margin scales linearly in
    ``lambda_min(P)``. The candidate with the more negative margin wins.
    """
    P = _inverse_care(dyn.A, dyn.B)
    check = verify_lmi(dyn.A, dyn.B, P)
    if check.margin > -MARGIN_FLOOR:
        try:
            P_alt = _inverse_care(dyn.A + 0.5 * RETRY_SHIFT * np.eye(dyn.n), dyn.B)
        except (NotStabilizableError, NumericalFailure):
            P_alt = None
        if P_alt is not None:
            alt = verify_lmi(dyn.A, dyn.B, P_alt)
            if alt.feasible and alt.margin < check.margin:
                P, check = P_alt, alt
    if not check.feasible:
        raise FeasibilityCheckFailed(f"P from Riccati route violates the LMI (margin {check.margin:.3e})")
    return P


def solve_consensus_lmi_eps(dyn: AgentDynamics, epsilon: float) -> np.ndarray:
    """Q > 0 with ``A Q + Q A^T + eps Q - 2 B B^T < 0`` (eps > 1)."""
    if not epsilon > 1:
        raise ValueError("epsilon must exceed 1")
    As = dyn.A + 0.5 * epsilon * np.eye(dyn.n)
    if not is_stabilizable(As, dyn.B):
        raise NotControllableError("(A + eps/2 I, B) is not stabilizable; (A, B) must be controllable")
    W = solve_care(As, dyn.B, np.eye(dyn.n), 2.0)
    Q = np.linalg.inv(W)
    Q = 0.5 * (Q + Q.T)
    check = verify_lmi(dyn.A, dyn.B, Q, epsilon)
    if not check.feasible:
        raise FeasibilityCheckFailed(f"Q violates the shifted LMI (margin {check.margin:.3e})")
    return Q


def feedback_gain(P, B) -> np.ndarray:
    """K = -B^T P^{-1}."""
    P, B = _mat(P, "P"), _mat(B, "B")
    if np.linalg.cond(P) > SINGULAR_COND:
        raise SingularPError("P is numerically singular")
    return -np.linalg.solve(P, B).T


def convergence_rate_alpha(dyn: AgentDynamics, P) -> float:
    P = _mat(P, "P")
    margin = verify_lmi(dyn.A, dyn.B, P).margin
    if margin >= 0:
        raise InfeasiblePError(f"P does not satisfy the LMI (λ_max = {margin:.3e})")
    return -margin / float(np.linalg.eigvalsh(P)[-1])


@dataclass(frozen=True)
class Coupling:
    c: Optional[float] = None
    c1: Optional[float] = None
    c2: Optional[float] = None


def coupling_gains(lam, mode="leaderless", gamma=None, tol=1e-9) -> Coupling:
    """Smallest admissible coupling gains.

    ``lam`` is λ2 of the Laplacian (leaderless) or λ_min of the pinned block
    L1 (leader-follower); a :class:`LaplacianSpectrum` is also accepted.
    """
    if isinstance(lam, LaplacianSpectrum):
        lam = lam.lambda2
    lam = float(lam)
    if lam <= tol:
        raise DisconnectedGraphError("graph is not connected (zero algebraic connectivity)")
    if mode == "leaderless":
        return Coupling(c=1.0 / lam)
    if mode == "leader_follower":
        if gamma is None or gamma < 0:
            raise ValueError("leader-follower coupling needs a nonnegative leader input bound gamma")
        return Coupling(c1=1.0 / lam, c2=float(gamma))
    raise ValueError(f"unknown coupling mode {mode!r}")


@dataclass(frozen=True)
class GainSet:
    """Synthesized protocol gains.

    ``P`` holds Q when ``epsilon`` is set (non-matching disturbance design).
    """

    P: np.ndarray
    K: np.ndarray
    Gamma: np.ndarray
    alpha: float
    margin: float
    c: Optional[float] = None
    c1: Optional[float] = None
    c2: Optional[float] = None
    epsilon: Optional[float] = None

    def to_dict(self) -> dict:
        out = {
            "P": self.P.tolist(),
            "K": self.K.tolist(),
            "Gamma": self.Gamma.tolist(),
            "alpha": self.alpha,
            "margin": self.margin,
        }
        for key in ("c", "c1", "c2", "epsilon"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out

    @classmethod
    def from_dict(cls, d: dict, dyn: AgentDynamics | None = None) -> "GainSet":
        P = _mat(d["P"], "P")
        K = _mat(d["K"], "K") if "K" in d else None
        if K is None:
            if dyn is None:
                raise ValueError("gains without K need the dynamics to derive it")
            K = feedback_gain(P, dyn.B)
        Gamma = _mat(d["Gamma"], "Gamma") if "Gamma" in d else K.T @ K
        alpha = d.get("alpha")
        margin = d.get("margin")
        if dyn is not None and (alpha is None or margin is None):
            margin = verify_lmi(dyn.A, dyn.B, P).margin
            alpha = convergence_rate_alpha(dyn, P)
        return cls(P=P, K=K, Gamma=Gamma, alpha=float(alpha), margin=float(margin),
                   c=d.get("c"), c1=d.get("c1"), c2=d.get("c2"), epsilon=d.get("epsilon"))


def gamma_matrix(K) -> np.ndarray:
    """Γ = K^T K, which equals P^{-1} B B^T P^{-1} when K = -B^T P^{-1}."""
    K = _mat(K, "K")
    return K.T @ K


def check_gamma_identity(K, Gamma, atol) -> bool:
    return bool(np.allclose(gamma_matrix(K), _mat(Gamma, "Gamma"), rtol=0, atol=atol))


def design_gains(dyn: AgentDynamics, *, lam=None, mode="leaderless", gamma=None,
                 epsilon=None, multiplier=1.0) -> GainSet:
    """Full design: P (or Q), K, Γ, α and, when ``lam`` is given, coupling gains.

    ``multiplier`` scales the minimal coupling gains (c, c1; c2 too).
    """
    if epsilon is None:
        P = solve_consensus_lmi(dyn)
    else:
        P = solve_consensus_lmi_eps(dyn, epsilon)
    K = feedback_gain(P, dyn.B)
    margin = verify_lmi(dyn.A, dyn.B, P, epsilon).margin
    alpha = convergence_rate_alpha(dyn, P)
    coupling = Coupling()
    if lam is not None:
        coupling = coupling_gains(lam, mode, gamma)
    scale = lambda v: None if v is None else multiplier * v  # noqa: E731
    return GainSet(P=P, K=K, Gamma=gamma_matrix(K), alpha=alpha, margin=margin,
                   c=scale(coupling.c), c1=scale(coupling.c1), c2=scale(coupling.c2), epsilon=epsilon)
