"""Scenario descriptions (JSON-compatible dicts) and the two worked examples.

A scenario config is a plain dict that round-trips through JSON::

    {
      "graph": {"n": 6, "edges": [[0, 1], ...], "leader_links": [0, 3]},
      "dynamics": {"A": [[...]], "B": [[...]]},
      "uncertainty": {"generator": "mass_spring", "k_range": [0, 5]},
      "leader": {"input": "sine", "gamma": 1.0},              # leader-follower only
      "non_matching": {"generator": "sincos", "upsilon": 0.5, "epsilon": 2.0},
      "protocol": {"kind": "adaptive_leaderless", "kappa": 0.5, ...},
      "gains": {...},                                          # optional
      "sim": {"t_final": 20.0, "h": 0.001, "seed": 0},
      "x0": [[...], ...]                                       # optional
    }

:func:`resolve_config` fills in everything random or derived: random
parameters are drawn from ``numpy.random.default_rng(seed)`` (PCG64) in a
fixed order (uncertainty parameters, then follower initial states, then
the leader initial state, each uniform on its range), and gains are
synthesized when absent.  The resolved config needs no RNG to rebuild.
"""

from __future__ import annotations

import copy

import numpy as np

from .graph import LeaderFollowerGraph, graph_from_dict, graph_to_dict, laplacian, leader_follower_partition, spectrum
from .protocols import (
    AdaptiveState,
    ConstantBound,
    LinearBound,
    ProtocolConfig,
    ProtocolKind,
    UncertaintyModel,
)
from .simulation import LeaderSpec, NonMatching, Scenario
from .synthesis import AgentDynamics, GainSet, design_gains

DEFAULT_X0_RANGE = (-1.0, 1.0)

# Topologies used by the examples: small, connected, and declared here so runs
# are reproducible from the config alone.
MASS_SPRING_GRAPH = {"n": 6, "edges": [[0, 1], [1, 2], [2, 3], [3, 4], [4, 5], [5, 0], [1, 4]]}
CHUA_GRAPH = {"n": 6, "edges": [[0, 1], [1, 2], [2, 3], [3, 4], [4, 5]], "leader_links": [0, 3]}


def _vec(value, N):
    return np.broadcast_to(np.asarray(value, dtype=float), (N,)).copy()


def _bound_from_dict(d, N):
    kind = d.get("type", "linear")
    if kind == "linear":
        return LinearBound(_vec(d.get("d", 0.0), N), _vec(d.get("e", 0.0), N))
    if kind == "constant":
        return ConstantBound(_vec(d.get("d", 0.0), N))
    raise ValueError(f"unknown bound type {kind!r}")


def _bound_to_dict(b):
    if isinstance(b, ConstantBound):
        return {"type": "constant", "d": b.d.tolist()}
    return {"type": "linear", "d": b.d.tolist(), "e": b.e.tolist()}


# -- uncertainty generators ----------------------------------------------------

def _mass_spring(params, N, dyn, rng):
    k = params.get("k")
    if k is None:
        lo, hi = params.get("k_range", (0.0, 5.0))
        k = rng.uniform(lo, hi, N)
    k = _vec(k, N)
    resolved = {"generator": "mass_spring", "k": k.tolist()}

    def f(X, t):
        return (-k * X[:, 0])[:, None]

    return f, LinearBound(np.zeros(N), np.abs(k)), resolved


def _chua(params, N, dyn, rng):
    a = float(params.get("a", 9.0))
    m01 = float(params.get("m01", -0.75))
    lo, hi = params.get("m_range", (-6.0, 0.0))
    m1, m2 = params.get("m1"), params.get("m2")
    if m1 is None or m2 is None:
        # interval is half-open [lo, hi); uniform() never returns hi
        m1 = rng.uniform(lo, hi, N)
        m2 = rng.uniform(lo, hi, N)
    m1, m2 = _vec(m1, N), _vec(m2, N)
    resolved = {"generator": "chua", "a": a, "m01": m01, "m_range": [lo, hi],
                "m1": m1.tolist(), "m2": m2.tolist()}

    def f(X, t):
        x1 = X[:, 0]
        sat = np.abs(x1 + 1.0) - np.abs(x1 - 1.0)
        return (a * (m01 - m1) * x1 + 0.5 * a * (m1 - m2) * sat)[:, None]

    # worst case over the parameter range, as declared for the followers
    bound = LinearBound(np.full(N, a * (hi - lo)), np.full(N, a * max(abs(m01 - lo), abs(m01 - hi))))
    return f, bound, resolved


def _sinusoid(params, N, dyn, rng):
    d = _vec(params.get("d", 1.0), N)
    p = dyn.p
    resolved = {"generator": "sinusoid", "d": d.tolist()}
    phase = np.arange(N, dtype=float)

    def f(X, t):
        out = np.zeros((N, p))
        out[:, 0] = d * np.sin(t + phase)
        return out

    return f, ConstantBound(d), resolved


def _none(params, N, dyn, rng):
    p = dyn.p

    def f(X, t):
        return np.zeros((N, p))

    return f, ConstantBound(np.zeros(N)), {"generator": "none"}


UNCERTAINTY_GENERATORS = {"mass_spring": _mass_spring, "chua": _chua, "sinusoid": _sinusoid, "none": _none}


# -- leader inputs -------------------------------------------------------------

def chua_leader_input(a=9.0, m01=-0.75, m02=-4.0 / 3.0):
    """Leader's nonlinearity used as a bounded virtual input; sup norm a|m01 - m02|."""
    def u0(t, x0):
        x1 = x0[0]
        return np.array([0.5 * a * (m01 - m02) * (abs(x1 + 1.0) - abs(x1 - 1.0))])

    return u0, a * abs(m01 - m02)


def _leader_input(d, p):
    kind = d.get("input", "sine")
    if kind == "chua":
        u0, sup = chua_leader_input(d.get("a", 9.0), d.get("m01", -0.75), d.get("m02", -4.0 / 3.0))
        return u0, float(d.get("gamma", sup))
    gamma = float(d.get("gamma", 1.0))
    if kind == "sine":
        def u0(t, x0):
            out = np.zeros(p)
            out[0] = gamma * np.sin(t)
            return out
        return u0, gamma
    if kind == "zero":
        return (lambda t, x0: np.zeros(p)), gamma
    raise ValueError(f"unknown leader input {kind!r}")


def _non_matching(d, N, n):
    if d.get("generator", "sincos") != "sincos":
        raise ValueError(f"unknown non-matching generator {d.get('generator')!r}")
    ups = _vec(d.get("upsilon", 0.5), N)
    phases = _vec(d.get("phases", 0.0), N)

    def omega(t):
        out = np.zeros((N, n))
        if n == 1:
            out[:, 0] = ups * np.sin(t + phases)
        else:
            out[:, 0] = ups * np.sin(t + phases) / np.sqrt(2.0)
            out[:, 1] = ups * np.cos(t + phases) / np.sqrt(2.0)
        return out

    return NonMatching(omega, ups)


# -- resolution and construction -----------------------------------------------

def _coupling_lambda(graph):
    if isinstance(graph, LeaderFollowerGraph):
        L1, _ = leader_follower_partition(graph)
        return float(np.linalg.eigvalsh(L1)[0]), "leader_follower"
    return spectrum(laplacian(graph)).lambda2, "leaderless"


def resolve_config(config, *, auto_synthesize=True, seed=None, h=None):
    """Deep-copied config with random draws and gains made explicit.

    ``seed`` and ``h`` override the values under ``"sim"``.
    """
    cfg = copy.deepcopy(config)
    sim = cfg.setdefault("sim", {})
    if seed is not None:
        sim["seed"] = int(seed)
    if h is not None:
        sim["h"] = float(h)
    sim.setdefault("seed", 0)
    sim.setdefault("h", 1e-3)
    if "t_final" not in sim:
        raise ValueError("sim.t_final is required")
    rng = np.random.default_rng(int(sim["seed"]))

    graph = graph_from_dict(cfg["graph"])
    dyn = AgentDynamics(cfg["dynamics"]["A"], cfg["dynamics"]["B"])
    N = graph.n_followers if isinstance(graph, LeaderFollowerGraph) else graph.n_nodes
    kind = ProtocolKind(cfg["protocol"]["kind"])
    if kind.leader_follower != isinstance(graph, LeaderFollowerGraph):
        raise ValueError(f"protocol {kind.value} needs a {'leader-follower' if kind.leader_follower else 'leaderless'} graph")

    unc = cfg.setdefault("uncertainty", {"generator": "none"})
    gen = UNCERTAINTY_GENERATORS.get(unc.get("generator", "none"))
    if gen is None:
        raise ValueError(f"unknown uncertainty generator {unc.get('generator')!r}")
    _, bound, resolved_unc = gen(unc, N, dyn, rng)
    resolved_unc["bound"] = unc.get("bound") or _bound_to_dict(bound)
    cfg["uncertainty"] = resolved_unc

    lo, hi = cfg.get("x0_range", DEFAULT_X0_RANGE)
    if "x0" not in cfg:
        cfg["x0"] = rng.uniform(lo, hi, (N, dyn.n)).tolist()
    if kind.leader_follower:
        leader = cfg.setdefault("leader", {"input": "sine"})
        if "x0" not in leader:
            leader["x0"] = rng.uniform(lo, hi, dyn.n).tolist()
        _, gamma = _leader_input(leader, dyn.p)
        leader["gamma"] = gamma
        cfg["protocol"].setdefault("gamma", gamma)

    if "gains" not in cfg:
        if not auto_synthesize:
            raise ValueError("scenario has no gains and synthesis was not requested")
        proto = cfg["protocol"]
        lam, mode = _coupling_lambda(graph)
        eps = cfg["non_matching"].get("epsilon", 2.0) if cfg.get("non_matching") else None
        gains = design_gains(dyn, lam=lam, mode=mode, gamma=proto.get("gamma", 0.0), epsilon=eps,
                             multiplier=float(proto.get("c_multiplier", 1.0)))
        cfg["gains"] = gains.to_dict()
    return cfg


def build_scenario(config, *, auto_synthesize=True, seed=None, h=None) -> Scenario:
    """Resolve ``config`` and construct the :class:`Scenario` it describes."""
    cfg = resolve_config(config, auto_synthesize=auto_synthesize, seed=seed, h=h)
    graph = graph_from_dict(cfg["graph"])
    dyn = AgentDynamics(cfg["dynamics"]["A"], cfg["dynamics"]["B"])
    N = graph.n_followers if isinstance(graph, LeaderFollowerGraph) else graph.n_nodes
    unc = cfg["uncertainty"]
    f, _, _ = UNCERTAINTY_GENERATORS[unc["generator"]](unc, N, dyn, None)
    uncertainty = UncertaintyModel(f, _bound_from_dict(unc["bound"], N))

    proto = {k: v for k, v in cfg["protocol"].items() if k in ("kind", "kappa", "tau", "eps_rates", "phi", "psi", "gamma")}
    protocol = ProtocolConfig(**proto)
    gains = GainSet.from_dict(cfg["gains"], dyn)

    leader = None
    if "leader" in cfg and protocol.kind.leader_follower:
        u0, gamma = _leader_input(cfg["leader"], dyn.p)
        leader = LeaderSpec(np.asarray(cfg["leader"]["x0"], float), u0, gamma)
    nm = _non_matching(cfg["non_matching"], N, dyn.n) if cfg.get("non_matching") else None
    adaptive0 = None
    if "adaptive0" in cfg:
        a0 = cfg["adaptive0"]
        adaptive0 = AdaptiveState(_vec(a0.get("d_bar", 0.0), N), _vec(a0.get("e_bar", 0.0), N))
    sim = cfg["sim"]
    return Scenario(graph=graph, dynamics=dyn, uncertainty=uncertainty, protocol=protocol, gains=gains,
                    x0=np.asarray(cfg["x0"], float), t_final=float(sim["t_final"]), h=float(sim["h"]),
                    seed=int(sim["seed"]), leader=leader, non_matching=nm, adaptive0=adaptive0, config=cfg)


# -- worked examples -----------------------------------------------------------

def mass_spring_dynamics(m=2.5) -> AgentDynamics:
    if not m > 0:
        raise ValueError("mass must be positive")
    return AgentDynamics([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0 / m]])


def mass_spring_config(N=6, m=2.5, spring_constants=None, graph=None, *, k_range=(0.0, 5.0),
                       kind="adaptive_leaderless", kappa=0.5, tau=10.0, eps_rates=10.0, phi=0.05, psi=0.05,
                       t_final=20.0, h=1e-3, seed=0, upsilon=None, epsilon=2.0, c_multiplier=1.0,
                       x0=None) -> dict:
    """Network of masses on springs with unknown stiffness k_i.

    The spring force enters through the input channel as
    ``k_i E x_i`` with ``E = [-1, 0]``, bounded by ``k_i ||x_i||``.
    """
    dyn = mass_spring_dynamics(m)
    graph = graph if graph is not None else (MASS_SPRING_GRAPH if N == 6 else
                                             {"n": N, "edges": [[i, (i + 1) % N] for i in range(N)]})
    if isinstance(graph, dict):
        g = graph_from_dict(graph)
    else:
        g = graph
        graph = graph_to_dict(graph)
    if g.n_nodes != N:
        raise ValueError("graph size does not match N")
    unc = {"generator": "mass_spring"}
    if spring_constants is not None:
        unc["k"] = list(np.broadcast_to(np.asarray(spring_constants, float), (N,)))
    else:
        unc["k_range"] = list(k_range)
    cfg = {
        "name": "mass_spring",
        "graph": graph,
        "dynamics": {"A": dyn.A.tolist(), "B": dyn.B.tolist()},
        "uncertainty": unc,
        "protocol": {"kind": kind, "kappa": kappa, "tau": tau, "eps_rates": eps_rates, "phi": phi, "psi": psi,
                     "c_multiplier": c_multiplier},
        "sim": {"t_final": t_final, "h": h, "seed": seed},
    }
    if upsilon is not None:
        cfg["non_matching"] = {"generator": "sincos", "upsilon": upsilon, "epsilon": epsilon}
    if x0 is not None:
        cfg["x0"] = np.asarray(x0, float).tolist()
    return cfg


def build_mass_spring_scenario(N=6, m=2.5, spring_constants=None, graph=None, **protocol_params) -> Scenario:
    return build_scenario(mass_spring_config(N, m, spring_constants, graph, **protocol_params))


def chua_state_matrix(a=9.0, b=18.0, m01=-0.75) -> np.ndarray:
    """Linear part of the dimensionless Chua circuit with the leader's outer slope.

    The (1, 1) entry is ``-a (1 + m01)``, which is what expanding
    ``a(-x1 + x2 - h(x1))`` gives.
    """
    return np.array([[-a * (1.0 + m01), a, 0.0], [1.0, -1.0, 1.0], [0.0, -b, 0.0]])


def chua_config(N=6, graph=None, *, a=9.0, b=18.0, m01=-0.75, m02=-4.0 / 3.0, m_range=(-6.0, 0.0),
                kind="adaptive_leader_follower", kappa=0.5, tau=5.0, eps_rates=5.0, phi=0.05, psi=0.05,
                t_final=30.0, h=5e-4, seed=0, gamma=None, c_multiplier=1.0) -> dict:
    """Chua circuits tracking a chaotic leader circuit.

    Followers have nonlinear slopes drawn from ``m_range``; the leader's
    own nonlinearity is treated as its (bounded, unknown) control input.
    """
    graph = graph if graph is not None else (CHUA_GRAPH if N == 6 else
                                             {"n": N, "edges": [[i, i + 1] for i in range(N - 1)],
                                              "leader_links": [0]})
    if not isinstance(graph, dict):
        graph = graph_to_dict(graph)
    leader = {"input": "chua", "a": a, "m01": m01, "m02": m02}
    if gamma is not None:
        leader["gamma"] = gamma
    return {
        "name": "chua",
        "graph": graph,
        "dynamics": {"A": chua_state_matrix(a, b, m01).tolist(), "B": [[1.0], [0.0], [0.0]]},
        "uncertainty": {"generator": "chua", "a": a, "m01": m01, "m_range": list(m_range)},
        "leader": leader,
        "protocol": {"kind": kind, "kappa": kappa, "tau": tau, "eps_rates": eps_rates, "phi": phi, "psi": psi,
                     "c_multiplier": c_multiplier},
        "sim": {"t_final": t_final, "h": h, "seed": seed},
    }


def build_chua_scenario(N=6, graph=None, **params) -> Scenario:
    return build_scenario(chua_config(N, graph, **params))
