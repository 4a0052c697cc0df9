"""Robust consensus of uncertain linear multi-agent systems.

Gain synthesis through a Riccati route, boundary-layer static and adaptive
protocols (leaderless and leader-follower), deterministic RK4 simulation
and residual-set verification.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .graph import (
    Graph,
    LaplacianSpectrum,
    LeaderFollowerGraph,
    complete_graph,
    graph_from_dict,
    graph_to_dict,
    is_connected,
    laplacian,
    leader_follower_partition,
    path_graph,
    ring_graph,
    spectrum,
)
from .metrics import (
    consensus_error,
    envelope_check,
    lf_consensus_error,
    lyapunov_v1,
    lyapunov_v2,
    residual_bound,
    uub_verdict,
)
from .protocols import (
    AdaptiveState,
    ConstantBound,
    LinearBound,
    ProtocolConfig,
    ProtocolKind,
    RhoBound,
    UncertaintyModel,
)
from .scenarios import build_chua_scenario, build_mass_spring_scenario, build_scenario, resolve_config
from .simulation import LeaderSpec, NonMatching, Scenario, Trajectory, simulate, step_rk4
from .synthesis import (
    AgentDynamics,
    GainSet,
    design_gains,
    feedback_gain,
    solve_care,
    solve_consensus_lmi,
    solve_consensus_lmi_eps,
    verify_lmi,
)
from .verification import verify_trajectory
