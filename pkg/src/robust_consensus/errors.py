"""Exception hierarchy shared by all modules."""


class ConsensusError(Exception):
    """Base class for every error raised by this package."""


class NonSymmetricError(ConsensusError, ValueError):
    pass


class AssumptionViolated(ConsensusError, ValueError):
    """A structural assumption (graph topology, dynamics) does not hold."""


class DisconnectedGraphError(AssumptionViolated):
    pass


class NotStabilizableError(ConsensusError, ValueError):
    pass


class NotControllableError(NotStabilizableError):
    pass


class NumericalFailure(ConsensusError, ArithmeticError):
    pass


class FeasibilityCheckFailed(ConsensusError, ArithmeticError):
    pass


class SingularPError(ConsensusError, ArithmeticError):
    pass


class InfeasiblePError(ConsensusError, ValueError):
    pass


class PreconditionViolated(ConsensusError, ValueError):
    pass


class NonFiniteStateError(ConsensusError, ArithmeticError):
    pass


class DivergenceDetected(ConsensusError, ArithmeticError):
    """Raised when the simulated state leaves the divergence ball.

    The partially integrated trajectory is attached as ``trajectory`` so
    callers can still inspect or write it.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class AssumptionViolatedAtRuntime(ConsensusError, RuntimeError):
    """A declared bound was exceeded during simulation."""

    def __init__(self, message, *, monitor, t, agent):
        super().__init__(message)
        self.monitor = monitor
        self.t = t
        self.agent = agent
