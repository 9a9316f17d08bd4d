"""Exception types raised across the simulator."""


class FormsimError(Exception):
    """Base class for all simulator errors."""


class InfeasibleAllocation(FormsimError):
    """A wrench needs a negative squared rotor speed.

    ``omega_sq`` carries the unclamped solution so callers can saturate it.
    """

    def __init__(self, message, omega_sq=None):
        super().__init__(message)
        self.omega_sq = omega_sq


class SimulationAbort(FormsimError):
    """Run-time failure that stops a simulation (CLI exit code 3)."""


class GimbalLock(SimulationAbort):
    pass


class NonFiniteState(SimulationAbort):
    pass


class IsolatedFollower(SimulationAbort):
    """A follower has no neighbors, so its setpoint cannot be generated."""

    def __init__(self, agent):
        super().__init__(f"follower {agent + 1} has an empty neighbor set")
        self.agent = agent


class MissingReference(FormsimError):
    pass


class ParseError(FormsimError):
    """Malformed input file. Message carries line/row/field context."""


class ValidationError(FormsimError):
    """Well-formed input that violates an invariant."""


class EmptyLog(FormsimError):
    pass
