"""Leader-follower multi-quadrotor formation simulator with neighbor-based setpoint generation."""

from formsim.control import ControllerGains, navigation_step
from formsim.dynamics import QuadrotorParams, QuadrotorState
from formsim.engine import ScenarioConfig, SimLog, metrics, run
from formsim.topology import FormationSpec, generate_setpoint, neighbor_graph, neighbor_set

__all__ = [
    "ControllerGains",
    "FormationSpec",
    "QuadrotorParams",
    "QuadrotorState",
    "ScenarioConfig",
    "SimLog",
    "generate_setpoint",
    "metrics",
    "navigation_step",
    "neighbor_graph",
    "neighbor_set",
    "run",
]

__version__ = "0.1.0"
