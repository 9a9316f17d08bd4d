"""Synchronous multi-agent simulation loop and run metrics."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from formsim import dynamics as dyn
from formsim.control import ControllerGains, navigation_step
from formsim.dynamics import QuadrotorParams
from formsim.errors import EmptyLog, IsolatedFollower, SimulationAbort, ValidationError
from formsim.topology import (
    BiasSchedule,
    CircleReference,
    FeedforwardFilter,
    FormationSpec,
    formation_error,
    generate_setpoint,
    neighbor_graph,
    reference,
)

log = logging.getLogger(__name__)

FLAG_SATURATED = 1
FLAG_ISOLATED = 2

POLICIES = ("hold", "strict")
GRAPH_MODES = ("dynamic", "initial")


@dataclass(frozen=True)
class ScenarioConfig:
    formation: FormationSpec
    initial_states: np.ndarray  # (n, 12)
    dt: float = 0.01
    duration: float = 120.0
    params: QuadrotorParams = field(default_factory=QuadrotorParams)
    gains: ControllerGains = field(default_factory=ControllerGains)
    reference: object = field(default_factory=CircleReference)
    bias_schedule: BiasSchedule | None = None  # None -> constant formation.biases
    isolated_policy: str = "hold"
    # "dynamic": neighbor sets from every snapshot; "initial": latched at t = 0
    neighbor_graph: str = "dynamic"
    name: str = "custom"
    notes: tuple = ()

    def __post_init__(self):
        states = np.array(self.initial_states, dtype=float)
        states.setflags(write=False)
        object.__setattr__(self, "initial_states", states)
        if self.bias_schedule is None:
            object.__setattr__(
                self, "bias_schedule", BiasSchedule.constant(self.formation.biases)
            )
        object.__setattr__(self, "notes", tuple(self.notes))

    @property
    def n(self) -> int:
        return self.formation.n

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt))

    def validate(self) -> "ScenarioConfig":
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValidationError("dt > 0")
        if not self.duration >= self.dt:
            raise ValidationError("duration >= dt")
        if self.initial_states.shape != (self.n, dyn.STATE_DIM):
            raise ValidationError(
                f"initial_states must have shape ({self.n}, {dyn.STATE_DIM})"
            )
        if not np.all(np.isfinite(self.initial_states)):
            raise ValidationError("initial states must be finite")
        if self.isolated_policy not in POLICIES:
            raise ValidationError(f"isolated_policy must be one of {POLICIES}")
        if self.neighbor_graph not in GRAPH_MODES:
            raise ValidationError(f"neighbor_graph must be one of {GRAPH_MODES}")
        for tb in self.bias_schedule.tables:
            if tb.shape != (self.n, 2):
                raise ValidationError(f"every bias table must hold {self.n} planar biases")
        pos = self.initial_states[:, :3]
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if np.array_equal(pos[i], pos[j]):
                    raise ValidationError(
                        f"initial positions of agents {i + 1} and {j + 1} coincide"
                    )
        return self


@dataclass
class SimLog:
    """Telemetry arrays indexed [step, agent]."""

    t: np.ndarray  # (K,)
    states: np.ndarray  # (K, n, 12)
    setpoints: np.ndarray  # (K, n, 2)
    err: np.ndarray  # (K, n)
    flags: np.ndarray  # (K, n) int

    @property
    def n(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return len(self.t)


def run(config: ScenarioConfig, order=None) -> SimLog:
    """Simulate the scenario; row k of the log holds the state at t_k = k*dt.

    ``order`` permutes the per-agent evaluation order within a step. It
    exists for testing synchrony and never changes the result.
    """
    config.validate()
    n, dt, steps = config.n, config.dt, config.steps
    params, gains = config.params, config.gains
    form = config.formation
    order = list(range(n)) if order is None else list(order)
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the agent indices")

    t_log = np.empty(steps)
    s_log = np.empty((steps, n, dyn.STATE_DIM))
    sp_log = np.empty((steps, n, 2))
    e_log = np.empty((steps, n))
    f_log = np.zeros((steps, n), dtype=np.int64)

    states = np.array(config.initial_states, dtype=float)
    filters = [FeedforwardFilter(dt) for _ in range(n)]
    last_sp: list = [None] * n
    isolated = [False] * n
    table_idx, spec = -1, form
    graph = None
    command = np.zeros((n, 7))

    for k in range(steps):
        t = k * dt
        snapshot = states[:, :2].copy()
        snapshot.setflags(write=False)

        idx = config.bias_schedule.index_at(t)
        if idx != table_idx:
            table_idx = idx
            spec = form.with_biases(config.bias_schedule.tables[idx])
            if idx:
                log.info("t=%.2f s: switched to bias table %d", t, idx)
        if graph is None or config.neighbor_graph == "dynamic":
            graph = neighbor_graph(snapshot, spec.sensing_radius, t)
        r_t, _ = reference(config.reference, t)

        planar = np.empty((n, 2))
        for i in order:
            try:
                sp = generate_setpoint(
                    i, snapshot, graph, spec, r_t if spec.is_leader(i) else None
                )
            except IsolatedFollower:
                if config.isolated_policy == "strict":
                    log.error("t=%.2f s: follower %d isolated, aborting", t, i + 1)
                    raise
                if not isolated[i]:
                    log.warning("t=%.2f s: follower %d isolated, holding setpoint", t, i + 1)
                isolated[i] = True
                f_log[k, i] |= FLAG_ISOLATED
                planar[i] = snapshot[i] if last_sp[i] is None else last_sp[i]
                continue
            if isolated[i]:
                log.info("t=%.2f s: follower %d reconnected", t, i + 1)
                isolated[i] = False
            planar[i] = sp.position
        for i in range(n):
            last_sp[i] = planar[i].copy()
            command[i, 3:5] = filters[i].update(planar[i])
        command[:, 0:2] = planar
        command[:, 2] = spec.altitude
        command[:, 6] = spec.yaw_d

        err, _ = formation_error(snapshot, r_t, spec)
        omega, saturated = navigation_step(states, command, gains, params)
        f_log[k] |= np.where(saturated, FLAG_SATURATED, 0)

        t_log[k] = t
        s_log[k] = states
        sp_log[k] = planar
        e_log[k] = err

        try:
            states = dyn.step(states, omega, dt, params)
        except SimulationAbort as exc:
            log.error("t=%.2f s: %s", t, exc)
            raise

    return SimLog(t_log, s_log, sp_log, e_log, f_log)


@dataclass
class MetricsReport:
    tail_fraction: float
    tail_start: float
    steady_state_max_error: list  # per agent, over the tail window
    max_error: float  # over all agents, tail window
    min_pairwise_distance: float  # planar, whole run
    tail_min_pairwise_distance: float
    max_abs_roll: float
    max_abs_pitch: float
    isolated_events: int
    saturation_events: int
    setpoint_peak: dict = field(default_factory=dict)  # whole run, {"x": [...], "y": [...]}
    tail_setpoint_peak: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "tail_fraction": self.tail_fraction,
            "tail_start": self.tail_start,
            "steady_state_max_error": self.steady_state_max_error,
            "max_error": self.max_error,
            "min_pairwise_distance": self.min_pairwise_distance,
            "tail_min_pairwise_distance": self.tail_min_pairwise_distance,
            "max_abs_roll": self.max_abs_roll,
            "max_abs_pitch": self.max_abs_pitch,
            "isolated_events": self.isolated_events,
            "saturation_events": self.saturation_events,
            "setpoint_peak": self.setpoint_peak,
            "tail_setpoint_peak": self.tail_setpoint_peak,
        }


def tail_slice(log: SimLog, tail_fraction: float) -> slice:
    count = max(1, int(round(len(log) * tail_fraction)))
    return slice(len(log) - count, len(log))


def pairwise_min_distance(states: np.ndarray) -> float:
    """Smallest planar distance between two distinct agents over all rows."""
    pos = states[..., :2]
    n = pos.shape[1]
    if n < 2:
        return math.inf
    iu, ju = np.triu_indices(n, k=1)
    diff = pos[:, iu, :] - pos[:, ju, :]
    return float(np.hypot(diff[..., 0], diff[..., 1]).min())


def metrics(log: SimLog, tail_fraction: float = 0.25) -> MetricsReport:
    if len(log) == 0:
        raise EmptyLog("log has no rows")
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    tail = tail_slice(log, tail_fraction)
    per_agent = log.err[tail].max(axis=0)
    return MetricsReport(
        tail_fraction=float(tail_fraction),
        tail_start=float(log.t[tail.start]),
        steady_state_max_error=[float(v) for v in per_agent],
        max_error=float(per_agent.max()),
        min_pairwise_distance=pairwise_min_distance(log.states),
        tail_min_pairwise_distance=pairwise_min_distance(log.states[tail]),
        max_abs_roll=float(np.abs(log.states[..., dyn.PHI]).max()),
        max_abs_pitch=float(np.abs(log.states[..., dyn.THETA]).max()),
        isolated_events=int(np.count_nonzero(log.flags & FLAG_ISOLATED)),
        saturation_events=int(np.count_nonzero(log.flags & FLAG_SATURATED)),
        setpoint_peak=_peaks(log.setpoints),
        tail_setpoint_peak=_peaks(log.setpoints[tail]),
    )


def _peaks(setpoints: np.ndarray) -> dict:
    peak = setpoints.max(axis=0)
    return {"x": [float(v) for v in peak[:, 0]], "y": [float(v) for v in peak[:, 1]]}
