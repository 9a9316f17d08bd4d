"""
Neighbor-based trajectory generation for leader-follower formations.

Agents are indexed from 0 in this API. Each agent i owns a planar bias
d_i0 relative to the reference trajectory r(t); only leaders see r(t).
Every agent builds its own desired planar position from the positions of
the agents inside its sensing disk:

    follower:  xd_i = mean_{j in N_i} (x_j + d_ij)
    leader:    xd_i = (sum_{j in N_i} (x_j + d_ij) + r + d_i0) / (|N_i| + 1)

where d_ij = d_i0 - d_j0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from formsim.errors import IsolatedFollower, MissingReference


@dataclass(frozen=True)
class FormationSpec:
    n: int
    leaders: frozenset
    biases: np.ndarray  # (n, 2)
    sensing_radius: float
    altitude: float = 5.0
    yaw_d: float = 0.0

    def __post_init__(self):
        biases = np.array(self.biases, dtype=float)
        biases.setflags(write=False)
        object.__setattr__(self, "biases", biases)
        object.__setattr__(self, "leaders", frozenset(int(i) for i in self.leaders))
        if self.n < 2:
            raise ValueError("formation needs at least 2 agents")
        if not self.leaders:
            raise ValueError("at least one leader is required")
        bad = [i for i in self.leaders if not 0 <= i < self.n]
        if bad:
            raise ValueError(f"leader indices out of range: {sorted(bad)}")
        if biases.shape != (self.n, 2):
            raise ValueError(f"expected one planar bias per agent, got shape {biases.shape}")
        if not self.sensing_radius > 0:
            raise ValueError("sensing_radius must be > 0")

    def is_leader(self, i: int) -> bool:
        return i in self.leaders

    def with_biases(self, biases) -> "FormationSpec":
        return FormationSpec(
            self.n, self.leaders, biases, self.sensing_radius, self.altitude, self.yaw_d
        )


@dataclass(frozen=True)
class CircleReference:
    amplitude: float = 3.0
    angular_rate: float = 0.1

    def __call__(self, t: float):
        a, w = self.amplitude, self.angular_rate
        s, c = math.sin(w * t), math.cos(w * t)
        return np.array([a * s, a * c]), np.array([a * w * c, -a * w * s])


@dataclass(frozen=True)
class PolylineReference:
    """Piecewise-linear waypoint path through (t_k, r_k).

    Held constant outside the knot range. The velocity at a knot is the
    right-hand (outgoing) segment slope.
    """

    times: tuple
    points: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        points = tuple((float(p[0]), float(p[1])) for p in self.points)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)
        if len(times) < 1 or len(times) != len(points):
            raise ValueError("polyline needs matching, non-empty times and points")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("polyline knot times must be strictly increasing")

    def __call__(self, t: float):
        ts, pts = self.times, np.asarray(self.points)
        if t < ts[0]:
            return pts[0].copy(), np.zeros(2)
        if t >= ts[-1]:
            return pts[-1].copy(), np.zeros(2)
        k = int(np.searchsorted(ts, t, side="right")) - 1
        span = ts[k + 1] - ts[k]
        vel = (pts[k + 1] - pts[k]) / span
        return pts[k] + vel * (t - ts[k]), vel


def reference(rt, t: float):
    """Evaluate a reference trajectory, returning (r(t), r'(t))."""
    if t < 0:
        raise ValueError("reference time must be >= 0")
    return rt(t)


@dataclass(frozen=True)
class BiasSchedule:
    """Bias tables switched in at given times; the switch instant is inclusive."""

    times: tuple
    tables: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        tables = tuple(np.array(tb, dtype=float) for tb in self.tables)
        for tb in tables:
            tb.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "tables", tables)
        if not times or len(times) != len(tables):
            raise ValueError("bias schedule needs matching, non-empty times and tables")
        if times[0] != 0.0:
            raise ValueError("first bias table must start at t = 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("bias switch times must be strictly increasing")
        shape = tables[0].shape
        if any(tb.shape != shape for tb in tables):
            raise ValueError("every bias table must cover the same agents")

    @classmethod
    def constant(cls, biases) -> "BiasSchedule":
        return cls((0.0,), (biases,))

    def index_at(self, t: float) -> int:
        return max(0, int(np.searchsorted(self.times, t, side="right")) - 1)


def active_biases(schedule: BiasSchedule, t: float) -> np.ndarray:
    return schedule.tables[schedule.index_at(t)]


@dataclass(frozen=True)
class NeighborGraph:
    neighbors: tuple  # one frozenset per agent
    t: float = 0.0

    def __getitem__(self, i: int) -> frozenset:
        return self.neighbors[i]

    def __len__(self) -> int:
        return len(self.neighbors)


def neighbor_set(positions, i: int, d: float) -> frozenset:
    """Agents j != i within planar distance d of agent i (boundary included)."""
    pos = np.asarray(positions, dtype=float)[:, :2]
    dist = np.hypot(pos[:, 0] - pos[i, 0], pos[:, 1] - pos[i, 1])
    return frozenset(int(j) for j in np.flatnonzero(dist <= d) if j != i)


def neighbor_graph(positions, d: float, t: float = 0.0) -> NeighborGraph:
    pos = np.asarray(positions, dtype=float)[:, :2]
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    adj = dist <= d
    np.fill_diagonal(adj, False)
    return NeighborGraph(tuple(frozenset(np.flatnonzero(row).tolist()) for row in adj), t)


def inter_distance(spec: FormationSpec, i: int, j: int) -> np.ndarray:
    """Desired planar offset of agent i from agent j."""
    return spec.biases[i] - spec.biases[j]


class GeneratedSetpoint(NamedTuple):
    position: np.ndarray  # planar desired position
    altitude: float
    yaw: float
    velocity: np.ndarray  # planar feedforward, filled in by the engine
    isolated: bool = False


def generate_setpoint(i: int, positions, graph: NeighborGraph, spec: FormationSpec, r_t=None):
    """Desired planar position of agent i from its neighbors (and r(t) for leaders).

    Raises ``IsolatedFollower`` for a follower without neighbors and
    ``MissingReference`` for a leader called without r_t.
    """
    pos = np.asarray(positions, dtype=float)
    nbrs = sorted(graph.neighbors[i])
    leader = spec.is_leader(i)
    if leader and r_t is None:
        raise MissingReference(f"leader {i + 1} needs the reference value")
    if not leader and not nbrs:
        raise IsolatedFollower(i)

    b = spec.biases
    total = np.zeros(2)
    for j in nbrs:
        total += pos[j, :2] + (b[i] - b[j])
    count = len(nbrs)
    if leader:
        total += np.asarray(r_t, dtype=float) + b[i]
        count += 1
    return GeneratedSetpoint(total / count, spec.altitude, spec.yaw_d, np.zeros(2))


def formation_error(positions, r_t, spec: FormationSpec):
    """Per-agent distance from the desired slot r + d_i0, and the max over agents."""
    pos = np.asarray(positions, dtype=float)[:, :2]
    err = np.linalg.norm(pos - np.asarray(r_t, dtype=float) - spec.biases, axis=1)
    return err, float(err.max())


@dataclass
class FeedforwardFilter:
    """Velocity feedforward from the generated setpoint.

    Backward difference over one control period, smoothed by
    v <- alpha * v + (1 - alpha) * diff. Zero on the first update.
    """

    dt: float
    alpha: float = 0.9
    _last: np.ndarray | None = field(default=None, repr=False)
    _vel: np.ndarray | None = field(default=None, repr=False)

    def update(self, setpoint) -> np.ndarray:
        sp = np.array(setpoint, dtype=float)
        if self._last is None:
            self._vel = np.zeros_like(sp)
        else:
            raw = (sp - self._last) / self.dt
            self._vel = self.alpha * self._vel + (1.0 - self.alpha) * raw
        self._last = sp
        return self._vel.copy()
