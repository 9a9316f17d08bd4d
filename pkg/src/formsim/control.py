"""Cascade PD navigation controller: position loop outside, attitude loop inside.

All functions are stateless and vectorize over a leading agent axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from formsim import dynamics as dyn
from formsim.dynamics import QuadrotorParams


@dataclass(frozen=True)
class ControllerGains:
    kp_pos: float = 20.0
    kd_pos: float = 14.0
    kp_att: float = 1200.0
    kd_att: float = 70.0
    max_tilt: float = 0.25  # rad

    def __post_init__(self):
        for name in ("kp_pos", "kd_pos", "kp_att", "kd_att"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be > 0, got {value!r}")
        if not 0 < self.max_tilt < math.pi / 2:
            raise ValueError(f"max_tilt must lie in (0, pi/2), got {self.max_tilt!r}")


class PositionSetpoint(NamedTuple):
    x_d: float
    y_d: float
    z_d: float
    vx_d: float = 0.0
    vy_d: float = 0.0
    vz_d: float = 0.0
    psi_d: float = 0.0


class AttitudeSetpoint(NamedTuple):
    phi_d: float
    theta_d: float
    psi_d: float
    F_T: float


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    a = np.asarray(a, dtype=float)
    w = np.mod(a + math.pi, 2.0 * math.pi) - math.pi
    return np.where(w == -math.pi, math.pi, w)


def _single(arr, cls):
    if arr.ndim == 1:
        return cls(*(float(v) for v in arr))
    return arr


def position_control(state, setpoint, gains: ControllerGains, params: QuadrotorParams):
    """Outer loop: PD on position, returns attitude setpoint and thrust.

    Desired roll/pitch come from the small-angle inverse of the
    translational model (divide by g), clamped to +-max_tilt.
    """
    s = np.asarray(state, dtype=float)
    sp = np.asarray(setpoint, dtype=float)
    pos_err = sp[..., 0:3] - s[..., dyn.X:dyn.Z + 1]
    vel_err = sp[..., 3:6] - s[..., dyn.VX:dyn.VZ + 1]
    acc = gains.kp_pos * pos_err + gains.kd_pos * vel_err

    phi, theta = s[..., dyn.PHI], s[..., dyn.THETA]
    thrust = params.m * (acc[..., 2] + params.g) / (np.cos(phi) * np.cos(theta))
    thrust = np.maximum(thrust, 0.0)

    psi_d = sp[..., 6]
    # current heading, not the commanded one, decides the axis mapping
    spsi, cpsi = np.sin(s[..., dyn.PSI]), np.cos(s[..., dyn.PSI])
    ax, ay = acc[..., 0], acc[..., 1]
    theta_d = np.clip((ax * cpsi + ay * spsi) / params.g, -gains.max_tilt, gains.max_tilt)
    phi_d = np.clip((ax * spsi - ay * cpsi) / params.g, -gains.max_tilt, gains.max_tilt)

    out = np.stack([phi_d, theta_d, psi_d, thrust], axis=-1)
    return _single(out, AttitudeSetpoint)


def attitude_control(state, setpoint, gains: ControllerGains, params: QuadrotorParams):
    """Inner loop: PD on Euler angles with body-rate damping, returns torques."""
    s = np.asarray(state, dtype=float)
    sp = np.asarray(setpoint, dtype=float)
    e_phi = sp[..., 0] - s[..., dyn.PHI]
    e_theta = sp[..., 1] - s[..., dyn.THETA]
    e_psi = wrap_angle(sp[..., 2] - s[..., dyn.PSI])
    kp, kd = gains.kp_att, gains.kd_att
    tau = np.stack(
        [
            params.Ixb * (kp * e_phi - kd * s[..., dyn.P]),
            params.Iyb * (kp * e_theta - kd * s[..., dyn.Q]),
            params.Izb * (kp * e_psi - kd * s[..., dyn.R]),
        ],
        axis=-1,
    )
    if tau.ndim == 1:
        return tuple(float(v) for v in tau)
    return tau


def navigation_step(state, setpoint, gains: ControllerGains, params: QuadrotorParams):
    """Full cascade: setpoint -> rotor speeds.

    Returns ``(omega, saturated)``. Squared speeds outside
    [0, rotor_limit**2] are clamped and reported through ``saturated``
    instead of raising.
    """
    att = np.asarray(position_control(state, setpoint, gains, params), dtype=float)
    tau = np.asarray(attitude_control(state, att, gains, params), dtype=float)
    wrench = np.concatenate([att[..., 3:4], tau], axis=-1)

    omega_sq = dyn.rotor_speeds_squared(wrench, params)
    limit_sq = params.rotor_limit**2
    saturated = np.any((omega_sq < 0) | (omega_sq > limit_sq), axis=-1)
    omega = np.sqrt(np.clip(omega_sq, 0.0, limit_sq))
    if omega.ndim == 1:
        return dyn.RotorSpeeds(*(float(v) for v in omega)), bool(saturated)
    return omega, saturated
