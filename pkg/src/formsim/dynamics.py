"""
Nonlinear quadrotor model and fixed-step RK4 integrator.

State vector layout (12 entries, inertial frame unless noted):

    [X, Y, Z, vX, vY, vZ, phi, theta, psi, p, q, r]

Euler angles are roll/pitch/yaw, (p, q, r) are body rates. Every function
here accepts a single 12-vector or a batch of shape (n, 12) and is pure.

Rotor numbering and torque signs follow the distribution matrix

    F_T     =  K_T    * ( w1 + w2 + w3 + w4)
    tau_phi =  K_T*la * ( w1 + w2 - w3 - w4)
    tau_the =  K_T*la * (-w1 + w2 + w3 - w4)
    tau_psi =  K_tau  * ( w1 - w2 + w3 - w4)

with w_i = omega_i**2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from formsim.errors import GimbalLock, InfeasibleAllocation, NonFiniteState

STATE_DIM = 12
X, Y, Z, VX, VY, VZ, PHI, THETA, PSI, P, Q, R = range(STATE_DIM)

GIMBAL_EPS = 1e-3

# Sign pattern of the distribution matrix rows, columns are rotors 1..4.
_SIGNS = np.array(
    [
        [1.0, 1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0, -1.0],
        [-1.0, 1.0, 1.0, -1.0],
        [1.0, -1.0, 1.0, -1.0],
    ]
)


@dataclass(frozen=True)
class QuadrotorParams:
    """Physical constants shared by every agent of the fleet."""

    m: float = 0.5
    Ixb: float = 5e-3
    Iyb: float = 5e-3
    Izb: float = 9e-3
    K_T: float = 3e-5
    K_tau: float = 7e-7
    l_a: float = 0.2
    g: float = 9.81
    # None -> sized so that four saturated rotors give 2.5 m g
    omega_max: float | None = None

    def __post_init__(self):
        for name in ("m", "Ixb", "Iyb", "Izb", "K_T", "K_tau", "l_a", "g"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be > 0, got {value!r}")
        if self.omega_max is not None and not self.omega_max > 0:
            raise ValueError(f"omega_max must be > 0, got {self.omega_max!r}")

    @property
    def rotor_limit(self) -> float:
        if self.omega_max is not None:
            return self.omega_max
        return math.sqrt(2.5 * self.m * self.g / (4.0 * self.K_T))

    @property
    def hover_omega(self) -> float:
        return math.sqrt(self.m * self.g / (4.0 * self.K_T))

    def distribution_matrix(self) -> np.ndarray:
        kt_la = self.K_T * self.l_a
        scale = np.array([self.K_T, kt_la, kt_la, self.K_tau])
        return _SIGNS * scale[:, None]


class QuadrotorState(NamedTuple):
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0


class RotorSpeeds(NamedTuple):
    w1: float
    w2: float
    w3: float
    w4: float


class ControlWrench(NamedTuple):
    F_T: float
    tau_phi: float
    tau_theta: float
    tau_psi: float


def mix_rotors_to_wrench(omega, params: QuadrotorParams):
    """Map rotor speeds to (F_T, tau_phi, tau_theta, tau_psi).

    A single set of four speeds gives a ``ControlWrench``; a batch of shape
    (n, 4) gives an (n, 4) array.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("rotor speeds must be non-negative")
    wrench = (omega**2) @ params.distribution_matrix().T
    if wrench.ndim == 1:
        return ControlWrench(*(float(v) for v in wrench))
    return wrench


def rotor_speeds_squared(wrench, params: QuadrotorParams) -> np.ndarray:
    """Unclamped solution of the distribution matrix for squared speeds."""
    wrench = np.asarray(wrench, dtype=float)
    kt_la = params.K_T * params.l_a
    scaled = wrench / np.array([params.K_T, kt_la, kt_la, params.K_tau])
    # rows of _SIGNS are orthogonal with norm 2, so the inverse is SIGNS.T / 4
    return scaled @ _SIGNS / 4.0


def allocate_wrench_to_rotors(wrench, params: QuadrotorParams):
    """Invert the distribution matrix.

    Raises ``InfeasibleAllocation`` when any squared speed comes out negative.
    """
    omega_sq = rotor_speeds_squared(wrench, params)
    if np.any(omega_sq < 0):
        raise InfeasibleAllocation(
            f"wrench needs negative squared rotor speed: {omega_sq}", omega_sq
        )
    omega = np.sqrt(omega_sq)
    if omega.ndim == 1:
        return RotorSpeeds(*(float(v) for v in omega))
    return omega


def translational_derivatives(state, F_T, params: QuadrotorParams) -> np.ndarray:
    """Inertial-frame acceleration (X'', Y'', Z'') under thrust and gravity."""
    s = np.asarray(state, dtype=float)
    phi, theta, psi = s[..., PHI], s[..., THETA], s[..., PSI]
    sphi, cphi = np.sin(phi), np.cos(phi)
    sth, cth = np.sin(theta), np.cos(theta)
    spsi, cpsi = np.sin(psi), np.cos(psi)
    a = np.asarray(F_T, dtype=float) / params.m
    return np.stack(
        [
            (spsi * sphi + cpsi * cphi * sth) * a,
            (cphi * spsi * sth - cpsi * sphi) * a,
            -params.g + cth * cphi * a,
        ],
        axis=-1,
    )


def rotational_derivatives(state, torques, params: QuadrotorParams) -> np.ndarray:
    """Body angular acceleration (p', q', r') with gyroscopic coupling."""
    s = np.asarray(state, dtype=float)
    tau = np.asarray(torques, dtype=float)
    p, q, r = s[..., P], s[..., Q], s[..., R]
    Ix, Iy, Iz = params.Ixb, params.Iyb, params.Izb
    return np.stack(
        [
            (tau[..., 0] - (Iz - Iy) * q * r) / Ix,
            (tau[..., 1] - (Ix - Iz) * p * r) / Iy,
            (tau[..., 2] - (Iy - Ix) * p * q) / Iz,
        ],
        axis=-1,
    )


def euler_rates(angles, rates, eps: float = GIMBAL_EPS) -> np.ndarray:
    """Convert body rates to Euler-angle rates.

    Raises ``GimbalLock`` when |theta| >= pi/2 - eps.
    """
    angles = np.asarray(angles, dtype=float)
    rates = np.asarray(rates, dtype=float)
    phi, theta = angles[..., 0], angles[..., 1]
    if np.any(np.abs(theta) >= math.pi / 2 - eps):
        raise GimbalLock(f"pitch {np.max(np.abs(theta)):.6f} rad inside gimbal guard")
    p, q, r = rates[..., 0], rates[..., 1], rates[..., 2]
    sphi, cphi = np.sin(phi), np.cos(phi)
    tth, cth = np.tan(theta), np.cos(theta)
    return np.stack(
        [
            p + sphi * tth * q + cphi * tth * r,
            cphi * q - sphi * r,
            (sphi * q + cphi * r) / cth,
        ],
        axis=-1,
    )


def state_derivative(state, wrench, params: QuadrotorParams) -> np.ndarray:
    s = np.asarray(state, dtype=float)
    w = np.asarray(wrench, dtype=float)
    out = np.empty_like(s)
    out[..., X:Z + 1] = s[..., VX:VZ + 1]
    out[..., VX:VZ + 1] = translational_derivatives(s, w[..., 0], params)
    out[..., PHI:PSI + 1] = euler_rates(s[..., PHI:PSI + 1], s[..., P:R + 1])
    out[..., P:R + 1] = rotational_derivatives(s, w[..., 1:], params)
    return out


def step(state, omega, dt: float, params: QuadrotorParams) -> np.ndarray:
    """Advance by one RK4 step with the rotor command held over the step."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    s = np.asarray(state, dtype=float)
    omega = np.asarray(omega, dtype=float)
    wrench = (omega**2) @ params.distribution_matrix().T

    k1 = state_derivative(s, wrench, params)
    k2 = state_derivative(s + 0.5 * dt * k1, wrench, params)
    k3 = state_derivative(s + 0.5 * dt * k2, wrench, params)
    k4 = state_derivative(s + dt * k3, wrench, params)
    new = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    if not np.all(np.isfinite(new)):
        raise NonFiniteState("state became non-finite during integration")
    return new
