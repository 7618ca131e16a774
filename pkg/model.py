"""
Geometry and propeller algebra of the hinged-quadcopter platform.

Everything here is a pure function of its inputs: the thrust Jacobians, the
wrench produced by hinge angles and thrusts, the per-quadcopter mixing
matrix and the change of variables to the intermediate forces
F = [F_s0, F_c0, ..., F_s3, F_c3].
"""
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.transform import Rotation

from classes.platform_params import PlatformParams
from classes.propeller_thrusts import PropellerThrusts
from classes.wrench_command import WrenchCommand


class ThrustJacobians(NamedTuple):
    J_xi: NDArray[np.float64]
    J_nu: NDArray[np.float64]
    J_Mx: NDArray[np.float64]
    J_Mz: NDArray[np.float64]


class QuadWrench(NamedTuple):
    T: float
    Mx: float
    My: float
    Mz: float


def thrust_jacobians(alpha: NDArray[np.float64], l: float = 1.0) -> ThrustJacobians:
    """
    Map per-quadcopter thrusts and body torques to platform force and torque.

    Args:
        alpha (NDArray): Hinge angles of the four quadcopters (rad).
        l (float): Arm length; only J_nu is scaled by it.

    Returns:
        ThrustJacobians: J_xi, J_nu (3x4, thrust columns) and J_Mx, J_Mz
        (3x4, columns for each quadcopter's own x and z torques).
    """
    s0, s1, s2, s3 = np.sin(alpha)
    c0, c1, c2, c3 = np.cos(alpha)
    J_xi = np.array(
        [
            [-s0, 0.0, s2, 0.0],
            [0.0, s1, 0.0, -s3],
            [c0, c1, c2, c3],
        ]
    )
    J_Mx = np.array(
        [
            [-c0, 0.0, c2, 0.0],
            [0.0, c1, 0.0, -c3],
            [s0, s1, s2, s3],
        ]
    )
    J_Mz = np.array(
        [
            [s0, 0.0, -s2, 0.0],
            [0.0, -s1, 0.0, s3],
            [c0, c1, c2, c3],
        ]
    )
    return ThrustJacobians(J_xi, l * J_Mx, J_Mx, J_Mz)


def wrench_from_inputs(alpha: NDArray[np.float64], T: NDArray[np.float64], l: float) -> WrenchCommand:
    J = thrust_jacobians(alpha, l)
    T = np.asarray(T, dtype=float)
    return WrenchCommand(force=J.J_xi @ T, torque=J.J_nu @ T)


@lru_cache(maxsize=16)
def mixing_pair(b: float, c_tau: float) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Mixing matrix of one quadcopter and its inverse, both read-only."""
    M = np.array(
        [
            [1.0, 1.0, 1.0, 1.0],
            [-b, -b, b, b],
            [b, -b, -b, b],
            [c_tau, -c_tau, c_tau, -c_tau],
        ]
    )
    M_inv = np.linalg.inv(M)
    M.setflags(write=False)
    M_inv.setflags(write=False)
    return M, M_inv


def mixing_matrix(params: PlatformParams) -> NDArray[np.float64]:
    """Rows T, Mx, My, Mz of one quadcopter as functions of its four propeller thrusts."""
    return mixing_pair(params.b, params.c_tau)[0]


def mixing_inverse(params: PlatformParams) -> NDArray[np.float64]:
    return mixing_pair(params.b, params.c_tau)[1]


def quad_mixing(t: PropellerThrusts | NDArray[np.float64], params: PlatformParams) -> QuadWrench:
    thrusts = t.t if isinstance(t, PropellerThrusts) else np.asarray(t, dtype=float)
    T, Mx, My, Mz = mixing_matrix(params) @ thrusts
    return QuadWrench(float(T), float(Mx), float(My), float(Mz))


def mix_inverse(T: float, Mx: float, My: float, Mz: float, params: PlatformParams) -> PropellerThrusts:
    """Propeller thrusts for a quadcopter wrench, clamped to [0, t_max]."""
    raw = mixing_inverse(params) @ np.array([T, Mx, My, Mz])
    return PropellerThrusts.clamped(raw, params.t_max)


def inputs_to_forces(alpha: NDArray[np.float64], T: NDArray[np.float64]) -> NDArray[np.float64]:
    F = np.empty(8)
    F[0::2] = np.sin(alpha) * T
    F[1::2] = np.cos(alpha) * T
    return F


def forces_to_inputs(
    F: NDArray[np.float64],
    alpha_prev: NDArray[np.float64] | None = None,
    tol: float = 1e-12,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Recover hinge angles and thrusts from intermediate forces.

    A quadcopter with F_s = F_c = 0 gets T = 0 and keeps its previous angle
    (zero when none is given).

    Returns:
        tuple: (alpha in (-pi, pi], T >= 0)
    """
    F = np.asarray(F, dtype=float)
    F_s, F_c = F[0::2], F[1::2]
    T = np.hypot(F_s, F_c)
    alpha = np.arctan2(F_s, F_c)
    degenerate = T <= tol
    if np.any(degenerate):
        fallback = np.zeros(4) if alpha_prev is None else np.asarray(alpha_prev, dtype=float)
        alpha = np.where(degenerate, fallback, alpha)
        T = np.where(degenerate, 0.0, T)
    return alpha, T


def rotation_matrix(eta: NDArray[np.float64]) -> NDArray[np.float64]:
    """Body-to-world rotation for roll-pitch-yaw angles, R = Rz(psi) Ry(theta) Rx(phi)."""
    return Rotation.from_euler("xyz", eta).as_matrix()


def euler_rates_to_body(eta: NDArray[np.float64], eta_dot: NDArray[np.float64]) -> NDArray[np.float64]:
    phi, theta, _ = eta
    d_phi, d_theta, d_psi = eta_dot
    return np.array(
        [
            d_phi - np.sin(theta) * d_psi,
            np.cos(phi) * d_theta + np.sin(phi) * np.cos(theta) * d_psi,
            -np.sin(phi) * d_theta + np.cos(phi) * np.cos(theta) * d_psi,
        ]
    )


def euler_accel_to_body(
    eta: NDArray[np.float64], eta_dot: NDArray[np.float64], eta_ddot: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Time derivative of euler_rates_to_body."""
    phi, theta, _ = eta
    d_phi, d_theta, d_psi = eta_dot
    dd_phi, dd_theta, dd_psi = eta_ddot
    sp, cp = np.sin(phi), np.cos(phi)
    st, ct = np.sin(theta), np.cos(theta)
    return np.array(
        [
            dd_phi - ct * d_theta * d_psi - st * dd_psi,
            -sp * d_phi * d_theta + cp * dd_theta + cp * d_phi * ct * d_psi
            - sp * st * d_theta * d_psi + sp * ct * dd_psi,
            -cp * d_phi * d_theta - sp * dd_theta - sp * d_phi * ct * d_psi
            - cp * st * d_theta * d_psi + cp * ct * dd_psi,
        ]
    )


def vee(S: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.array([S[2, 1], S[0, 2], S[1, 0]])
