"""
High-level LQI tracking with feedback linearisation, and the per-quadcopter
low-level controller: hinge PID plus the mixing strategy matching each
propeller-failure class.
"""
import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from classes.controller_settings import LqiWeights, PidGains
from classes.failure_status import MY_SIGNS, FailureStatus, Strategy, classify_failure
from classes.low_level_state import LowLevelState
from classes.lqi_state import LqiState
from classes.platform_params import PlatformParams
from classes.platform_state import PlatformState
from classes.propeller_thrusts import PropellerThrusts
from classes.quad_command import QuadCommand
from classes.reference import Reference
from classes.wrench_command import WrenchCommand
from model import QuadWrench, mixing_inverse, mixing_matrix, quad_mixing, rotation_matrix, vee
from numerics import solve_care

logger = logging.getLogger(__name__)

__all__ = [
    "LowLevelOutput",
    "LqiController",
    "attitude_error",
    "attitude_rate_error",
    "augmented_system",
    "classify_failure",
    "hinge_pid",
    "lowlevel_step",
    "lowlevel_step_fullrank_variant",
    "lqi_gain",
    "lqi_step",
    "mix_fullrank",
    "mix_reduced",
]


# --- high level ------------------------------------------------------------


def attitude_error(eta: NDArray[np.float64], eta_r: NDArray[np.float64]) -> NDArray[np.float64]:
    """Reference minus actual attitude on SO(3): 1/2 (R'R_r - R_r'R) mapped to R^3."""
    R = rotation_matrix(eta)
    R_r = rotation_matrix(eta_r)
    return 0.5 * vee(R.T @ R_r - R_r.T @ R)


def attitude_rate_error(
    eta: NDArray[np.float64], eta_r: NDArray[np.float64], nu: NDArray[np.float64], nu_r: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Reference body rate carried into the current body frame, minus the actual rate."""
    R = rotation_matrix(eta)
    R_r = rotation_matrix(eta_r)
    return R.T @ R_r @ nu_r - nu


def augmented_system() -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Error dynamics after feedback linearisation, state
    [e_xi, e_eta, de_xi, de_eta, int e_xi, int e_eta]. The errors are
    reference minus actual, so the control enters their second derivative
    with a minus sign.
    """
    A = np.zeros((18, 18))
    A[0:6, 6:12] = np.eye(6)
    A[12:18, 0:6] = np.eye(6)
    B = np.zeros((18, 6))
    B[6:12, :] = -np.eye(6)
    return A, B


def lqi_gain(weights: LqiWeights) -> NDArray[np.float64]:
    """
    6x18 LQI gain. Without integral weights the integral states are not
    stabilisable, so the 12-state LQR is solved and its gain padded with
    zero integral columns.
    """
    A, B = augmented_system()
    Q, R = weights.Q(), weights.R()
    if weights.has_integral:
        return solve_care(A, B, Q, R, strict=True).K
    logger.debug("No integral weights, solving the plain LQR")
    K = solve_care(A[:12, :12], B[:12], Q[:12, :12], R, strict=True).K
    return np.hstack([K, np.zeros((6, 6))])


def lqi_step(
    state: PlatformState,
    ref: Reference,
    lqi: LqiState,
    params: PlatformParams,
    dt: float,
) -> WrenchCommand:
    """
    One high-level step.

    Args:
        state (PlatformState): Measured state.
        ref (Reference): Reference at this step.
        lqi (LqiState): Gain and integrals; the integrals are updated in place.
        params (PlatformParams): Mass and inertia for the linearisation.
        dt (float): Step since the previous call.

    Returns:
        WrenchCommand: Desired body force and torque.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    eta = state.eta
    e_xi = ref.xi_r - state.xi
    e_eta = attitude_error(eta, ref.eta_r)
    de_xi = ref.xi_dot_r - state.xi_dot
    de_eta = attitude_rate_error(eta, ref.eta_r, state.nu, ref.nu_r)

    prev_xi = e_xi if lqi.prev_e_xi is None else lqi.prev_e_xi
    prev_eta = e_eta if lqi.prev_e_eta is None else lqi.prev_e_eta
    lqi.integral_e_xi = lqi.integral_e_xi + 0.5 * dt * (e_xi + prev_xi)
    lqi.integral_e_eta = lqi.integral_e_eta + 0.5 * dt * (e_eta + prev_eta)
    lqi.prev_e_xi, lqi.prev_e_eta = e_xi, e_eta

    X = np.concatenate([e_xi, e_eta, de_xi, de_eta, lqi.integral_e_xi, lqi.integral_e_eta])
    u = -lqi.K @ X
    u_xi = u[:3] + ref.xi_ddot_r
    u_nu = u[3:] + ref.nu_dot_r

    R = rotation_matrix(eta)
    force = params.m_total * R.T @ (u_xi - params.gravity)
    torque = params.I_total @ u_nu
    return WrenchCommand(force=force, torque=torque)


class LqiController(object):
    """Owns the LQI gain and integrator memory of one control loop."""

    def __init__(self, params: PlatformParams, weights: LqiWeights) -> None:
        self.params = params
        self.weights = weights
        self.state = LqiState(K=lqi_gain(weights))

    def step(self, state: PlatformState, ref: Reference, dt: float) -> WrenchCommand:
        return lqi_step(state, ref, self.state, self.params, dt)


# --- low level -------------------------------------------------------------


@dataclass(eq=False)
class LowLevelOutput(object):
    """
    Thrusts sent to the four propellers, the wrench they produce and the
    part of Mx, Mz the strategy could not control.
    """

    t: PropellerThrusts
    achieved: QuadWrench
    disturbance: tuple[float, float]
    My_cmd: float = 0.0

    @property
    def M_achieved(self) -> tuple[float, float, float]:
        return self.achieved.Mx, self.achieved.My, self.achieved.Mz


def hinge_pid(
    quad: int,
    alpha_ref: float,
    alpha_meas: float,
    alpha_rate_meas: float,
    failure: FailureStatus,
    ll: LowLevelState,
    dt: float,
) -> float:
    """
    Hinge torque My for one quadcopter. The derivative acts on the measured
    hinge rate. The integral holds while the quadcopter is lost.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    gains: PidGains = ll.gains
    e_alpha = alpha_ref - alpha_meas
    if failure.strategy is not Strategy.QUAD_LOST:
        ll.integral_e_alpha[quad] += e_alpha * dt
    return gains.k_P * e_alpha + gains.k_I * ll.integral_e_alpha[quad] - gains.k_D * alpha_rate_meas


def _output(
    raw: NDArray[np.float64],
    params: PlatformParams,
    failed: frozenset[int],
    uncontrolled: tuple[float, float],
    My: float,
) -> LowLevelOutput:
    """Clamp, zero the failed propellers, and report what was not controlled."""
    raw = np.array(raw, dtype=float)
    raw[list(failed)] = 0.0
    t = PropellerThrusts.clamped(raw, params.t_max)
    achieved = quad_mixing(t, params)
    disturbance = (achieved.Mx - uncontrolled[0], achieved.Mz - uncontrolled[1])
    return LowLevelOutput(t=t, achieved=achieved, disturbance=disturbance, My_cmd=My)


def _one_fail_thrusts(j: int, T: float, My: float, b: float) -> NDArray[np.float64]:
    """
    Propeller j is dead. Its same-My-sign partner takes half the thrust and
    the two others a quarter each, so T and My stay exact.
    """
    s = MY_SIGNS[j]
    partner = next(k for k in range(4) if k != j and MY_SIGNS[k] == s)
    raw = np.full(4, T / 4 - s * My / (4 * b))
    raw[partner] = T / 2 + s * My / (2 * b)
    raw[j] = 0.0
    return raw


def _two_fail_thrusts(failed: frozenset[int], T: float, My: float, b: float) -> NDArray[np.float64]:
    """The two surviving propellers have opposite My signs and split (T, My) between them."""
    raw = np.zeros(4)
    for k in range(4):
        if k not in failed:
            raw[k] = (T + MY_SIGNS[k] * My / b) / 2
    return raw


def _full_rank_thrusts(j: int, T: float, Mx: float, My: float, params: PlatformParams) -> NDArray[np.float64]:
    """Solve T, Mx, My exactly on the three surviving propellers; Mz is left over."""
    remaining = [k for k in range(4) if k != j]
    M = mixing_matrix(params)[:3][:, remaining]
    raw = np.zeros(4)
    raw[remaining] = np.linalg.solve(M, np.array([T, Mx, My]))
    return raw


def mix_reduced(cmd: QuadCommand, My: float, failure: FailureStatus, params: PlatformParams) -> LowLevelOutput:
    """
    Mixing with the reduced single-failure map: after one propeller loss
    only T and My are controlled, and the auxiliary torques are ignored.
    """
    strategy = failure.strategy
    if strategy is Strategy.NOMINAL:
        raw = mixing_inverse(params) @ np.array([cmd.T, cmd.Mx_aux, My, cmd.Mz_aux])
        return _output(raw, params, failure.failed, (cmd.Mx_aux, cmd.Mz_aux), My)
    if strategy is Strategy.ONE_FAIL:
        (j,) = failure.failed
        return _output(_one_fail_thrusts(j, cmd.T, My, params.b), params, failure.failed, (0.0, 0.0), My)
    if strategy is Strategy.TWO_FAIL:
        return _output(_two_fail_thrusts(failure.failed, cmd.T, My, params.b), params, failure.failed, (0.0, 0.0), My)
    return LowLevelOutput(t=PropellerThrusts.zeros(), achieved=QuadWrench(0.0, 0.0, 0.0, 0.0), disturbance=(0.0, 0.0), My_cmd=My)


def mix_fullrank(cmd: QuadCommand, My: float, failure: FailureStatus, params: PlatformParams) -> LowLevelOutput:
    """
    Mixing that keeps T, Mx and My after one propeller loss and gives up Mz.
    The middle propeller then needs (Mx - My)/(2b) for propeller 0 lost, so
    any My above Mx asks for negative thrust and is clipped away.
    """
    if failure.strategy is Strategy.ONE_FAIL:
        (j,) = failure.failed
        raw = _full_rank_thrusts(j, cmd.T, cmd.Mx_aux, My, params)
        return _output(raw, params, failure.failed, (cmd.Mx_aux, 0.0), My)
    return mix_reduced(cmd, My, failure, params)


def lowlevel_step(
    cmd: QuadCommand,
    alpha_meas: float,
    alpha_rate_meas: float,
    failure: FailureStatus,
    ll: LowLevelState,
    params: PlatformParams,
    dt: float,
    quad: int = 0,
    My: float | None = None,
) -> LowLevelOutput:
    """
    One low-level tick of quadcopter ``quad`` with the reduced mixing.

    ``My`` skips the hinge PID when the caller has already run it this tick,
    as the loop does for the Good quadcopters whose torque feeds the
    compensator. The saturation flag is stored in ``ll`` either way.
    """
    if My is None:
        My = hinge_pid(quad, cmd.alpha_ref, alpha_meas, alpha_rate_meas, failure, ll, dt)
    out = mix_reduced(cmd, My, failure, params)
    ll.saturated[quad] = out.t.saturated
    return out


def lowlevel_step_fullrank_variant(
    cmd: QuadCommand,
    alpha_meas: float,
    alpha_rate_meas: float,
    failure: FailureStatus,
    ll: LowLevelState,
    params: PlatformParams,
    dt: float,
    quad: int = 0,
    My: float | None = None,
) -> LowLevelOutput:
    if My is None:
        My = hinge_pid(quad, cmd.alpha_ref, alpha_meas, alpha_rate_meas, failure, ll, dt)
    out = mix_fullrank(cmd, My, failure, params)
    ll.saturated[quad] = out.t.saturated
    return out
