"""
Fixed-step plant of the hinged-quadcopter platform, plus the sensor and link
models wrapped around it.
"""
import logging
from collections import deque
from typing import Generic, Iterable, NamedTuple, Sequence, TypeVar

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.transform import Rotation

from classes.platform_params import PlatformParams
from classes.platform_state import PlatformState
from classes.propeller_thrusts import PropellerThrusts
from classes.sim_config import SimConfig
from model import mixing_matrix, thrust_jacobians

logger = logging.getLogger(__name__)

# sin(pi i / 2) and cos(pi i / 2) for the four hinges, exact.
HINGE_SIN = np.array([0.0, 1.0, 0.0, -1.0])
HINGE_COS = np.array([1.0, 0.0, -1.0, 0.0])

T = TypeVar("T")


class SimulationDiverged(RuntimeError):
    """The plant state stopped being finite."""


class PlantRates(NamedTuple):
    xi_ddot: NDArray[np.float64]
    nu_dot: NDArray[np.float64]
    alpha_ddot: NDArray[np.float64]


def apply_failures(commanded: PropellerThrusts, failed: Iterable[int]) -> PropellerThrusts:
    t = commanded.t.copy()
    t[list(failed)] = 0.0
    return PropellerThrusts(t, commanded.saturated)


def _thrust_matrix(thrusts: Sequence[PropellerThrusts] | NDArray[np.float64], t_max: float) -> NDArray[np.float64]:
    if isinstance(thrusts, np.ndarray):
        t = thrusts.reshape(4, 4)
    else:
        if len(thrusts) != 4:
            raise ValueError(f"Need thrusts for 4 quadcopters, got {len(thrusts)}")
        t = np.array([p.t for p in thrusts])
    return np.clip(t, 0.0, t_max)


def plant_derivatives(
    state: PlatformState,
    prop_thrust: NDArray[np.float64],
    params: PlatformParams,
    cfg: SimConfig,
) -> PlantRates:
    """
    Accelerations of the platform and hinges for delivered propeller thrusts
    (row i for quadcopter i).
    """
    wrench = prop_thrust @ mixing_matrix(params).T  # row i: T, Mx, My, Mz of quad i
    T, Mx, My, Mz = wrench.T
    J = thrust_jacobians(state.alpha, params.l)
    R = state.rotation.as_matrix()

    xi_ddot = R @ (J.J_xi @ T) / params.m_total + params.gravity
    torque = J.J_nu @ T + J.J_Mx @ Mx + J.J_Mz @ Mz
    if cfg.include_gyroscopic:
        torque = torque - np.cross(state.nu, params.I_total @ state.nu)
    nu_dot = np.linalg.solve(params.I_total, torque)
    alpha_ddot = My / params.I_hinge - HINGE_SIN * nu_dot[0] - HINGE_COS * nu_dot[1]
    return PlantRates(xi_ddot, nu_dot, alpha_ddot)


def plant_step(
    state: PlatformState,
    thrusts: Sequence[PropellerThrusts] | NDArray[np.float64],
    params: PlatformParams,
    cfg: SimConfig,
) -> PlatformState:
    """
    Advance the plant by one dt_physics.

    Velocities are updated first and positions with the mean of the old and
    new velocity; the attitude quaternion is advanced by the body-rate
    rotation and stays unit-norm.

    Args:
        state (PlatformState): Current state.
        thrusts: Commanded propeller thrusts, one PropellerThrusts per quadcopter.
        params (PlatformParams): Platform constants.
        cfg (SimConfig): Step size, motor lag and gyroscopic switch.

    Returns:
        PlatformState: The next state.

    Raises:
        SimulationDiverged: When the next state is not finite.
    """
    dt = cfg.dt_physics
    commanded = _thrust_matrix(thrusts, params.t_max)
    if cfg.motor_tau > 0.0:
        delivered = state.prop_thrust + dt / (cfg.motor_tau + dt) * (commanded - state.prop_thrust)
    else:
        delivered = commanded

    rates = plant_derivatives(state, delivered, params, cfg)

    xi_dot = state.xi_dot + rates.xi_ddot * dt
    xi = state.xi + 0.5 * (state.xi_dot + xi_dot) * dt
    nu = state.nu + rates.nu_dot * dt
    alpha_dot = state.alpha_dot + rates.alpha_ddot * dt
    alpha = state.alpha + alpha_dot * dt
    if not all(np.all(np.isfinite(v)) for v in (xi, xi_dot, nu, alpha, alpha_dot)):
        raise SimulationDiverged("Plant state became non-finite")
    q = (state.rotation * Rotation.from_rotvec(nu * dt)).as_quat()
    return PlatformState(
        xi=xi,
        attitude_q=q,
        xi_dot=xi_dot,
        nu=nu,
        alpha=alpha,
        alpha_dot=alpha_dot,
        prop_thrust=delivered,
    )


def sense(state: PlatformState, cfg: SimConfig, rng: np.random.Generator) -> PlatformState:
    """
    Measured copy of the state: Gaussian noise on position, attitude (a
    small body-frame rotation) and body rates. Hinge angles and rates are
    read exactly. The same number of draws is taken whatever the noise
    levels, so the random stream does not depend on them.
    """
    d_xi = rng.normal(0.0, 1.0, 3)
    d_att = rng.normal(0.0, 1.0, 3)
    d_nu = rng.normal(0.0, 1.0, 3)
    if cfg.noiseless:
        return state.copy()

    attitude_q = state.attitude_q
    if cfg.noise_attitude > 0.0:
        attitude_q = (state.rotation * Rotation.from_rotvec(cfg.noise_attitude * d_att)).as_quat()
    return state.copy(
        xi=state.xi + cfg.noise_position * d_xi,
        attitude_q=attitude_q,
        nu=state.nu + cfg.noise_rate * d_nu,
    )


class DelayLine(Generic[T]):
    """
    Fixed-latency FIFO. Each push returns the item pushed ``steps`` pushes
    earlier; the line starts full of ``fill``.
    """

    def __init__(self, steps: int, fill: T) -> None:
        if steps < 0:
            raise ValueError(f"Delay must be non-negative, got {steps} steps")
        self.steps = steps
        self._queue: deque[T] = deque([fill] * steps)

    def push(self, item: T) -> T:
        if self.steps == 0:
            return item
        self._queue.append(item)
        return self._queue.popleft()

    @classmethod
    def from_delay(cls, comm_delay: float, dt: float, fill: T) -> "DelayLine[T]":
        steps = int(round(comm_delay / dt))
        if not np.isclose(steps * dt, comm_delay, rtol=0.0, atol=1e-12):
            logger.info("Delay %.6g s rounded to %d steps of %.6g s", comm_delay, steps, dt)
        return cls(steps, fill)


def delay_line(stream: Iterable[T], comm_delay: float, dt: float, fill: T) -> list[T]:
    """Delay a whole command stream; the first outputs are ``fill``."""
    line = DelayLine.from_delay(comm_delay, dt, fill)
    return [line.push(item) for item in stream]
