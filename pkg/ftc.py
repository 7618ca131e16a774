"""
Fault handling above the low-level controllers: thrust limits for the
allocator after propeller failures, and the compensation QP that spends the
Good quadcopters' spare body torques on the torques a Bad quadcopter leaks.
"""
import logging
from typing import Sequence

import numpy as np

from classes.allocation_limits import AllocationLimits, ThrustLimitsOutcome
from classes.compensation_problem import CompensationProblem, CompensationResult
from classes.failure_status import FailureStatus, Strategy
from classes.platform_params import PlatformParams
from classes.qp_problem import QpProblem, QpStatus
from model import mixing_pair, thrust_jacobians
from numerics import solve_qp

logger = logging.getLogger(__name__)

# Thrust capacity left to a quadcopter, in units of t_max.
CAPACITY = {
    Strategy.NOMINAL: 4.0,
    Strategy.ONE_FAIL: 2.0,
    Strategy.TWO_FAIL: 2.0,
    Strategy.QUAD_LOST: 0.0,
}


def adjust_thrust_limits(
    failures: Sequence[FailureStatus],
    params: PlatformParams,
    base: AllocationLimits | None = None,
) -> ThrustLimitsOutcome:
    """
    Per-quadcopter thrust limits for the current failures.

    A lost quadcopter also disables the one opposite it, so the remaining
    pair stays balanced in yaw. Losing two quadcopters that are not opposite
    each other leaves no such pair and fails the platform.

    Args:
        failures (Sequence[FailureStatus]): One status per quadcopter.
        params (PlatformParams): Supplies t_max.
        base (AllocationLimits | None): Limits to start from (angles, rates).

    Returns:
        ThrustLimitsOutcome: The limits, the disabled quadcopters and the
        platform-failure flag.
    """
    if len(failures) != 4:
        raise ValueError(f"Need one failure status per quadcopter, got {len(failures)}")
    base = base if base is not None else AllocationLimits.default(params)
    T_max = np.array([CAPACITY[f.strategy] * params.t_max for f in failures])

    lost = {i for i, f in enumerate(failures) if f.strategy is Strategy.QUAD_LOST}
    disabled = set(lost) | {(i + 2) % 4 for i in lost}
    T_max[list(disabled)] = 0.0
    platform_failed = any((i + 2) % 4 != k for i in lost for k in lost if k != i)
    if platform_failed:
        logger.error("Quadcopters %s lost: no opposing pair left, platform failed", sorted(lost))
    elif disabled:
        logger.info("Quadcopters %s disabled", sorted(disabled))
    return ThrustLimitsOutcome(
        limits=base.with_T_max(T_max),
        platform_failed=platform_failed,
        disabled=frozenset(disabled),
    )


def compensate(p: CompensationProblem) -> CompensationResult:
    """
    Auxiliary torques for the Good quadcopters that cancel the Bad one's
    disturbance, within every Good propeller's [0, t_max] range.

    Decision variables are y = [Mx_g, Mz_g] (three each, Good quadcopters in
    index order) and the slack k:
        min y'Ay + k'Bk  s.t.  J_Mx[:, g] Mx_g + J_Mz[:, g] Mz_g + k = -d
    where d is the Bad quadcopter's torque seen on the platform. The
    residual left on the platform is -k.
    """
    J = thrust_jacobians(p.alpha)
    good = p.good
    Mx_bad, Mz_bad = p.disturbance
    d = J.J_Mx[:, p.bad] * Mx_bad + J.J_Mz[:, p.bad] * Mz_bad

    A_eq = np.hstack([J.J_Mx[:, good], J.J_Mz[:, good], np.eye(3)])

    # Propeller thrusts of Good quadcopter m: t = Minv[:, 0] T + Minv[:, 2] My + Minv[:, 1] Mx + Minv[:, 3] Mz.
    Minv = mixing_pair(p.b, p.c_tau)[1]
    rows, bounds = [], []
    for m in range(3):
        base = Minv[:, 0] * p.T[m] + Minv[:, 2] * p.My_good[m]
        for j in range(4):
            row = np.zeros(9)
            row[m] = Minv[j, 1]
            row[3 + m] = Minv[j, 3]
            rows.append(row)
            bounds.append(p.t_max - base[j])
            rows.append(-row)
            bounds.append(base[j])

    problem = QpProblem(
        H=2 * np.block([[p.A, np.zeros((6, 3))], [np.zeros((3, 6)), p.B]]),
        g=np.zeros(9),
        A_eq=A_eq,
        b_eq=-d,
        A_in=np.array(rows),
        b_in=np.array(bounds),
    )
    solution = solve_qp(problem, x0=np.concatenate([np.zeros(6), -d]))
    if solution.status is QpStatus.INFEASIBLE:
        logger.debug("Compensation QP infeasible, no auxiliary torques this tick")
        return CompensationResult(np.zeros(3), np.zeros(3), d, solution.status)

    y, k = solution.x[:6], solution.x[6:]
    return CompensationResult(Mx_aux=y[:3], Mz_aux=y[3:], residual=-k, status=solution.status)

