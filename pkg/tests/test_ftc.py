import dataclasses

import numpy as np
import pytest

from classes.allocation_limits import AllocationLimits
from classes.compensation_problem import CompensationProblem
from classes.failure_status import FailureStatus
from classes.platform_params import PlatformParams
from classes.qp_problem import QpStatus
from ftc import adjust_thrust_limits, compensate
from model import mixing_inverse, thrust_jacobians

NOMINAL = FailureStatus()


def _problem(params: PlatformParams, bad: int, disturbance: tuple[float, float], T: float | None = None) -> CompensationProblem:
    return CompensationProblem(
        alpha=np.zeros(4),
        bad=bad,
        disturbance=disturbance,
        T=np.full(3, params.hover_thrust if T is None else T),
        My_good=np.zeros(3),
        t_max=params.t_max,
        b=params.b,
        c_tau=params.c_tau,
    )


def _good_thrusts(params: PlatformParams, p: CompensationProblem, result) -> np.ndarray:  # type: ignore[no-untyped-def]
    Minv = mixing_inverse(params)
    return np.array([Minv @ [p.T[m], result.Mx_aux[m], p.My_good[m], result.Mz_aux[m]] for m in range(3)])


def test_nominal_limits(params: PlatformParams) -> None:
    outcome = adjust_thrust_limits([NOMINAL] * 4, params)
    np.testing.assert_allclose(outcome.limits.T_max, 4 * params.t_max)
    assert not outcome.platform_failed and not outcome.disabled


def test_failed_propellers_reduce_capacity(params: PlatformParams) -> None:
    failures = [NOMINAL, FailureStatus(frozenset({2})), NOMINAL, FailureStatus(frozenset({0, 1}))]
    outcome = adjust_thrust_limits(failures, params)
    np.testing.assert_allclose(outcome.limits.T_max, np.array([4, 2, 4, 2]) * params.t_max)


def test_lost_quad_disables_its_opposite(params: PlatformParams) -> None:
    base = AllocationLimits.default(params, alpha_limit=1.0)
    outcome = adjust_thrust_limits([NOMINAL, NOMINAL, NOMINAL, FailureStatus(frozenset({0, 3}))], params, base)
    assert outcome.disabled == frozenset({1, 3})
    assert outcome.limits.T_max[[1, 3]].tolist() == [0.0, 0.0]
    assert not outcome.platform_failed
    np.testing.assert_allclose(outcome.limits.alpha_max, 1.0)


def test_two_adjacent_lost_quads_fail_the_platform(params: PlatformParams) -> None:
    lost = FailureStatus(frozenset({1, 2}))
    assert adjust_thrust_limits([lost, lost, NOMINAL, NOMINAL], params).platform_failed
    assert not adjust_thrust_limits([lost, NOMINAL, lost, NOMINAL], params).platform_failed


def test_limits_need_four_statuses(params: PlatformParams) -> None:
    with pytest.raises(ValueError):
        adjust_thrust_limits([NOMINAL] * 3, params)


def test_no_disturbance_no_aux(params: PlatformParams) -> None:
    result = compensate(_problem(params, 3, (0.0, 0.0)))
    assert result.status is QpStatus.OPTIMAL
    np.testing.assert_allclose(result.Mx_aux, 0.0, atol=1e-12)
    np.testing.assert_allclose(result.Mz_aux, 0.0, atol=1e-12)


@pytest.mark.parametrize("bad", range(4))
def test_small_disturbance_cancelled(params: PlatformParams, bad: int) -> None:
    p = _problem(params, bad, (0.003, -0.001))
    result = compensate(p)
    assert np.max(np.abs(result.residual)) <= 1e-6
    J = thrust_jacobians(p.alpha)
    d = J.J_Mx[:, bad] * 0.003 + J.J_Mz[:, bad] * -0.001
    total = d + J.J_Mx[:, p.good] @ result.Mx_aux + J.J_Mz[:, p.good] @ result.Mz_aux
    np.testing.assert_allclose(total, result.residual, atol=1e-10)
    t = _good_thrusts(params, p, result)
    assert np.all(t >= -1e-9) and np.all(t <= params.t_max + 1e-9)


def test_large_disturbance_stays_within_propeller_limits(params: PlatformParams) -> None:
    p = _problem(params, 3, (0.05, 0.02))
    result = compensate(p)
    assert result.status is QpStatus.OPTIMAL
    assert np.max(np.abs(result.residual)) > 1e-3
    t = _good_thrusts(params, p, result)
    assert np.all(t >= -1e-9) and np.all(t <= params.t_max + 1e-9)


def test_no_headroom_returns_the_whole_disturbance(params: PlatformParams) -> None:
    # Good quadcopters already past 4 t_max: not even zero auxiliary torque is admissible.
    p = _problem(params, 3, (0.002, 0.0), T=5 * params.t_max)
    result = compensate(p)
    assert result.status is QpStatus.INFEASIBLE
    np.testing.assert_allclose(result.Mx_aux, 0.0)
    assert np.max(np.abs(result.residual)) == pytest.approx(0.002)


def test_problem_validation(params: PlatformParams) -> None:
    with pytest.raises(ValueError):
        _problem(params, 4, (0.0, 0.0))


def _compensation_cost(p: CompensationProblem, result) -> float:  # type: ignore[no-untyped-def]
    y = np.concatenate([result.Mx_aux, result.Mz_aux])
    return float(y @ p.A @ y + result.residual @ p.B @ result.residual)


def test_more_headroom_never_costs_more(params: PlatformParams, rng: np.random.Generator) -> None:
    for _ in range(20):
        disturbance = (float(rng.uniform(-0.03, 0.03)), float(rng.uniform(-0.01, 0.01)))
        tight = _problem(params, 3, disturbance)
        roomy = dataclasses.replace(tight, t_max=1.3 * params.t_max)
        tight_result, roomy_result = compensate(tight), compensate(roomy)
        assert roomy_result.status is not QpStatus.INFEASIBLE
        assert _compensation_cost(roomy, roomy_result) <= _compensation_cost(tight, tight_result) * (1 + 1e-6) + 1e-12


def test_unconstrained_compensation_scales_with_the_disturbance(params: PlatformParams) -> None:
    small = compensate(_problem(params, 1, (0.001, -0.0004)))
    double = compensate(_problem(params, 1, (0.002, -0.0008)))
    np.testing.assert_allclose(double.Mx_aux, 2 * small.Mx_aux, atol=1e-9)
    np.testing.assert_allclose(double.Mz_aux, 2 * small.Mz_aux, atol=1e-9)
