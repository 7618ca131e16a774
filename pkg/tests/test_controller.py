import itertools

import numpy as np
import pytest

from classes.controller_settings import LqiWeights, PidGains
from classes.failure_status import FailureStatus, Strategy
from classes.low_level_state import LowLevelState
from classes.lqi_state import LqiState
from classes.platform_params import PlatformParams
from classes.platform_state import PlatformState
from classes.quad_command import QuadCommand
from classes.reference import Reference
from controller import (
    LqiController,
    attitude_error,
    augmented_system,
    hinge_pid,
    lowlevel_step,
    lowlevel_step_fullrank_variant,
    lqi_gain,
    lqi_step,
    mix_fullrank,
    mix_reduced,
)


@pytest.fixture
def ll() -> LowLevelState:
    return LowLevelState(gains=PidGains())


# --- high level ------------------------------------------------------------


def test_attitude_error_small_angles() -> None:
    eta = np.array([0.01, -0.02, 0.03])
    eta_r = np.array([0.02, 0.01, 0.0])
    np.testing.assert_allclose(attitude_error(eta, eta_r), eta_r - eta, atol=1e-3)
    np.testing.assert_allclose(attitude_error(eta, eta), 0.0, atol=1e-15)


def test_lqi_gain_stabilises() -> None:
    A, B = augmented_system()
    K = lqi_gain(LqiWeights())
    assert K.shape == (6, 18)
    assert np.max(np.linalg.eigvals(A - B @ K).real) < 0.0


def test_lqr_without_integral_weights() -> None:
    weights = LqiWeights(q_int_pos=(0.0, 0.0, 0.0), q_int_att=(0.0, 0.0, 0.0))
    K = lqi_gain(weights)
    np.testing.assert_array_equal(K[:, 12:], 0.0)
    A, B = augmented_system()
    assert np.max(np.linalg.eigvals(A[:12, :12] - B[:12] @ K[:, :12]).real) < 0.0


def test_hover_command_is_weight(params: PlatformParams) -> None:
    controller = LqiController(params, LqiWeights())
    u = controller.step(PlatformState(), Reference(), 0.01)
    np.testing.assert_allclose(u.force, [0.0, 0.0, params.m_total * params.g], atol=1e-12)
    np.testing.assert_allclose(u.torque, 0.0, atol=1e-12)


def test_vehicle_below_reference_pushes_up(params: PlatformParams) -> None:
    controller = LqiController(params, LqiWeights())
    u = controller.step(PlatformState(xi=[0.0, 0.0, -0.1]), Reference(), 0.01)
    assert u.force[2] > params.m_total * params.g


def test_roll_error_gives_restoring_torque(params: PlatformParams) -> None:
    controller = LqiController(params, LqiWeights())
    u = controller.step(PlatformState.from_euler([0.1, 0.0, 0.0]), Reference(), 0.01)
    assert u.torque[0] < 0.0


def test_integrals_use_trapezoidal_rule(params: PlatformParams) -> None:
    lqi = LqiState(K=lqi_gain(LqiWeights()))
    ref = Reference(xi_r=np.array([0.0, 0.0, 0.2]))
    lqi_step(PlatformState(), ref, lqi, params, 0.01)
    np.testing.assert_allclose(lqi.integral_e_xi, [0.0, 0.0, 0.002])
    lqi_step(PlatformState(xi=[0.0, 0.0, 0.1]), ref, lqi, params, 0.01)
    np.testing.assert_allclose(lqi.integral_e_xi, [0.0, 0.0, 0.002 + 0.5 * 0.01 * (0.2 + 0.1)])
    lqi.reset()
    assert lqi.prev_e_xi is None and not lqi.integral_e_xi.any()


def test_feed_forward_adds_reference_acceleration(params: PlatformParams) -> None:
    plain = LqiController(params, LqiWeights()).step(PlatformState(), Reference(), 0.01)
    ref = Reference(xi_ddot_r=np.array([0.5, 0.0, 0.0]), nu_dot_r=np.array([0.0, 0.0, 2.0]))
    fed = LqiController(params, LqiWeights()).step(PlatformState(), ref, 0.01)
    np.testing.assert_allclose(fed.force - plain.force, [params.m_total * 0.5, 0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(fed.torque - plain.torque, params.I_total @ [0.0, 0.0, 2.0], atol=1e-12)


def test_lqi_step_rejects_bad_dt(params: PlatformParams) -> None:
    with pytest.raises(ValueError):
        lqi_step(PlatformState(), Reference(), LqiState(K=np.zeros((6, 18))), params, 0.0)


# --- hinge PID -------------------------------------------------------------


def test_hinge_pid_terms(ll: LowLevelState) -> None:
    gains = ll.gains
    My = hinge_pid(2, 0.1, 0.0, 0.5, FailureStatus(), ll, 0.002)
    assert My == pytest.approx(gains.k_P * 0.1 + gains.k_I * 0.1 * 0.002 - gains.k_D * 0.5)
    assert ll.integral_e_alpha[2] == pytest.approx(0.0002)
    assert ll.integral_e_alpha[[0, 1, 3]].tolist() == [0.0, 0.0, 0.0]


def test_hinge_integral_frozen_when_quad_lost(ll: LowLevelState) -> None:
    ll.integral_e_alpha[0] = 0.05
    hinge_pid(0, 0.3, 0.0, 0.0, FailureStatus(frozenset({0, 3})), ll, 0.002)
    assert ll.integral_e_alpha[0] == 0.05


# --- mixing ----------------------------------------------------------------


def test_nominal_mixing_honours_all_torques(params: PlatformParams) -> None:
    cmd = QuadCommand(0.35, 0.0, Mx_aux=0.001, Mz_aux=-0.0002)
    out = mix_reduced(cmd, 0.002, FailureStatus(), params)
    assert not out.t.saturated
    assert out.achieved.T == pytest.approx(0.35)
    assert out.M_achieved == pytest.approx((0.001, 0.002, -0.0002))
    assert out.disturbance == pytest.approx((0.0, 0.0), abs=1e-15)


@pytest.mark.parametrize("j", range(4))
def test_one_fail_keeps_thrust_and_hinge_torque(params: PlatformParams, j: int) -> None:
    T, My = 0.15, 0.1 * params.b * 0.15
    out = mix_reduced(QuadCommand(T, 0.0), My, FailureStatus(frozenset({j})), params)
    assert out.t.t[j] == 0.0
    assert not out.t.saturated
    assert out.achieved.T == pytest.approx(T, abs=1e-12)
    assert out.achieved.My == pytest.approx(My, abs=1e-12)
    assert out.disturbance == pytest.approx((out.achieved.Mx, out.achieved.Mz))


def test_one_fail_disturbance_formula(params: PlatformParams, rng: np.random.Generator) -> None:
    b, c_tau = params.b, params.c_tau
    for _ in range(50):
        T = rng.uniform(0.05, 0.2)
        My = rng.uniform(-0.3, 0.3) * b * T
        out = mix_reduced(QuadCommand(T, 0.0), My, FailureStatus(frozenset({0})), params)
        assert out.disturbance[0] == pytest.approx(b * T / 2 + My / 2, abs=1e-12)
        assert out.disturbance[1] == pytest.approx(-c_tau * (T / 2 + My / (2 * b)), abs=1e-12)


@pytest.mark.parametrize("failed", [f for f in itertools.combinations(range(4), 2) if set(f) not in ({0, 3}, {1, 2})])
def test_two_fail_keeps_thrust_and_hinge_torque(params: PlatformParams, failed: tuple[int, int]) -> None:
    T, My = 0.2, -0.05 * params.b * 0.2
    out = mix_reduced(QuadCommand(T, 0.0), My, FailureStatus(frozenset(failed)), params)
    assert out.t.t[list(failed)].tolist() == [0.0, 0.0]
    assert out.achieved.T == pytest.approx(T, abs=1e-12)
    assert out.achieved.My == pytest.approx(My, abs=1e-12)


def test_lost_quad_is_switched_off(params: PlatformParams) -> None:
    out = mix_reduced(QuadCommand(0.3, 0.0), 0.001, FailureStatus(frozenset({1, 2})), params)
    assert out.t.t.tolist() == [0.0] * 4
    assert out.disturbance == (0.0, 0.0)


@pytest.mark.parametrize("j", range(4))
def test_full_rank_keeps_roll_torque(params: PlatformParams, j: int) -> None:
    T, Mx, My = 0.2, 0.0005, 0.0003
    out = mix_fullrank(QuadCommand(T, 0.0, Mx_aux=Mx), My, FailureStatus(frozenset({j})), params)
    if not out.t.saturated:
        assert (out.achieved.T, out.achieved.Mx, out.achieved.My) == pytest.approx((T, Mx, My), abs=1e-12)


def test_full_rank_clips_when_hinge_torque_exceeds_roll_torque(params: PlatformParams) -> None:
    # With propeller 0 lost, propeller 2 needs (Mx - My) / (2b) < 0.
    out = mix_fullrank(QuadCommand(0.2, 0.0), 0.002, FailureStatus(frozenset({0})), params)
    assert out.t.saturated
    assert out.t.t[2] == 0.0
    assert out.achieved.My < 0.002


def test_lowlevel_step_records_saturation(params: PlatformParams, ll: LowLevelState) -> None:
    out = lowlevel_step(QuadCommand(1.0, 0.0), 0.0, 0.0, FailureStatus(), ll, params, 0.002, quad=1)
    assert out.t.saturated and ll.saturated[1]
    out = lowlevel_step_fullrank_variant(QuadCommand(0.3, 0.0), 0.0, 0.0, FailureStatus(), ll, params, 0.002, quad=1)
    assert not out.t.saturated and not ll.saturated[1]


def test_lowlevel_step_with_given_torque_skips_the_pid(params: PlatformParams, ll: LowLevelState) -> None:
    cmd = QuadCommand(0.35, 0.3)
    out = lowlevel_step(cmd, 0.0, 0.0, FailureStatus(), ll, params, 0.002, quad=2, My=0.001)
    assert ll.integral_e_alpha[2] == 0.0
    assert out.My_cmd == 0.001
    assert out.achieved.My == pytest.approx(0.001)


def test_quad_command_limits() -> None:
    assert QuadCommand(0.668, 0.0, T_max=0.668).T == 0.668
    with pytest.raises(ValueError):
        QuadCommand(0.7, 0.0, T_max=0.668)
    with pytest.raises(ValueError):
        QuadCommand(-0.1, 0.0)
    unbounded = QuadCommand(0.9, 0.1)
    assert unbounded.with_aux(0.001, 0.0).T_max == unbounded.T_max
    assert QuadCommand(0.3, 0.0, T_max=0.334).with_aux(0.001, -0.001).T_max == 0.334


def test_classification_table() -> None:
    from controller import classify_failure

    for size in range(5):
        for subset in itertools.combinations(range(4), size):
            strategy = classify_failure(frozenset(subset))
            if size == 0:
                assert strategy is Strategy.NOMINAL
            elif size == 1:
                assert strategy is Strategy.ONE_FAIL
            elif size == 2 and set(subset) not in ({0, 3}, {1, 2}):
                assert strategy is Strategy.TWO_FAIL
            else:
                assert strategy is Strategy.QUAD_LOST
    with pytest.raises(ValueError):
        classify_failure(frozenset({4}))
