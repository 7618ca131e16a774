import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from classes.platform_params import PlatformParams
from classes.platform_state import PlatformState
from classes.propeller_thrusts import PropellerThrusts
from classes.sim_config import SimConfig
from model import mixing_inverse
from simulator import DelayLine, SimulationDiverged, apply_failures, delay_line, plant_derivatives, plant_step, sense


def _energy(state: PlatformState, params: PlatformParams) -> float:
    return 0.5 * params.m_total * float(state.xi_dot @ state.xi_dot) + params.m_total * params.g * state.xi[2]


def test_hover_is_an_equilibrium(params: PlatformParams, quiet_sim: SimConfig) -> None:
    state = PlatformState.hover(params)
    rates = plant_derivatives(state, state.prop_thrust, params, quiet_sim)
    np.testing.assert_allclose(rates.xi_ddot, 0.0, atol=1e-12)
    np.testing.assert_allclose(rates.nu_dot, 0.0, atol=1e-12)
    np.testing.assert_allclose(rates.alpha_ddot, 0.0, atol=1e-12)

    for _ in range(100):
        state = plant_step(state, state.prop_thrust, params, quiet_sim)
    np.testing.assert_allclose(state.xi, 0.0, atol=1e-10)


def test_free_fall_conserves_energy(params: PlatformParams, quiet_sim: SimConfig) -> None:
    state = PlatformState(xi=[0.0, 0.0, 10.0], xi_dot=[1.0, -0.5, 2.0])
    start = _energy(state, params)
    for _ in range(1000):
        state = plant_step(state, np.zeros((4, 4)), params, quiet_sim)
    assert _energy(state, params) == pytest.approx(start, rel=1e-3)
    assert state.xi[2] == pytest.approx(10.0 + 2.0 - 0.5 * params.g, abs=1e-9)


def test_thrust_is_clipped_to_propeller_range(params: PlatformParams, quiet_sim: SimConfig) -> None:
    state = PlatformState.hover(params)
    over = plant_step(state, np.full((4, 4), 10.0), params, quiet_sim)
    np.testing.assert_allclose(over.prop_thrust, params.t_max)


def test_roll_torque_from_unequal_thrust(params: PlatformParams, quiet_sim: SimConfig) -> None:
    t = np.full((4, 4), params.hover_thrust / 4)
    t[2] += 0.01  # quadcopter 2 sits on +y
    rates = plant_derivatives(PlatformState(), t, params, quiet_sim)
    assert rates.nu_dot[0] > 0.0
    assert abs(rates.nu_dot[1]) < 1e-12


def test_hinge_torque_turns_the_hinge(params: PlatformParams, quiet_sim: SimConfig) -> None:
    t = np.full((4, 4), params.hover_thrust / 4)
    t[1, [0, 3]] += 0.001  # positive My on quadcopter 1
    t[1, [1, 2]] -= 0.001
    rates = plant_derivatives(PlatformState(), t, params, quiet_sim)
    assert rates.alpha_ddot[1] > 0.0
    assert rates.alpha_ddot[[0, 2, 3]] == pytest.approx(0.0, abs=1e-9)


def test_motor_lag(params: PlatformParams) -> None:
    cfg = SimConfig(noise_position=0.0, noise_attitude=0.0, noise_rate=0.0, motor_tau=0.02)
    state = plant_step(PlatformState(), np.full((4, 4), 0.1), params, cfg)
    np.testing.assert_allclose(state.prop_thrust, 0.1 * 0.001 / 0.021)


def test_non_finite_state_raises(params: PlatformParams, quiet_sim: SimConfig) -> None:
    with pytest.raises(SimulationDiverged):
        plant_step(PlatformState(), np.full((4, 4), np.nan), params, quiet_sim)


def test_failed_propellers_deliver_nothing() -> None:
    out = apply_failures(PropellerThrusts(np.full(4, 0.1), saturated=True), {0, 2})
    assert out.t.tolist() == [0.0, 0.1, 0.0, 0.1]
    assert out.saturated


def test_delay_line() -> None:
    line = DelayLine.from_delay(0.02, 0.001, fill=-1)
    assert line.steps == 20
    outputs = [line.push(k) for k in range(25)]
    assert outputs[:20] == [-1] * 20
    assert outputs[20:] == [0, 1, 2, 3, 4]
    assert delay_line(range(3), 0.0, 0.001, fill=-1) == [0, 1, 2]
    with pytest.raises(ValueError):
        DelayLine(-1, 0)


def test_sensing_is_reproducible(params: PlatformParams) -> None:
    cfg = SimConfig()
    state = PlatformState.hover(params)
    first = sense(state, cfg, np.random.default_rng(7))
    second = sense(state, cfg, np.random.default_rng(7))
    np.testing.assert_array_equal(first.xi, second.xi)
    np.testing.assert_array_equal(first.attitude_q, second.attitude_q)
    assert np.linalg.norm(first.xi) > 0.0
    np.testing.assert_array_equal(first.alpha, state.alpha)


def test_noiseless_sensing_keeps_the_random_stream(quiet_sim: SimConfig) -> None:
    rng = np.random.default_rng(3)
    measured = sense(PlatformState(xi=[1.0, 2.0, 3.0]), quiet_sim, rng)
    np.testing.assert_array_equal(measured.xi, [1.0, 2.0, 3.0])
    reference = np.random.default_rng(3)
    reference.normal(0.0, 1.0, 9)
    assert rng.normal() == reference.normal()


def test_sensing_noise_matches_configured_levels(params: PlatformParams) -> None:
    cfg = SimConfig()
    state = PlatformState.hover(params)
    rng = np.random.default_rng(11)
    samples = [sense(state, cfg, rng) for _ in range(100_000)]
    xi = np.array([s.xi for s in samples])
    nu = np.array([s.nu for s in samples])
    tilt = Rotation.from_quat(np.array([s.attitude_q for s in samples])).as_rotvec()
    np.testing.assert_allclose(xi.std(axis=0), cfg.noise_position, rtol=0.05)
    np.testing.assert_allclose(nu.std(axis=0), cfg.noise_rate, rtol=0.05)
    np.testing.assert_allclose(tilt.std(axis=0), cfg.noise_attitude, rtol=0.05)


def test_quaternion_stays_unit_while_tumbling(params: PlatformParams, quiet_sim: SimConfig) -> None:
    state = PlatformState(nu=[0.8, -0.5, 1.2])
    thrust = np.full((4, 4), params.hover_thrust / 4)
    worst = 0.0
    for _ in range(10_000):
        state = plant_step(state, thrust, params, quiet_sim)
        worst = max(worst, abs(float(np.linalg.norm(state.attitude_q)) - 1.0))
    assert worst <= 1e-9


def test_hinge_acceleration_from_hinge_torque(params: PlatformParams, quiet_sim: SimConfig) -> None:
    Minv = mixing_inverse(params)
    t = np.array([Minv @ [params.hover_thrust, 0.0, 0.0, 0.0] for _ in range(4)])
    t[0] = Minv @ [params.hover_thrust, 0.0, 1e-4, 0.0]
    rates = plant_derivatives(PlatformState(), t, params, quiet_sim)
    assert params.I_hinge == pytest.approx(1.6e-5)
    assert rates.alpha_ddot[0] == pytest.approx(6.25, rel=1e-9)
