import logging

import numpy as np
import pytest

from allocation import Allocator, build_W, force_jacobian
from classes.allocation_limits import AllocationLimits
from classes.platform_params import PlatformParams
from classes.qp_problem import QpProblem, QpStatus
from classes.wrench_command import WrenchCommand
from model import inputs_to_forces, wrench_from_inputs
from numerics import solve_qp


@pytest.fixture
def allocator(params: PlatformParams) -> Allocator:
    return Allocator(params)


def test_W_matches_wrench_model(params: PlatformParams, rng: np.random.Generator) -> None:
    W = build_W(params.l)
    assert np.linalg.matrix_rank(W) == 6
    alpha, T = rng.uniform(-1, 1, 4), rng.uniform(0, 1, 4)
    np.testing.assert_allclose(W @ inputs_to_forces(alpha, T), wrench_from_inputs(alpha, T, params.l).as_vector(), atol=1e-12)


def test_force_jacobian_central_differences(rng: np.random.Generator) -> None:
    X = np.concatenate([rng.uniform(-1.5, 1.5, 4), rng.uniform(0.01, 1.0, 4)])
    h = 1e-6
    J_fd = np.column_stack(
        [
            (inputs_to_forces((X + h * e)[:4], (X + h * e)[4:]) - inputs_to_forces((X - h * e)[:4], (X - h * e)[4:])) / (2 * h)
            for e in np.eye(8)
        ]
    )
    np.testing.assert_allclose(force_jacobian(X[:4], X[4:]), J_fd, atol=1e-8)


def test_fd_hover(allocator: Allocator, params: PlatformParams) -> None:
    weight = params.m_total * params.g
    solution = allocator.fd_allocate(WrenchCommand([0.0, 0.0, weight], np.zeros(3)))
    np.testing.assert_allclose(solution.alpha, 0.0, atol=1e-12)
    np.testing.assert_allclose(solution.T, weight / 4)
    np.testing.assert_allclose(solution.T, 0.35316, rtol=1e-12)


def test_fd_pure_yaw(allocator: Allocator, params: PlatformParams) -> None:
    tau = 0.02
    solution = allocator.fd_allocate(WrenchCommand(np.zeros(3), [0.0, 0.0, tau]))
    np.testing.assert_allclose(solution.F[0::2], tau / (4 * params.l), atol=1e-12)
    np.testing.assert_allclose(solution.F[1::2], 0.0, atol=1e-12)
    np.testing.assert_allclose(solution.alpha, np.pi / 2, atol=1e-9)
    np.testing.assert_allclose(solution.T, tau / (4 * params.l), atol=1e-12)


def test_fd_is_least_norm(allocator: Allocator, rng: np.random.Generator) -> None:
    u = WrenchCommand.from_vector(rng.normal(size=6))
    base = allocator.fd_allocate(u)
    np.testing.assert_allclose(allocator.W @ base.F, u.as_vector(), atol=1e-12)
    for _ in range(50):
        shifted = allocator.fd_allocate(u, Z=rng.normal(size=2))
        np.testing.assert_allclose(allocator.W @ shifted.F, u.as_vector(), atol=1e-12)
        assert np.linalg.norm(base.F) < np.linalg.norm(shifted.F)


def test_nullspace_reproduces_wrench(allocator: Allocator, params: PlatformParams, rng: np.random.Generator) -> None:
    limits = AllocationLimits.default(params)
    for _ in range(50):
        X_prev = np.concatenate([rng.uniform(-1, 1, 4), rng.uniform(0.1, 0.5, 4)])
        u = rng.normal(scale=0.5, size=6)
        solution = allocator.nullspace_allocate(WrenchCommand.from_vector(u), X_prev, limits)
        assert solution.qp_status is QpStatus.OPTIMAL
        assert np.max(np.abs(allocator.W @ solution.F - u)) <= 1e-9
        assert np.all(np.abs(solution.delta_X) <= limits.dX_max + 1e-9)


def test_eliminated_slack_matches_the_joint_qp(params: PlatformParams, rng: np.random.Generator) -> None:
    allocator = Allocator(params, Z_weight=0.0)
    limits = AllocationLimits.default(params)
    for _ in range(10):
        X_prev = np.concatenate([rng.uniform(-0.5, 0.5, 4), rng.uniform(0.1, 0.5, 4)])
        u = rng.normal(scale=0.5, size=6)
        solution = allocator.nullspace_allocate(WrenchCommand.from_vector(u), X_prev, limits)

        F_o = inputs_to_forces(X_prev[:4], X_prev[4:])
        J = force_jacobian(X_prev[:4], X_prev[4:])
        joint = QpProblem(
            H=2 * np.block([[allocator.P, np.zeros((8, 8))], [np.zeros((8, 8)), allocator.Q]]),
            g=np.zeros(16),
            A_eq=np.hstack([allocator.W @ J, allocator.W]),
            b_eq=u - allocator.W @ F_o,
            lb=np.concatenate([np.maximum(limits.X_min - X_prev, -limits.dX_max), np.full(8, -np.inf)]),
            ub=np.concatenate([np.minimum(limits.X_max - X_prev, limits.dX_max), np.full(8, np.inf)]),
        )
        reference = solve_qp(joint)
        assert reference.status is QpStatus.OPTIMAL
        np.testing.assert_allclose(solution.delta_X, reference.x[:8], atol=1e-6)
        assert solution.slack_norm == pytest.approx(np.linalg.norm(reference.x[8:]), abs=1e-6)


def test_nullspace_respects_thrust_limit_where_fd_does_not(
    allocator: Allocator, params: PlatformParams, caplog: pytest.LogCaptureFixture
) -> None:
    # Strong roll torque on a heavy platform: the least-norm split puts 0.8 N on quadcopter 2.
    u = WrenchCommand([0.0, 0.0, 2.0], [2 * params.l * 0.3, 0.0, 0.0])
    fd = allocator.fd_allocate(u)
    T_limit = 4 * params.t_max
    assert fd.T[2] > T_limit

    limits = AllocationLimits.default(params, d_alpha_max=1.0, d_T_max=1.0)
    X = fd.X
    with caplog.at_level(logging.WARNING):
        for _ in range(40):
            solution = allocator.nullspace_allocate(u, X, limits)
            X = solution.X
    assert "clamped" in caplog.text
    # The projection may leave the box by a little; the loop clips what it sends.
    assert np.max(solution.T) <= T_limit + 1e-3
    np.testing.assert_allclose(allocator.W @ solution.F, u.as_vector(), atol=1e-9)
    assert solution.constrained


def test_nullspace_returns_to_least_norm_forces(allocator: Allocator, params: PlatformParams) -> None:
    u = WrenchCommand([0.0, 0.0, params.m_total * params.g], np.zeros(3))
    offset = 0.025 * np.array([0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0])
    X = allocator.fd_allocate(u, Z=allocator.N.T @ offset).X
    np.testing.assert_allclose(X[4:], params.hover_thrust + np.array([0.025, -0.025, 0.025, -0.025]))

    limits = AllocationLimits.default(params)
    for _ in range(30):
        solution = allocator.nullspace_allocate(u, X, limits)
        X = solution.X
    np.testing.assert_allclose(solution.T, params.hover_thrust, atol=1e-6)
    np.testing.assert_allclose(solution.alpha, 0.0, atol=1e-9)


def test_nullspace_stays_on_least_norm_forces_inside_the_box(allocator: Allocator, params: PlatformParams) -> None:
    X_target = np.array([0.05, -0.04, 0.03, 0.02, 0.36, 0.34, 0.35, 0.37])
    u = WrenchCommand.from_vector(allocator.W @ inputs_to_forces(X_target[:4], X_target[4:]))
    fd = allocator.fd_allocate(u)
    limits = AllocationLimits.default(params)
    X = fd.X
    for _ in range(50):
        solution = allocator.nullspace_allocate(u, X, limits)
        X = solution.X
    np.testing.assert_allclose(solution.F, fd.F, atol=1e-9)
    assert np.min(solution.T) > 0.3
    assert not solution.constrained


def test_constrained_counts_inputs_on_a_bound(params: PlatformParams) -> None:
    allocator = Allocator(params, Z_weight=0.0)
    limits = AllocationLimits.default(params)
    X = np.array([0.0, 0.0, 0.0, 0.0, 4 * params.t_max, 0.2, 0.2, 0.2])
    u = WrenchCommand.from_vector(allocator.W @ inputs_to_forces(X[:4], X[4:]))
    solution = allocator.nullspace_allocate(u, X, limits)
    np.testing.assert_allclose(solution.delta_X, 0.0, atol=1e-9)
    assert solution.constrained
    with pytest.raises(ValueError):
        Allocator(params, Z_weight=-1.0)


def test_nullspace_holds_inputs_when_already_exact(allocator: Allocator, params: PlatformParams) -> None:
    limits = AllocationLimits.default(params)
    X = np.concatenate([np.zeros(4), np.full(4, params.hover_thrust)])
    u = allocator.W @ inputs_to_forces(X[:4], X[4:])
    solution = allocator.nullspace_allocate(WrenchCommand.from_vector(u), X, limits)
    np.testing.assert_allclose(solution.delta_X, 0.0, atol=1e-9)
    np.testing.assert_allclose(solution.X, X, atol=1e-9)
    assert solution.slack_norm < 1e-9
    assert not solution.constrained
