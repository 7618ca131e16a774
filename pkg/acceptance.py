"""
The acceptance checks run by ``main.py verify``: randomised property checks
of the numerical kernels, the low-level maps and the compensator, and the
closed-loop scenario contrasts.
"""
import itertools
import logging
import tempfile
import time
from pathlib import Path
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from allocation import Allocator, force_jacobian
from classes.allocation_limits import AllocationLimits
from classes.check_result import CheckResult
from classes.compensation_problem import CompensationProblem
from classes.controller_settings import LqiWeights
from classes.failure_status import FailureStatus, Strategy, classify_failure
from classes.platform_params import PlatformParams
from classes.qp_problem import QpProblem, QpStatus
from classes.quad_command import QuadCommand
from classes.wrench_command import WrenchCommand
from config import Config
from controller import augmented_system, mix_fullrank, mix_reduced
from ftc import compensate
from harness import ScenarioResult, load_registry, run_scenario, write_trace_csv
from model import inputs_to_forces, mixing_pair
from numerics import care_residual, solve_care, solve_qp

logger = logging.getLogger(__name__)

SEED = 20240501
# Wall-clock allowance for 10^4 constrained allocations.
ALLOCATION_BUDGET = 5.0
# Frobenius norm of the CARE residual.
CARE_TOL = 1e-8


# --- oracles ---------------------------------------------------------------


def brute_force_qp(problem: QpProblem) -> tuple[NDArray[np.float64], float] | None:
    """
    Solve a small strictly convex QP by trying every subset of inequality
    rows as equalities. The optimum is the best feasible stationary point.
    Exponential in the number of inequalities; for checking only.
    """
    n = problem.n
    eye = np.eye(n)
    upper = np.flatnonzero(np.isfinite(problem.ub))
    lower = np.flatnonzero(np.isfinite(problem.lb))
    C = np.vstack([problem.A_in, eye[upper], -eye[lower]])
    d = np.concatenate([problem.b_in, problem.ub[upper], -problem.lb[lower]])
    E, f = problem.A_eq, problem.b_eq

    best: tuple[NDArray[np.float64], float] | None = None
    for size in range(min(C.shape[0], n) + 1):
        for rows in itertools.combinations(range(C.shape[0]), size):
            A = np.vstack([E, C[list(rows)]])
            b = np.concatenate([f, d[list(rows)]])
            m = A.shape[0]
            K = np.block([[problem.H, A.T], [A, np.zeros((m, m))]])
            sol = np.linalg.lstsq(K, np.concatenate([-problem.g, b]), rcond=None)[0]
            x = sol[:n]
            if m and np.max(np.abs(A @ x - b)) > 1e-9:
                continue
            if C.shape[0] and np.max(C @ x - d) > 1e-9:
                continue
            value = float(0.5 * x @ problem.H @ x + problem.g @ x)
            if best is None or value < best[1] - 1e-12:
                best = (x, value)
    return best


def random_qp(rng: np.random.Generator, n: int) -> QpProblem:
    """A random strictly convex QP with x = 0 feasible."""
    M = rng.normal(size=(n, n))
    H = M @ M.T + 0.1 * np.eye(n)
    g = rng.normal(scale=2.0, size=n)
    A_eq = rng.normal(size=(1, n)) if rng.random() < 0.5 else None
    A_in = rng.normal(size=(1, n))
    return QpProblem(
        H=H,
        g=g,
        A_eq=A_eq,
        b_eq=np.zeros(1) if A_eq is not None else None,
        A_in=A_in,
        b_in=rng.uniform(0.1, 1.0, 1),
        lb=-rng.uniform(0.2, 1.0, n),
        ub=rng.uniform(0.2, 1.0, n),
    )


def random_inputs(rng: np.random.Generator, params: PlatformParams) -> NDArray[np.float64]:
    alpha = rng.uniform(-1.2, 1.2, 4)
    T = rng.uniform(0.1, 3.5 * params.t_max, 4)
    return np.concatenate([alpha, T])


def _timed(number: int, name: str, check: Callable[[], tuple[bool, str]]) -> CheckResult:
    started = time.perf_counter()
    try:
        passed, detail = check()
    except Exception as e:  # a crashing check is a failed check
        logger.exception("Check %d raised", number)
        passed, detail = False, f"{type(e).__name__}: {e}"
    return CheckResult(number, name, passed, detail, time.perf_counter() - started)


# --- property checks -------------------------------------------------------


def check_allocation_exactness(config: Config, samples: int) -> tuple[bool, str]:
    params = config.params
    rng = np.random.default_rng(SEED)
    allocator = Allocator(params, config.allocation.P, config.allocation.Q, Z_weight=config.allocation.Z_weight)
    limits = AllocationLimits.default(params)
    worst = 0.0
    started = time.perf_counter()
    for _ in range(samples):
        X_prev = random_inputs(rng, params)
        X_target = np.clip(X_prev + rng.normal(scale=0.05, size=8), limits.X_min, limits.X_max)
        u = allocator.W @ inputs_to_forces(X_target[:4], X_target[4:])
        solution = allocator.nullspace_allocate(WrenchCommand.from_vector(u), X_prev, limits)
        worst = max(worst, float(np.max(np.abs(allocator.W @ solution.F - u))))
    runtime = time.perf_counter() - started
    per_10k = runtime * 1e4 / max(samples, 1)
    passed = worst <= 1e-9 and per_10k < ALLOCATION_BUDGET
    return passed, f"max |W F* - u| = {worst:.2e} over {samples} commands, {per_10k:.2f} s per 10^4"


def check_jacobian(config: Config, samples: int) -> tuple[bool, str]:
    rng = np.random.default_rng(SEED + 1)
    h = 1e-6
    worst = 0.0
    for _ in range(samples):
        X = np.concatenate([rng.uniform(-np.pi / 2, np.pi / 2, 4), rng.uniform(0.01, 1.0, 4)])
        J = force_jacobian(X[:4], X[4:])
        J_fd = np.zeros((8, 8))
        for k in range(8):
            step = np.zeros(8)
            step[k] = h
            plus, minus = X + step, X - step
            J_fd[:, k] = (inputs_to_forces(plus[:4], plus[4:]) - inputs_to_forces(minus[:4], minus[4:])) / (2 * h)
        worst = max(worst, float(np.max(np.abs(J_fd - J)) / max(np.max(np.abs(J)), 1e-12)))
    return worst <= 1e-6, f"max relative error {worst:.2e} over {samples} points"


def check_least_norm(config: Config, samples: int) -> tuple[bool, str]:
    rng = np.random.default_rng(SEED + 2)
    allocator = Allocator(config.params)
    u = WrenchCommand.from_vector(rng.normal(size=6))
    F0 = allocator.fd_allocate(u).F
    violations = 0
    for _ in range(samples):
        Z = rng.normal(size=allocator.N.shape[1])
        F = allocator.fd_allocate(u, Z=Z).F
        if not np.linalg.norm(F0) < np.linalg.norm(F):
            violations += 1
    return violations == 0, f"{violations} of {samples} nullspace offsets shorter than the least-norm forces"


def check_qp_oracle(config: Config, samples: int) -> tuple[bool, str]:
    rng = np.random.default_rng(SEED + 3)
    worst = 0.0
    failures = 0
    for _ in range(samples):
        problem = random_qp(rng, int(rng.integers(2, 5)))
        expected = brute_force_qp(problem)
        solution = solve_qp(problem)
        if expected is None or solution.status is not QpStatus.OPTIMAL:
            failures += 1
            continue
        worst = max(worst, float(np.max(np.abs(solution.x - expected[0]))))
    passed = failures == 0 and worst <= 1e-6
    return passed, f"max deviation {worst:.2e} over {samples} problems, {failures} not solved"


def check_care(config: Config) -> tuple[bool, str]:
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    B = np.array([[0.0], [1.0]])
    result = solve_care(A, B, np.eye(2), np.eye(1))
    s3 = np.sqrt(3.0)
    closed_form = np.max(np.abs(result.P - np.array([[s3, 1.0], [1.0, s3]])))

    A18, B18 = augmented_system()
    weights: LqiWeights = config.lqi
    Q, R = weights.Q(), weights.R()
    platform = solve_care(A18, B18, Q, R)
    residual = care_residual(A18, B18, Q, R, platform.P)
    hurwitz = bool(np.max(np.linalg.eigvals(A18 - B18 @ platform.K).real) < 0.0)
    passed = closed_form <= CARE_TOL and residual <= CARE_TOL and hurwitz
    return passed, f"double integrator error {closed_form:.1e}, platform residual {residual:.1e}, Hurwitz {hurwitz}"


def _mix_samples(rng: np.random.Generator, params: PlatformParams) -> tuple[float, float, float, float]:
    T = rng.uniform(0.05, 0.2)
    return T, rng.uniform(-0.5, 0.5) * params.b * T, rng.uniform(-0.3, 0.3) * params.b * T, rng.uniform(-0.3, 0.3) * params.c_tau * T


def check_mixing(config: Config, samples: int) -> tuple[bool, str]:
    params = config.params
    rng = np.random.default_rng(SEED + 4)
    statuses = [FailureStatus(frozenset(s)) for size in (0, 1, 2) for s in itertools.combinations(range(4), size)]
    statuses = [s for s in statuses if s.strategy is not Strategy.QUAD_LOST]
    worst, checked = 0.0, 0
    for k in range(samples):
        T, Mx, My, Mz = _mix_samples(rng, params)
        status = statuses[k % len(statuses)]
        cmd = QuadCommand(T, 0.0, Mx, Mz)
        for mixer in (mix_reduced, mix_fullrank):
            out = mixer(cmd, My, status, params)
            if out.t.saturated:
                continue
            a = out.achieved
            errors = [a.T - T, a.My - My]
            if status.strategy is Strategy.NOMINAL:
                errors += [a.Mx - Mx, a.Mz - Mz]
            elif mixer is mix_fullrank and status.strategy is Strategy.ONE_FAIL:
                errors.append(a.Mx - Mx)
            worst = max(worst, float(np.max(np.abs(errors))))
            checked += 1
    return worst <= 1e-12 and checked > 0, f"max error {worst:.1e} over {checked} unsaturated commands"


def check_disturbance(config: Config, samples: int) -> tuple[bool, str]:
    params = config.params
    rng = np.random.default_rng(SEED + 5)
    b, c_tau = params.b, params.c_tau
    worst = 0.0
    for _ in range(samples):
        T, _, My, _ = _mix_samples(rng, params)
        out = mix_reduced(QuadCommand(T, 0.0), My, FailureStatus(frozenset({0})), params)
        expected = (b * T / 2 + My / 2, -c_tau * (T / 2 + My / (2 * b)))
        worst = max(worst, abs(out.disturbance[0] - expected[0]), abs(out.disturbance[1] - expected[1]))
    return worst <= 1e-12, f"max error {worst:.1e} over {samples} commands"


def check_classification(config: Config) -> tuple[bool, str]:
    wrong = []
    for size in range(5):
        for subset in itertools.combinations(range(4), size):
            failed = frozenset(subset)
            controllable = size <= 1 or (size == 2 and failed not in ({0, 3}, {1, 2}))
            if (classify_failure(failed) is not Strategy.QUAD_LOST) != controllable:
                wrong.append(sorted(failed))
    return not wrong, "all 16 propeller subsets match" if not wrong else f"mismatched: {wrong}"


def _good_thrusts(p: CompensationProblem, Mx_aux: NDArray[np.float64], Mz_aux: NDArray[np.float64]) -> NDArray[np.float64]:
    Minv = mixing_pair(p.b, p.c_tau)[1]
    return np.array([Minv @ np.array([p.T[m], Mx_aux[m], p.My_good[m], Mz_aux[m]]) for m in range(3)])


def check_compensation(config: Config, samples: int) -> tuple[bool, str]:
    params = config.params
    rng = np.random.default_rng(SEED + 6)
    hover_T = params.hover_thrust
    worst_residual, worst_violation = 0.0, 0.0
    for k in range(2 * samples):
        in_headroom = k < samples
        scale = (0.004, 0.0015) if in_headroom else (0.05, 0.02)
        p = CompensationProblem(
            alpha=np.zeros(4),
            bad=int(rng.integers(4)),
            disturbance=(rng.uniform(-scale[0], scale[0]), rng.uniform(-scale[1], scale[1])),
            T=np.full(3, hover_T),
            My_good=np.zeros(3),
            t_max=params.t_max,
            b=params.b,
            c_tau=params.c_tau,
            A=config.compensation.A,
            B=config.compensation.B,
        )
        result = compensate(p)
        t = _good_thrusts(p, result.Mx_aux, result.Mz_aux)
        worst_violation = max(worst_violation, float(np.max(t - params.t_max)), float(np.max(-t)))
        if in_headroom:
            worst_residual = max(worst_residual, float(np.max(np.abs(result.residual))))
    passed = worst_residual <= 1e-6 and worst_violation <= 1e-9
    return passed, f"in-headroom residual {worst_residual:.1e} N*m, worst bound violation {worst_violation:.1e} N"


# --- scenario checks -------------------------------------------------------


def _run(name: str, config: Config) -> ScenarioResult:
    return run_scenario(load_registry()[name], config)


def _verdict(result: ScenarioResult) -> str:
    m = result.metrics
    if m.stable:
        return f"{result.scenario.name} stable"
    return f"{result.scenario.name} diverged at {m.divergence_time:.2f} s"


def check_strategies(config: Config) -> tuple[bool, str]:
    full = _run("strategy-fullrank27", config)
    reduced = _run("strategy-reduced28", config)
    post = reduced.post_failure
    rmse = post.rmse_att if post is not None else float("inf")
    slowest = max(full.runtime, reduced.runtime)
    passed = not full.metrics.stable and reduced.metrics.stable and rmse < 0.1 and slowest < 30.0
    return passed, f"{_verdict(full)}; {_verdict(reduced)}, post-failure attitude RMSE {rmse:.3f} rad; slowest run {slowest:.1f} s"


def check_saturation(config: Config) -> tuple[bool, str]:
    fd = _run("saturation-fd", config)
    nullspace = _run("saturation-nullspace", config)
    t_max = config.params.t_max
    peak = float(np.max(nullspace.trace.stack("T"))) if len(nullspace.trace) else float("inf")
    passed = not fd.metrics.stable and nullspace.metrics.stable and peak <= 4 * t_max + 1e-6
    return passed, f"{_verdict(fd)}; {_verdict(nullspace)}, peak T {peak:.3f} N (limit {4 * t_max:.3f} N)"


def _contrast(prefix: str, config: Config) -> tuple[bool, str]:
    nl = _run(f"{prefix}-nl", config)
    ftc = _run(f"{prefix}-ftc", config)
    return (not nl.metrics.stable and ftc.metrics.stable), f"{_verdict(nl)}; {_verdict(ftc)}"


def check_case1(config: Config) -> tuple[bool, str]:
    nl = _run("case1-nl", config)
    ftc = _run("case1-ftc", config)
    nl_rmse = nl.post_failure.rmse_att if nl.post_failure is not None else float("inf")
    ftc_rmse = ftc.post_failure.rmse_att if ftc.post_failure is not None else float("inf")
    passed = nl.metrics.stable and ftc.metrics.stable and ftc_rmse < nl_rmse
    return passed, f"{_verdict(nl)}; {_verdict(ftc)}; post-failure attitude RMSE {nl_rmse:.4f} vs {ftc_rmse:.4f} rad"


def check_determinism(config: Config, name: str = "hover-nominal") -> tuple[bool, str]:
    scenario = load_registry()[name]
    with tempfile.TemporaryDirectory() as tmp:
        first = write_trace_csv(run_scenario(scenario, config).trace, Path(tmp) / "first.csv").read_bytes()
        second = write_trace_csv(run_scenario(scenario, config).trace, Path(tmp) / "second.csv").read_bytes()
    return first == second, f"{name}: {len(first)} bytes, identical {first == second}"


def run_checks(config: Config, quick: bool = False) -> list[CheckResult]:
    """
    Run the acceptance checks in order.

    Args:
        config (Config): Configuration the checks run against.
        quick (bool): Fewer random samples and no closed-loop scenario runs
            except the determinism check.

    Returns:
        list[CheckResult]: One result per check.
    """

    def n(full: int, fast: int) -> int:
        return fast if quick else full

    checks: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
        ("Allocation exactness", lambda: check_allocation_exactness(config, n(10_000, 500))),
        ("Jacobian vs central differences", lambda: check_jacobian(config, n(1_000, 200))),
        ("Least-norm force decomposition", lambda: check_least_norm(config, n(1_000, 200))),
        ("QP solver vs brute force", lambda: check_qp_oracle(config, n(200, 50))),
        ("Riccati solver", lambda: check_care(config)),
        ("Mixing round trips", lambda: check_mixing(config, n(10_000, 1_000))),
        ("Single-failure disturbance", lambda: check_disturbance(config, n(10_000, 1_000))),
        ("Failure classification", lambda: check_classification(config)),
        ("Compensation QP", lambda: check_compensation(config, n(100, 20))),
    ]
    if not quick:
        checks += [
            ("Low-level strategies after a prop failure", lambda: check_strategies(config)),
            ("Thrust saturation, FD vs nullspace", lambda: check_saturation(config)),
            ("case2: saturated single failure", lambda: _contrast("case2", config)),
            ("case3: two propellers lost", lambda: _contrast("case3", config)),
            ("case1: unsaturated single failure", lambda: check_case1(config)),
        ]
    checks.append(("Deterministic traces", lambda: check_determinism(config)))

    numbers = list(range(1, 10)) + ([10, 11, 12, 13, 14] if not quick else []) + [15]
    results = []
    for number, (name, check) in zip(numbers, checks):
        logger.info("Check %d: %s", number, name)
        results.append(_timed(number, name, check))
    return results
