"""
Scenario runner: reference trajectories, the multi-rate control loop around
the simulated plant, failure injection, metrics and trace files.
"""
import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.transform import Rotation
from tqdm import tqdm

from allocation import Allocator
from classes.allocation_limits import AllocationLimits, ThrustLimitsOutcome
from classes.allocation_solution import AllocationSolution
from classes.compensation_problem import CompensationProblem, CompensationResult
from classes.failure_status import Strategy
from classes.low_level_state import LowLevelState
from classes.metrics import Metrics
from classes.platform_state import PlatformState
from classes.propeller_thrusts import PropellerThrusts
from classes.qp_problem import QpStatus
from classes.quad_command import QuadCommand
from classes.reference import Reference
from classes.scenario import AllocationMethod, LowLevelVariant, Scenario, TrajectorySpec, TrajectoryType
from classes.trace import Trace, TraceSample
from classes.wrench_command import WrenchCommand
from config import SCENARIOS_PATH, Config, ConfigError, apply_overrides, with_seed
from controller import LowLevelOutput, LqiController, hinge_pid, lowlevel_step, lowlevel_step_fullrank_variant
from ftc import adjust_thrust_limits, compensate
from model import euler_accel_to_body, euler_rates_to_body
from simulator import DelayLine, SimulationDiverged, apply_failures, plant_step, sense

logger = logging.getLogger(__name__)

TRACE_COLUMNS = (
    ["t", "x", "y", "z", "phi", "theta", "psi", "xd", "yd", "zd"]
    + [f"alpha{i}" for i in range(4)]
    + [f"T{i}" for i in range(4)]
    + [f"t{i}{j}" for i in range(4) for j in range(4)]
    + ["Mx_dist", "Mz_dist"]
    + [f"Mx_aux{m}" for m in range(3)]
    + [f"Mz_aux{m}" for m in range(3)]
    + ["sat_flags"]
    + [f"u_d{k}" for k in range(6)]
)


# --- trajectories ----------------------------------------------------------


def smooth_ramp(t: float, start: float, duration: float) -> tuple[float, float, float]:
    """
    0 -> 1 ramp whose velocity is a raised cosine, with its first and second
    time derivatives. Velocity and acceleration vanish at both ends.
    """
    tau = (t - start) / duration
    if tau <= 0.0:
        return 0.0, 0.0, 0.0
    if tau >= 1.0:
        return 1.0, 0.0, 0.0
    w = 2 * math.pi
    s = tau - math.sin(w * tau) / w
    ds = (1 - math.cos(w * tau)) / duration
    dds = w * math.sin(w * tau) / duration**2
    return s, ds, dds


def periodic_swing(t: float, start: float, period: float) -> tuple[float, float, float]:
    """
    sin^4 swing between 0 and 1, one peak per period, with its first and
    second time derivatives. Value and derivatives up to the third vanish
    at ``start``, so the reference leaves hover smoothly.
    """
    if t <= start:
        return 0.0, 0.0, 0.0
    k = math.pi / period
    sn, cs = math.sin(k * (t - start)), math.cos(k * (t - start))
    s = sn**4
    ds = 4 * k * sn**3 * cs
    dds = k**2 * (12 * sn**2 * cs**2 - 4 * sn**4)
    return s, ds, dds


def generate_trajectory(spec: TrajectorySpec, t: float) -> Reference:
    """
    Reference at time t: hover at the origin, then ramp the attitude (and,
    for six-dof, the position) to its targets and hold them, or swing
    between hover and the targets when the trajectory has a period.

    Args:
        spec (TrajectorySpec): Targets and timing.
        t (float): Time in seconds.

    Returns:
        Reference: Position, attitude and their derivatives; rates are body-frame.
    """
    if spec.type is TrajectoryType.HOVER:
        return Reference(t=t)
    if spec.period is not None:
        s, ds, dds = periodic_swing(t, spec.ramp_start, spec.period)
    else:
        s, ds, dds = smooth_ramp(t, spec.ramp_start, spec.ramp_time)
    attitude = np.asarray(spec.attitude)
    eta_r, eta_dot, eta_ddot = attitude * s, attitude * ds, attitude * dds
    ref = Reference(
        t=t,
        eta_r=eta_r,
        nu_r=euler_rates_to_body(eta_r, eta_dot),
        nu_dot_r=euler_accel_to_body(eta_r, eta_dot, eta_ddot),
    )
    if spec.type is TrajectoryType.SIX_DOF:
        position = np.asarray(spec.position)
        ref.xi_r, ref.xi_dot_r, ref.xi_ddot_r = position * s, position * ds, position * dds
    return ref


# --- metrics ---------------------------------------------------------------


def tracking_errors(trace: Trace) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Position error norm and geodesic attitude error for every sample; inf where not finite."""
    if not len(trace):
        return np.zeros(0), np.zeros(0)
    xi, xi_r = trace.stack("xi"), trace.stack("xi_r")
    eta, eta_r = trace.stack("eta"), trace.stack("eta_r")
    finite = np.all(np.isfinite(np.hstack([xi, xi_r, eta, eta_r])), axis=1)
    pos_err = np.full(len(trace), np.inf)
    att_err = np.full(len(trace), np.inf)
    pos_err[finite] = np.linalg.norm(xi[finite] - xi_r[finite], axis=1)
    if np.any(finite):
        relative = Rotation.from_euler("xyz", eta_r[finite]).inv() * Rotation.from_euler("xyz", eta[finite])
        att_err[finite] = relative.magnitude()
    return pos_err, att_err


def compute_metrics(
    trace: Trace,
    t_start: float = 1.0,
    pos_threshold: float = 1.0,
    att_threshold: float = 1.0,
) -> Metrics:
    """
    Summarise a run. RMSE and peak error cover samples after ``t_start``
    (the whole run when none do); divergence is the first sample past
    either threshold, or the simulator's own report.
    """
    if not len(trace):
        raise ValueError("Cannot compute metrics of an empty trace")
    times = trace.times
    pos_err, att_err = tracking_errors(trace)

    crossing = np.flatnonzero((pos_err > pos_threshold) | (att_err > att_threshold))
    divergence_time = float(times[crossing[0]]) if crossing.size else trace.divergence_time
    if crossing.size and trace.divergence_time is not None:
        divergence_time = min(divergence_time, trace.divergence_time)

    window = times > t_start
    if not np.any(window):
        window = np.ones_like(times, dtype=bool)
    window &= np.isfinite(pos_err) & np.isfinite(att_err)
    if np.any(window):
        rmse_pos = float(np.sqrt(np.mean(pos_err[window] ** 2)))
        rmse_att = float(np.sqrt(np.mean(att_err[window] ** 2)))
        max_pos = float(np.max(pos_err[window]))
    else:
        rmse_pos = rmse_att = max_pos = float("inf")

    return Metrics(
        rmse_pos=rmse_pos,
        rmse_att=rmse_att,
        max_pos_err=max_pos,
        stable=divergence_time is None,
        divergence_time=divergence_time,
        saturation_fraction=trace.ll_saturated_ticks / trace.ll_ticks if trace.ll_ticks else 0.0,
        window_start=t_start,
    )


# --- control loop ----------------------------------------------------------


class FlightLoop(object):
    """
    One simulated flight: the plant, the 100 Hz LQI and allocator, the
    command link and the four 500 Hz low-level controllers.
    """

    def __init__(self, scenario: Scenario, config: Config) -> None:
        self.scenario = scenario
        self.config = config
        self.params = config.params
        self.sim = config.sim
        self.variant = scenario.variant

        dt = self.sim.dt_physics
        self.ll_every = int(round(1.0 / (self.params.ll_rate * dt)))
        self.hl_every = int(round(self.params.ll_rate / self.params.hl_rate))
        if self.ll_every < 1 or self.hl_every < 1:
            raise ConfigError("Control rates must not exceed the physics rate")
        self.dt_ll = self.ll_every * dt
        self.dt_hl = self.hl_every * self.dt_ll

        settings = config.allocation
        self.allocator = Allocator(self.params, settings.P, settings.Q, Z_weight=settings.Z_weight)
        self.base_limits = AllocationLimits.default(
            self.params, settings.alpha_limit, settings.d_alpha_max, settings.d_T_max
        )
        self.limits = ThrustLimitsOutcome(self.base_limits)
        self.lqi = LqiController(self.params, config.lqi)
        self.ll = LowLevelState(gains=config.pid)
        self.step = (
            lowlevel_step_fullrank_variant if self.variant.lowlevel is LowLevelVariant.FULL_RANK_27 else lowlevel_step
        )
        self.rng = np.random.default_rng(self.sim.seed)

        self.state = PlatformState.hover(self.params)
        hover = self.allocator.fd_allocate(WrenchCommand([0.0, 0.0, self.params.m_total * self.params.g], np.zeros(3)))
        self.X_prev = hover.X
        self.active_set: list[int] = []
        self.alloc_T = hover.T
        self.u_d = hover.u_achieved
        self.ref = Reference()
        self.commands = tuple(QuadCommand(float(T), float(a)) for T, a in zip(hover.T, hover.alpha))
        self.link: DelayLine[tuple[QuadCommand, ...]] = DelayLine.from_delay(self.sim.comm_delay, dt, self.commands)
        self.delivered = self.commands
        self.props = [PropellerThrusts(self.state.prop_thrust[i]) for i in range(4)]
        self.outputs: list[LowLevelOutput | None] = [None] * 4
        self.compensation: CompensationResult | None = None
        self.sat_flags = 0
        self.qp_not_optimal = 0
        self.compensation_infeasible = 0
        self.pending = list(scenario.failures)
        self.trace = Trace()

    # failures

    def inject_failures(self, t: float) -> None:
        while self.pending and self.pending[0].time <= t + 1e-12:
            event = self.pending.pop(0)
            status = self.ll.failures[event.quad].with_failure(event.propellers)
            self.ll.failures[event.quad] = status
            self.trace.failure_times.append(t)
            logger.warning("t=%.3f s: quadcopter %d now %s", t, event.quad, status)
            self.limits = adjust_thrust_limits(self.ll.failures, self.params, self.base_limits)
            if self.limits.platform_failed:
                self.trace.mark_diverged(t, "platform failed")

    # high level

    def high_level(self, t: float) -> None:
        measured = sense(self.state, self.sim, self.rng)
        self.ref = generate_trajectory(self.scenario.trajectory, t)
        self.u_d = self.lqi.step(measured, self.ref, self.dt_hl)
        if self.variant.allocation is AllocationMethod.NULLSPACE:
            solution = self.allocator.nullspace_allocate(
                self.u_d, self.X_prev, self.limits.limits, warm_start=self.active_set
            )
            self.active_set = solution.active_set
            if solution.qp_status is not QpStatus.OPTIMAL:
                self.qp_not_optimal += 1
                logger.debug("t=%.3f s: allocation QP %s", t, solution.qp_status)
        else:
            solution = self.allocator.fd_allocate(self.u_d, alpha_prev=self.X_prev[:4])
        self.commands = self.quad_commands(solution)
        self.X_prev = np.array([c.alpha_ref for c in self.commands] + [c.T for c in self.commands])
        self.alloc_T = self.X_prev[4:].copy()

    def quad_commands(self, solution: AllocationSolution) -> tuple[QuadCommand, ...]:
        """
        Commands sent down the link. Nullspace inputs are held inside the
        allocation box, since the projection back onto W F = u can leave it
        by a little; force decomposition demands go out as computed.
        """
        alpha = np.array(solution.alpha, dtype=float)
        T = np.maximum(solution.T, 0.0)
        if self.variant.allocation is AllocationMethod.NULLSPACE:
            box = self.limits.limits
            excess = float(np.max(T - box.T_max))
            if excess > 0.0:
                logger.debug("Projected thrust above the limit by %.3g, clipped", excess)
            alpha = np.clip(alpha, box.alpha_min, box.alpha_max)
            T = np.clip(T, box.T_min, box.T_max)
            T_max = box.T_max
        else:
            T_max = np.full(4, np.inf)
        T[list(self.limits.disabled)] = 0.0
        return tuple(QuadCommand(float(T[i]), float(alpha[i]), T_max=float(T_max[i])) for i in range(4))

    # low level

    def low_level(self) -> None:
        failures = self.ll.failures
        commands = list(self.delivered)
        My = [
            hinge_pid(i, commands[i].alpha_ref, self.state.alpha[i], self.state.alpha_dot[i], failures[i], self.ll, self.dt_ll)
            for i in range(4)
        ]

        def step(i: int) -> LowLevelOutput:
            return self.step(
                commands[i], self.state.alpha[i], self.state.alpha_dot[i], failures[i],
                self.ll, self.params, self.dt_ll, quad=i, My=My[i],
            )

        outputs: list[LowLevelOutput | None] = [None] * 4
        bad = [i for i in range(4) if failures[i].is_bad]
        for i in bad:
            outputs[i] = step(i)

        self.compensation = None
        lost = any(f.strategy is Strategy.QUAD_LOST for f in failures)
        if self.variant.compensation and len(bad) == 1 and not lost:
            i = bad[0]
            problem = CompensationProblem(
                alpha=self.state.alpha,
                bad=i,
                disturbance=outputs[i].disturbance,  # type: ignore[union-attr]
                T=np.array([commands[g].T for g in range(4) if g != i]),
                My_good=np.array([My[g] for g in range(4) if g != i]),
                t_max=self.params.t_max,
                b=self.params.b,
                c_tau=self.params.c_tau,
                A=self.config.compensation.A,
                B=self.config.compensation.B,
            )
            self.compensation = compensate(problem)
            if self.compensation.status is not QpStatus.OPTIMAL:
                self.compensation_infeasible += 1
                logger.debug("compensation QP %s", self.compensation.status)
            for m, g in enumerate(problem.good):
                commands[g] = commands[g].with_aux(float(self.compensation.Mx_aux[m]), float(self.compensation.Mz_aux[m]))

        for i in range(4):
            if outputs[i] is None:
                outputs[i] = step(i)
        self.outputs = outputs
        self.props = [apply_failures(out.t, failures[i].failed) for i, out in enumerate(outputs)]  # type: ignore[union-attr]

        saturated = [bool(s) for s in self.ll.saturated]
        self.trace.ll_ticks += 1
        if any(saturated):
            self.trace.ll_saturated_ticks += 1
            self.sat_flags |= sum(1 << i for i, s in enumerate(saturated) if s)

    # recording

    def record(self, t: float) -> TraceSample:
        bad = [i for i in range(4) if self.ll.failures[i].is_bad]
        Mx_dist = Mz_dist = 0.0
        if bad and self.outputs[bad[0]] is not None:
            Mx_dist, Mz_dist = self.outputs[bad[0]].disturbance  # type: ignore[union-attr]
        comp = self.compensation
        sample = TraceSample(
            t=t,
            xi=self.state.xi.copy(),
            eta=self.state.eta,
            xi_r=self.ref.xi_r.copy(),
            eta_r=self.ref.eta_r.copy(),
            alpha=self.state.alpha.copy(),
            T=np.asarray(self.alloc_T, dtype=float).copy(),
            t_prop=np.array([p.t for p in self.props]),
            Mx_dist=float(Mx_dist),
            Mz_dist=float(Mz_dist),
            Mx_aux=comp.Mx_aux.copy() if comp is not None else np.zeros(3),
            Mz_aux=comp.Mz_aux.copy() if comp is not None else np.zeros(3),
            sat_flags=self.sat_flags,
            u_d=self.u_d.as_vector(),
            finite=self.state.is_finite(),
        )
        self.sat_flags = 0
        self.trace.append(sample)
        return sample

    def diverging(self, sample: TraceSample) -> bool:
        if not sample.finite:
            return True
        pos_err = float(np.linalg.norm(sample.xi - sample.xi_r))
        att_err = float((Rotation.from_euler("xyz", sample.eta_r).inv() * Rotation.from_euler("xyz", sample.eta)).magnitude())
        if pos_err > self.sim.pos_threshold or att_err > self.sim.att_threshold:
            self.trace.mark_diverged(sample.t, f"tracking error {pos_err:.3f} m / {att_err:.3f} rad")
            return True
        return False

    def run(self, progress: bool = False) -> Trace:
        dt = self.sim.dt_physics
        n_steps = int(round(self.scenario.duration / dt))
        steps: Iterable[int] = range(n_steps)
        if progress:
            steps = tqdm(steps, desc=self.scenario.name, unit="step", mininterval=0.5, leave=False)
        for k in steps:
            t = k * dt
            self.inject_failures(t)
            if self.trace.diverged and self.sim.stop_on_divergence:
                break
            ll_tick = k % self.ll_every == 0
            hl_tick = ll_tick and (k // self.ll_every) % self.hl_every == 0
            if hl_tick:
                self.high_level(t)
                self.trace.hl_ticks += 1
            self.delivered = self.link.push(self.commands)
            if ll_tick:
                self.low_level()
            if hl_tick and self.diverging(self.record(t)) and self.sim.stop_on_divergence:
                break
            try:
                self.state = plant_step(self.state, self.props, self.params, self.sim)
            except SimulationDiverged as e:
                self.trace.mark_diverged(t + dt, str(e))
                logger.warning("t=%.3f s: %s", t + dt, e)
                break
            self.trace.physics_ticks += 1
        if self.qp_not_optimal or self.compensation_infeasible:
            logger.info(
                "%s: %d allocation QPs not optimal, %d compensation QPs infeasible",
                self.scenario.name, self.qp_not_optimal, self.compensation_infeasible,
            )
        if self.trace.diverged:
            logger.info("%s diverged at t=%.3f s (%s)", self.scenario.name, self.trace.divergence_time, self.trace.divergence_reason)
        return self.trace


@dataclass(eq=False)
class ScenarioResult(object):
    scenario: Scenario
    trace: Trace
    metrics: Metrics
    post_failure: Metrics | None
    runtime: float

    def summary(self) -> dict[str, Any]:
        data: dict[str, Any] = {"scenario": self.scenario.name, "variant": self.scenario.variant.label}
        data.update(self.metrics.to_dict())
        if self.post_failure is not None:
            data["post_failure"] = self.post_failure.to_dict()
        data["runtime_s"] = round(self.runtime, 3)
        return data


def run_scenario(scenario: Scenario, config: Config, progress: bool = False) -> ScenarioResult:
    """
    Run one scenario from hover to its duration (or to divergence).

    Args:
        scenario (Scenario): What to fly.
        config (Config): Base configuration; the scenario's seed and parameter
            overrides are applied on top.
        progress (bool): Show a progress bar.

    Returns:
        ScenarioResult: Trace, metrics over the run and, when a failure was
        injected, metrics from the first failure on.
    """
    config = with_seed(apply_overrides(config, scenario.params), scenario.seed)
    for event in scenario.failures:
        if event.time > scenario.duration:
            raise ConfigError(f"Scenario {scenario.name}: failure at {event.time} s after the end of the run")
    logger.info("Running %s (%s)", scenario.name, scenario.variant.label)
    started = time.perf_counter()
    trace = FlightLoop(scenario, config).run(progress)
    runtime = time.perf_counter() - started

    sim = config.sim
    metrics = compute_metrics(trace, 1.0, sim.pos_threshold, sim.att_threshold)
    failure_time = trace.first_failure_time
    post_failure = None
    if failure_time is not None and trace.times[-1] > failure_time:
        post_failure = compute_metrics(trace, failure_time, sim.pos_threshold, sim.att_threshold)
    return ScenarioResult(scenario, trace, metrics, post_failure, runtime)


def run_many(scenarios: list[Scenario], config: Config, jobs: int = 1, progress: bool = False) -> list[ScenarioResult]:
    """Run scenarios one after the other, or in worker processes when jobs > 1."""
    if jobs <= 1 or len(scenarios) <= 1:
        return [run_scenario(s, config, progress) for s in scenarios]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(run_scenario, s, config) for s in scenarios]
        return [f.result() for f in tqdm(futures, desc="scenarios", disable=not progress)]


# --- files -----------------------------------------------------------------


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def trace_rows(trace: Trace) -> Iterable[list[str]]:
    for s in trace.samples:
        row = [_fmt(s.t)]
        row += [_fmt(v) for v in np.concatenate([s.xi, s.eta, s.xi_r, s.alpha, s.T, s.t_prop.reshape(-1)])]
        row += [_fmt(s.Mx_dist), _fmt(s.Mz_dist)]
        row += [_fmt(v) for v in np.concatenate([s.Mx_aux, s.Mz_aux])]
        row.append(str(int(s.sat_flags)))
        row += [_fmt(v) for v in s.u_d]
        yield row


def write_trace_csv(trace: Trace, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        writer.writerows(trace_rows(trace))
    return path


def write_result(result: ScenarioResult, out_dir: str | Path) -> tuple[Path, Path]:
    """Write ``<name>.csv`` and ``<name>_metrics.json`` into out_dir."""
    out_dir = Path(out_dir)
    csv_path = write_trace_csv(result.trace, out_dir / f"{result.scenario.name}.csv")
    json_path = out_dir / f"{result.scenario.name}_metrics.json"
    summary = result.summary()
    summary.pop("runtime_s")
    with open(json_path, "w") as f:
        json.dump(summary, f, indent=4, sort_keys=True)
        f.write("\n")
    return csv_path, json_path


def load_registry(path: str | Path | None = None) -> dict[str, Scenario]:
    path = Path(path) if path is not None else SCENARIOS_PATH
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"Scenario file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Scenario file {path} is not valid JSON: {e}") from e
    try:
        return {name: Scenario.from_dict(name, entry) for name, entry in data.items()}
    except ValueError as e:
        raise ConfigError(str(e)) from e


def resolve_scenario(name_or_path: str, registry: dict[str, Scenario] | None = None) -> list[Scenario]:
    """
    A registry name, ``all``, or a JSON file holding one scenario (with a
    ``name`` key) or a mapping of scenarios.
    """
    registry = registry if registry is not None else load_registry()
    if name_or_path == "all":
        return list(registry.values())
    if name_or_path in registry:
        return [registry[name_or_path]]
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        with open(path, "r") as f:
            data = json.load(f)
        try:
            if "duration" in data:
                return [Scenario.from_dict(str(data.get("name", path.stem)), {k: v for k, v in data.items() if k != "name"})]
            return [Scenario.from_dict(name, entry) for name, entry in data.items()]
        except ValueError as e:
            raise ConfigError(str(e)) from e
    raise ConfigError(f"Unknown scenario {name_or_path!r}; see `list`")
