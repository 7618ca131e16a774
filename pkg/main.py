"""
Command-line entry point of the hinged-quadcopter flight-control simulator.

    python main.py list
    python main.py run --scenario strategy-reduced28 --out results/
    python main.py run --scenario all --out results/ --jobs 4
    python main.py verify [--quick]

Exit code 0 means every requested run completed, whatever its stability
verdict; 2 is a configuration error and 1 an internal error.
"""
import argparse
import logging
import sys
from dataclasses import replace
from typing import Any, Sequence

import tabulate
import termcolor

from acceptance import run_checks
from classes.check_result import CheckResult
from classes.scenario import Scenario
from config import ConfigError, apply_overrides, load_config
from harness import ScenarioResult, load_registry, resolve_scenario, run_many, write_result
from logs import setup_logging
from numerics import RiccatiError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2


def print_registry(scenarios: list[Scenario]) -> None:
    """
    Print the scenario registry.

    Args:
        scenarios (list[Scenario]): Scenarios to list.

    Returns:
        None
    """
    print(
        tabulate.tabulate(
            [
                {
                    "Scenario": s.name,
                    "Trajectory": s.trajectory.type.value,
                    "Allocation": s.variant.allocation.value,
                    "LowLevel": s.variant.lowlevel.value,
                    "Compensation": "on" if s.variant.compensation else "off",
                    "Failures": ", ".join(f"Q{e.quad}{sorted(e.propellers)}@{e.time:g}s" for e in s.failures) or "-",
                    "Duration": f"{s.duration:g} s",
                }
                for s in scenarios
            ],
            headers="keys",
            tablefmt="fancy_grid",
        )
    )


def _verdict(stable: bool) -> str:
    return termcolor.colored("stable", "green") if stable else termcolor.colored("diverged", "red")


def print_results(results: list[ScenarioResult]) -> None:
    table_data: list[dict[str, Any]] = []
    for result in results:
        m = result.metrics
        post = result.post_failure
        row = {
            "Scenario": result.scenario.name,
            "Variant": result.scenario.variant.label,
            "Verdict": _verdict(m.stable),
            "t_div": "-" if m.divergence_time is None else f"{m.divergence_time:.2f}",
            "RMSE pos": f"{m.rmse_pos:.4f}",
            "RMSE att": f"{m.rmse_att:.4f}",
            "Max pos": f"{m.max_pos_err:.4f}",
            "Post-failure att": "-" if post is None else f"{post.rmse_att:.4f}",
            "Saturated": f"{100 * m.saturation_fraction:.1f}%",
            "Runtime": f"{result.runtime:.1f} s",
        }
        # Flag runs that contradict what the scenario is meant to show.
        if result.scenario.expect_stable is not None and result.scenario.expect_stable != m.stable:
            row["Scenario"] = termcolor.colored(row["Scenario"], "yellow")
        table_data.append(row)
    print(tabulate.tabulate(table_data, headers="keys", tablefmt="fancy_grid"))


def print_checks(results: list[CheckResult]) -> None:
    print(
        tabulate.tabulate(
            [
                {
                    "#": r.number,
                    "Check": r.name,
                    "Result": termcolor.colored("PASS", "green") if r.passed else termcolor.colored("FAIL", "red"),
                    "Detail": r.detail,
                    "Time": f"{r.runtime:.1f} s",
                }
                for r in results
            ],
            headers="keys",
            tablefmt="fancy_grid",
        )
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Fault-tolerant control of a UAV built from four hinged quadcopters.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("--config", default=None, help="configuration file (default: config.json)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write its trace and metrics")
    run.add_argument("--scenario", required=True, help="registry name, 'all', or a JSON scenario file")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                     help="configuration override, e.g. t_max=0.2 or sim.noise_rate=0 (repeatable)")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for several scenarios")

    sub.add_parser("list", help="list the scenario registry")

    verify = sub.add_parser("verify", help="run the acceptance checks")
    verify.add_argument("--quick", action="store_true", help="fewer samples and no closed-loop scenario checks")
    return parser


def command_run(args: argparse.Namespace) -> int:
    config = apply_overrides(load_config(args.config), args.param)
    scenarios = resolve_scenario(args.scenario, load_registry())
    if args.seed is not None:
        scenarios = [replace(s, seed=args.seed) for s in scenarios]
    results = run_many(scenarios, config, jobs=args.jobs, progress=True)
    for result in results:
        csv_path, json_path = write_result(result, args.out)
        logger.info("Wrote %s and %s", csv_path, json_path)
    print_results(results)
    return EXIT_OK


def command_verify(args: argparse.Namespace) -> int:
    results = run_checks(load_config(args.config), quick=args.quick)
    print_checks(results)
    failed = [r for r in results if not r.passed]
    if failed:
        print(termcolor.colored(f"{len(failed)} of {len(results)} checks failed", "red"))
    else:
        print(termcolor.colored(f"All {len(results)} checks passed", "green"))
    return EXIT_OK if not failed else EXIT_INTERNAL


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        if args.command == "list":
            print_registry(list(load_registry().values()))
            return EXIT_OK
        if args.command == "run":
            return command_run(args)
        return command_verify(args)
    except (ConfigError, RiccatiError) as e:
        print(termcolor.colored(f"Configuration error: {e}", "red"), file=sys.stderr)
        return EXIT_CONFIG
    except Exception:
        logger.exception("Internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
