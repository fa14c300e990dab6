"""
Command-line front end.

Usage:
    crnapprox analyze models/metabolism.json --m 0
    crnapprox simulate bistable --method em --x0 2 0.5 --volume 100 --tmax 20 --seed 1
    crnapprox simulate metabolism --method coupled --x0 1.1 1.1 --volume 600 --tmax 2 \\
        --Delta 0.25 --upper-bounds 2 2 --out coupled.csv
    crnapprox experiment bistable-basins replications=1000 --out-dir results/basins

Exit codes:
    0: Success
    1: Usage error (bad arguments, unknown experiment or parameter)
    2: Model error
    3: Runtime error
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from pydantic import ValidationError

from . import __version__
from .config import BoundaryPolicy, SimConfig, parse_override
from .continuum import simulate_em, solve_ode
from .coupled import simulate_coupled, write_coupled_csv
from .errors import ConfigurationError, CrnApproxError, ModelError
from .experiments import ExperimentName, ExperimentSpec, run_experiment
from .models import parse_model
from .ssa import simulate_ssa
from .structure import deficiency, format_report
from .trajectory import write_csv

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MODEL = 2
EXIT_RUNTIME = 3

SIMULATORS = {"ssa": simulate_ssa, "ode": solve_ode, "em": simulate_em}


class UsageError(Exception):
    """Raised for invalid command-line input; maps to exit code 1."""


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="crnapprox",
        description="Stochastic reaction networks: SSA, ODE, diffusion and KMT-coupled simulation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s analyze metabolism --m 3
  %(prog)s simulate bistable --method ssa --x0 2 0.5 --volume 100 --tmax 20
  %(prog)s experiment kmt-demo --out-dir results/kmt
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable verbose logging (DEBUG level)")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    analyze = commands.add_parser("analyze", help="Deficiency report of a model")
    analyze.add_argument("model", help="Model JSON file or bundled model name (metabolism, bistable)")
    analyze.add_argument("--m", type=int, help="Template parameter m of the model")
    analyze.add_argument(
        "--format", choices=["text", "json", "both"], default="both", help="Report format (default: both)"
    )

    simulate = commands.add_parser("simulate", help="Simulate one trajectory and write it as CSV")
    simulate.add_argument("model", help="Model JSON file or bundled model name")
    simulate.add_argument("--method", choices=[*SIMULATORS, "coupled"], required=True)
    simulate.add_argument("--x0", type=float, nargs="+", required=True, help="Initial concentrations")
    simulate.add_argument("--volume", "-V", type=float, required=True, help="System size V")
    simulate.add_argument("--tmax", type=float, required=True, help="Final time T")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--delta", type=float, default=1e-3, help="ODE / Euler-Maruyama step (default: 1e-3)")
    simulate.add_argument("--Delta", dest="kmt_step", type=float, default=1e-4, help="KMT noise grid step")
    simulate.add_argument("--boundary", choices=[p.value for p in BoundaryPolicy], default="clamp")
    simulate.add_argument("--upper-bounds", type=float, nargs="+", help="Domain upper corner for coupled runs")
    simulate.add_argument("--m", type=int, help="Template parameter m of the model")
    simulate.add_argument("--out", type=str, help="Output CSV (default: stdout)")

    experiment = commands.add_parser("experiment", help="Run a bundled experiment")
    experiment.add_argument("name", help=f"One of: {', '.join(e.value for e in ExperimentName)}")
    experiment.add_argument("overrides", nargs="*", metavar="key=value", help="Parameter overrides")
    experiment.add_argument("--out-dir", type=str, default="results", help="Output directory (default: results)")
    experiment.add_argument("--workers", type=int, default=1, help="Worker processes for replications")
    experiment.add_argument("--config", type=str, help="Experiment defaults YAML (default: config/experiments.yml)")
    return parser


def _parameters(args: argparse.Namespace) -> dict[str, int] | None:
    if args.m is None:
        return None
    if args.m < 0:
        raise UsageError(f"--m must be a non-negative integer, got {args.m}")
    return {"m": args.m}


def cmd_analyze(args: argparse.Namespace) -> int:
    network = parse_model(args.model, _parameters(args))
    report = deficiency(network)
    if args.format in ("text", "both"):
        print(format_report(network, report))
    if args.format in ("json", "both"):
        print(json.dumps({"model": network.describe(), **report.to_dict()}))
    return EXIT_OK


def _sim_config(args: argparse.Namespace) -> SimConfig:
    try:
        return SimConfig(
            volume=args.volume,
            x0=tuple(args.x0),
            horizon=args.tmax,
            seed=args.seed,
            em_step=args.delta,
            kmt_step=args.kmt_step,
            boundary_policy=args.boundary,
            domain_upper_bounds=tuple(args.upper_bounds) if args.upper_bounds else None,
        )
    except ValidationError as e:
        raise UsageError(f"invalid simulation settings: {e}") from e


def cmd_simulate(args: argparse.Namespace) -> int:
    network = parse_model(args.model, _parameters(args))
    config = _sim_config(args)
    if len(config.x0) != network.n_species:
        raise UsageError(f"--x0 needs {network.n_species} values ({', '.join(network.species)}), got {len(config.x0)}")
    LOGGER.info("Simulating %s with %s (V=%g, T=%g, seed=%d)", network.describe(), args.method, config.volume, config.horizon, config.seed)

    target = Path(args.out) if args.out else sys.stdout
    if args.method == "coupled":
        run = simulate_coupled(network, config)
        LOGGER.info("sup distance between CTMC and diffusion: %.6g", run.sup_distance)
        write_coupled_csv(run, target)
    else:
        trajectory = SIMULATORS[args.method](network, config)
        LOGGER.info("%d points up to t=%g", len(trajectory), trajectory.final_time)
        write_csv(trajectory, target)
    if args.out:
        LOGGER.info("Wrote %s", args.out)
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    try:
        name = ExperimentName(args.name)
    except ValueError:
        raise UsageError(
            f"unknown experiment {args.name!r}; choose from {', '.join(e.value for e in ExperimentName)}"
        ) from None
    try:
        overrides = dict(parse_override(token) for token in args.overrides)
    except ValueError as e:
        raise UsageError(str(e)) from e
    if args.workers < 1:
        raise UsageError(f"--workers must be positive, got {args.workers}")

    spec = ExperimentSpec(name=name, overrides=overrides, output_dir=Path(args.out_dir))
    result = run_experiment(spec, defaults_path=args.config, workers=args.workers)
    for path in result.files:
        LOGGER.debug("  %s", path)
    LOGGER.info("✓ %s: %d files in %s (%.1f s)", name.value, len(result.files), spec.output_dir, result.elapsed)
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "experiment": cmd_experiment}


def main(argv: Sequence[str] | None = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler(sys.stderr)],
    )

    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigurationError) as e:
        LOGGER.error("Usage error: %s", e)
        return EXIT_USAGE
    except ModelError as e:
        LOGGER.error("Model error: %s", e)
        return EXIT_MODEL
    except (CrnApproxError, FileNotFoundError) as e:
        LOGGER.error("Error: %s", e, exc_info=args.verbose)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        LOGGER.info("Interrupted by user")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
