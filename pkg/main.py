#!/usr/bin/env python3
"""
Cell-Free Uplink Simulator - Main Entry Point

Usage:
    python main.py                                   # Defaults, all schemes and CSI modes
    python main.py --config run.yaml --set Q=15      # Config file plus overrides
    python main.py --sweep tau_p --values 5,10,20    # Ad-hoc sweep
    python main.py --figure fig2 --scale desk        # Figure preset + manifest
    python main.py --figure fig5 --scale full --force
"""

import argparse
import sys
import traceback

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

from rich.table import Table  # noqa: E402

from src.config import figure_overrides, load_config_file  # noqa: E402
from src.console import get_console, log  # noqa: E402
from src.engine import SweepResult, run_sweep  # noqa: E402
from src.errors import ConfigurationError, SimulatorError  # noqa: E402
from src.figures import FIGURES, SCALES, reproduce_figure  # noqa: E402
from src.results import build_metadata, emit_results, preflight_output_dir  # noqa: E402


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Cell-Free Uplink Simulator")
    parser.add_argument("--config", help="YAML run configuration")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a config key (repeatable), e.g. Q=15 or system.pilot_dim=10",
    )
    parser.add_argument("--output-dir", help="Directory for result files")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--sweep", help="Sweep axis: tau_p, Q, delta or K")
    parser.add_argument("--values", help="Comma-separated sweep values, e.g. 5,10,20 or pi/16,pi/8")
    parser.add_argument("--scheme", action="append", help="Receiver scheme (repeatable), e.g. LMMSE+Optimal")
    parser.add_argument("--csi", action="append", help="CSI mode (repeatable): IDEAL, PM, SP")
    parser.add_argument("--figure", choices=FIGURES, help="Reproduce a figure preset")
    parser.add_argument("--scale", choices=SCALES, default="desk", help="Preset scale")
    parser.add_argument("--force", action="store_true", help="Run full scale even over the runtime budget")
    parser.add_argument("--jobs", type=int, help="Parallel layout workers")
    return parser


def cli_overrides(args) -> list:
    """Translate dedicated flags into key=value overrides, applied after --set"""
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"master_seed={args.seed}")
    if args.output_dir:
        overrides.append(f"output_dir={args.output_dir}")
    if args.jobs is not None:
        overrides.append(f"n_jobs={args.jobs}")
    if args.scheme:
        overrides.append(f"schemes=[{', '.join(args.scheme)}]")
    if args.csi:
        overrides.append(f"csi_modes=[{', '.join(args.csi)}]")
    if args.sweep:
        if not args.values:
            raise ConfigurationError("sweep.values", "--sweep needs --values")
        overrides.append(f"sweep.axis={args.sweep}")
        overrides.append(f"sweep.values=[{args.values}]")
    return overrides


def print_summary(sweep: SweepResult, title: str) -> None:
    table = Table(title=title)
    table.add_column(sweep.axis)
    table.add_column("Scheme")
    table.add_column("CSI")
    table.add_column("Mean sum SE", justify="right")
    table.add_column("Outage", justify="right")
    for point in sweep.points:
        label = "-" if point.value is None else f"{point.value:g}"
        for scheme, mode in sweep.pairs:
            table.add_row(
                label,
                scheme,
                mode,
                f"{point.mean_sum_se(scheme, mode):.3f}",
                str(point.outage_count(scheme, mode)),
            )
    get_console().print(table)


def run_config(args) -> int:
    config = load_config_file(args.config, cli_overrides(args))
    log("Main", "Configuration OK")
    preflight_output_dir(config.output_dir)

    sweep = config.sweep
    result = run_sweep(
        config.system,
        sweep.axis if sweep else None,
        sweep.values if sweep else None,
        config.schemes,
        config.csi_modes,
        n_jobs=config.n_jobs,
    )
    metadata = build_metadata(config.model_dump(mode="json"), config.system)
    files = emit_results(result, metadata, config.formats, config.output_dir)
    for path in files:
        log("Main", f"wrote {path}")
    print_summary(result, "Mean sum SE (bit/s/Hz)")
    return 0


def run_figure(args) -> int:
    overrides = figure_overrides(args.config, args.overrides)
    report = reproduce_figure(
        args.figure,
        scale=args.scale,
        output_dir=args.output_dir,
        force=args.force,
        seed=args.seed,
        n_jobs=args.jobs or 1,
        overrides=overrides,
    )
    for run_name, sweep in report.runs.items():
        print_summary(sweep, f"{args.figure} / {run_name}")
    passed = sum(c["passed"] for c in report.claims)
    log("Main", f"{passed}/{len(report.claims)} claims passed; manifest written")
    return 0


def main() -> int:
    console = get_console()
    console.print("=" * 60)
    console.print("Cell-Free Uplink Simulator Starting...")
    console.print("=" * 60)

    args = build_parser().parse_args()
    log("Main", f"Mode: {'figure ' + args.figure if args.figure else 'sweep' if args.sweep else 'run'}")

    try:
        if args.figure:
            return run_figure(args)
        return run_config(args)
    except SimulatorError as e:
        log("Main", f"FATAL ERROR: {e}")
        return 1
    except Exception as e:
        log("Main", f"FATAL ERROR: {e}")
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
