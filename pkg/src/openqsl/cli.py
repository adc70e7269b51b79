"""Command-line entry point: ``openqsl run | preset | sweep``.

Exit status: 0 success, 1 bound-chain violation, 2 usage error, 3-7 scenario
validation failures (see ``ScenarioError.codes``), 8 integration or point
evaluation failure, 9 I/O error.
"""
import argparse
import json
import logging
import sys

from . import __version__
from .bounds import PointEvaluationError
from .errors import IntegrationError, OpenQSLError
from .runner import run_and_emit, summary_path_for, sweep
from .scenario import PRESETS, ScenarioError, dumps, load_scenario

EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_NUMERICS = 8
EXIT_IO = 9


def _dims(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser():
    p = argparse.ArgumentParser(
        prog="openqsl",
        description="Entropy-based quantum speed limits along GKSL trajectories.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="integrate a scenario and write bounds per sampled time")
    run.add_argument("--config", required=True, help="scenario JSON file")
    run.add_argument("--out", default="bounds.csv", help="CSV output (default: bounds.csv)")
    run.add_argument(
        "--stride", type=_positive, default=None,
        help="keep every N-th integration step (default: the scenario's, usually 10; 1 = all)",
    )
    run.add_argument("--summary", default=None, help="summary JSON (default: <out>.summary.json)")

    preset = sub.add_parser("preset", help="emit a built-in scenario file")
    preset.add_argument("name", choices=sorted(PRESETS))
    preset.add_argument("--out", default=None, help="write here instead of stdout")

    sw = sub.add_parser("sweep", help="bound tightness over seeded random models")
    sw.add_argument("--dims", type=_dims, default=[2], help="comma-separated dims in 2..6")
    sw.add_argument("--count", type=_positive, default=100)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--out", required=True, help="per-model CSV output")
    sw.add_argument("--jobs", type=_positive, default=1, help="worker processes")
    sw.add_argument("--summary", default=None, help="summary JSON (default: <out>.summary.json)")
    return p


def _cmd_run(args):
    scenario = load_scenario(args.config)
    summary = run_and_emit(scenario, args.out, args.stride, args.summary)
    print(
        f"{summary['rows']} rows -> {args.out}; violations: {summary['violations']}; "
        f"{summary['runtime_s']:.2f} s"
    )
    return EXIT_VIOLATION if summary["violations"] else 0


def _cmd_preset(args):
    text = dumps(PRESETS[args.name]())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_sweep(args):
    if any(d < 2 or d > 6 for d in args.dims):
        print(f"openqsl: error: --dims must lie in 2..6, got {args.dims}", file=sys.stderr)
        return EXIT_USAGE
    summary, _ = sweep(args.dims, args.count, args.seed, args.out, args.jobs,
                       summary_path=args.summary)
    print(json.dumps({k: summary[k] for k in ("models", "violations", "failed_models",
                                             "median_tightness")}, sort_keys=True))
    if summary["failed_models"]:
        return EXIT_NUMERICS
    return EXIT_VIOLATION if summary["violations"] else 0


COMMANDS = {"run": _cmd_run, "preset": _cmd_preset, "sweep": _cmd_sweep}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"openqsl: {exc}", file=sys.stderr)
        return exc.exit_status
    except (IntegrationError, PointEvaluationError) as exc:
        print(f"openqsl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except OpenQSLError as exc:
        print(f"openqsl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except OSError as exc:
        print(f"openqsl: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
