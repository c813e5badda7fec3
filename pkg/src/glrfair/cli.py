"""Command line entry point: ``glrfair {iid,covariate-shift,validate-config}``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure (diverged
training, undefined metric), 4 input/output failure, 1 anything else.
"""
import argparse
import json
import logging
import sys

from .config import load_config
from .exceptions import ConfigError, DataError, ExperimentError, NumericalError, \
    UndefinedMetricError
from .experiment import run_covariate_shift_experiment, run_iid_experiment
from .report import ReportIOError, emit_report

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4

log = logging.getLogger("glrfair")


def _parser():
    parser = argparse.ArgumentParser(prog="glrfair", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("iid", "stratified k-fold comparison of LR / IFDA / IFRT"),
                        ("covariate-shift", "source/target split with per-epoch traces"),
                        ("validate-config", "parse and check a config without running")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="YAML or JSON config (a run manifest also works)")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config field, e.g. train.alpha=5")
        p.add_argument("--seed", type=int, help="shortcut for --set seed=N")
        p.add_argument("--output-dir", help="shortcut for --set output_dir=PATH")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _classify(exc):
    cause = getattr(exc, "cause", None) or exc
    if isinstance(cause, ConfigError):
        return EXIT_CONFIG
    if isinstance(cause, (NumericalError, UndefinedMetricError)):
        return EXIT_NUMERIC
    if isinstance(cause, (ReportIOError, OSError)):
        return EXIT_IO
    if isinstance(cause, DataError):
        return EXIT_CONFIG
    return EXIT_OTHER


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.output_dir is not None:
        overrides.append(f"output_dir={args.output_dir}")
    try:
        config = load_config(args.config, overrides)
    except (ConfigError, DataError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    expected = {"iid": "iid_cv", "covariate-shift": "covariate_shift"}.get(args.command)
    if expected and config.kind != expected:
        print(f"config error: kind is {config.kind!r} but command {args.command!r} "
              f"runs {expected!r}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate-config":
        print(json.dumps(config.to_dict(), indent=2, sort_keys=True))
        return EXIT_OK

    runner = run_iid_experiment if config.kind == "iid_cv" else run_covariate_shift_experiment
    try:
        report = runner(config)
        paths = emit_report(report, config.output_dir)
    except ExperimentError as exc:
        print(json.dumps(exc.diagnostic(), sort_keys=True), file=sys.stderr)
        return _classify(exc)
    except (ReportIOError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, UndefinedMetricError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DataError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for w in report.warnings:
        log.warning(w)
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
