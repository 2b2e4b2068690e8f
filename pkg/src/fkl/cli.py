"""Command-line entry point.

    fkl run <config>             fit one split and write its artifacts
    fkl splits <config> --n 10   repeat over splits and aggregate
    fkl plotdata <run-dir>       rewrite plot documents from a checkpoint
    fkl validate <config>        check a config without computing anything

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 IO error.
``FKL_OUTPUT_ROOT`` overrides the output directory named in the config.
"""

import argparse
import json
import logging
import sys

from . import config as config_mod
from . import experiment
from .errors import (
    ConfigError,
    DegenerateInputs,
    DegenerateVariance,
    EmptySplit,
    NonFiniteGradient,
    NonFiniteLatent,
    NonTerminating,
    NotPositiveDefinite,
    ParseError,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

_NUMERICAL = (NotPositiveDefinite, NonFiniteLatent, NonTerminating, NonFiniteGradient,
              DegenerateInputs, DegenerateVariance, FloatingPointError)


def _parser():
    p = argparse.ArgumentParser(prog="fkl", description="Functional kernel learning experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="fit one split and write artifacts")
    r.add_argument("config")
    r.add_argument("--split", type=int, default=0, help="split index (seed offset)")
    s = sub.add_parser("splits", help="repeat over splits and aggregate")
    s.add_argument("config")
    s.add_argument("--n", type=int, default=10)
    d = sub.add_parser("plotdata", help="rewrite plot documents from a run directory")
    d.add_argument("run_dir")
    v = sub.add_parser("validate", help="validate a config")
    v.add_argument("config")
    sub.add_parser("schema", help="print the config JSON schema")
    return p


def _dispatch(args):
    if args.verb == "schema":
        print(config_mod.schema_json())
        return
    if args.verb == "plotdata":
        for path in experiment.emit_plot_data(args.run_dir).values():
            print(path)
        return
    cfg = config_mod.load(args.config)
    if args.verb == "validate":
        print(f"{args.config}: ok")
    elif args.verb == "run":
        run_dir, result = experiment.run_experiment(cfg, args.split)
        print(run_dir)
        print(json.dumps(result["metrics"]["fkl"], sort_keys=True))
    elif args.verb == "splits":
        summary = experiment.run_splits(cfg, args.n)
        for model, agg in summary["aggregate"].items():
            rmse = agg["rmse"]
            print(f"{model}\trmse {rmse['mean']:.4f} +/- {rmse['std']:.4f}")


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _dispatch(args)
    except (ConfigError, EmptySplit) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except _NUMERICAL as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
