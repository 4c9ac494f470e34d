"""Command line front end.

Every experiment subcommand reads one JSON config; --seed, --out, and
--threads override the corresponding config fields after a full
re-validation.  Exit code 0 means success, 2 a validation problem, and
3 a refused compute budget.
"""

from __future__ import annotations

import argparse
import json
import sys

from ._util import BudgetError, ValidationError
from . import experiments


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH",
                        help="JSON experiment description")
    parser.add_argument("--seed", type=int, metavar="U64",
                        help="override the master seed")
    parser.add_argument("--out", metavar="DIR",
                        help="override the output directory")
    parser.add_argument("--threads", type=int, metavar="K",
                        help="worker threads for trial loops")


_HELP = {
    "edge-sim": "sample edge observables for one ensemble",
    "sweep": "edge statistics over a bandwidth (and spike) grid",
    "compare": "mixed moments and hypothesis checks for two profiles",
    "lclt": "n-step kernel against its periodized stable limit",
    "diagram": "evaluate a ribbon diagram, exactly or in a scaling limit",
    "wegner": "block-walk kernel against the periodic Skellam law",
    "hankel": "step a reflected chain in frequency space",
    "profile": "export a transition kernel table",
    "special": "tabulate a closed-form reference function",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="markovband",
        description="numerical laboratory for banded random-matrix ensembles "
                    "with Markov variance profiles",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for kind in experiments.CONFIG_KINDS:
        sub = subparsers.add_parser(kind, help=_HELP[kind])
        _add_common(sub)
    emit = subparsers.add_parser("emit", help="derive plot tables from an artifact")
    emit.add_argument("--artifact", required=True, metavar="PATH",
                      help="edge sample CSV or sweep summary CSV")
    emit.add_argument("--kind", required=True, choices=experiments.EMIT_KINDS)
    emit.add_argument("--out", metavar="DIR",
                      help="directory for the derived table")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "emit":
            print(experiments.emit_plot_data(args.artifact, args.kind,
                                             out_dir=args.out))
            return 0
        if not args.config:
            raise ValidationError(f"{args.command} needs --config PATH")
        config = experiments.load_config(args.config)
        if config.kind != args.command:
            raise ValidationError(
                f"config kind {config.kind!r} does not match the "
                f"{args.command!r} subcommand"
            )
        obj = config.to_jsonable()
        if args.seed is not None:
            obj["seed"] = args.seed
        if args.out is not None:
            obj["out"] = args.out
        if args.threads is not None:
            obj["threads"] = args.threads
        config = experiments.parse_config(obj)
        result = experiments.run_experiment(config)
        print(json.dumps(result, sort_keys=True))
        return 0
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
