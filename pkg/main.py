"""
Command-line entry point.

Exit codes: 0 success, 2 configuration or dataset error, 3 training failure.
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

import experiments
import settings
from encoding import EncodingFunction, RotationConvention
from errors import ConfigError, DatasetParseError, VqsdError
from schemas import PRESET_NAMES, ResultDocument

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRAINING = 3


def _add_training_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--max-iterations", type=int, default=None)


def _add_ensemble_source(p: argparse.ArgumentParser) -> None:
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="experiment config JSON file")
    source.add_argument("--preset", choices=PRESET_NAMES)
    p.add_argument("--out", default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqsd", description="Variational quantum state discrimination and POVM classification"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discriminate", help="train a POVM circuit on a state ensemble")
    _add_ensemble_source(p)
    _add_training_flags(p)

    p = sub.add_parser("baselines", help="Helstrom, PGM and brute-force errors without training")
    _add_ensemble_source(p)
    p.add_argument("--grid-size", type=int, default=None)

    p = sub.add_parser("classify-iris", help="stratified cross-validation on the Iris dataset")
    p.add_argument("--config", default=None)
    p.add_argument("--data", default=None, help=f"Iris CSV (default {settings.DATA_PATH})")
    p.add_argument("--ntarget", type=int, choices=[1, 2], default=None)
    p.add_argument("--encoding", choices=[e.value for e in EncodingFunction], default=None)
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--rotation", choices=[r.value for r in RotationConvention], default=None)
    p.add_argument("--out", default=None)
    _add_training_flags(p)

    p = sub.add_parser("schema", help="print the JSON schema of result.json")
    p.add_argument("--out", default=None, help="write the schema to this file instead")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    overrides = {
        "train.restarts": getattr(args, "restarts", None),
        "train.max_iterations": getattr(args, "max_iterations", None),
        "grid_size": getattr(args, "grid_size", None),
    }
    if args.command == "classify-iris":
        overrides.update(
            {
                "iris.data": args.data,
                "iris.n_target": args.ntarget,
                "iris.encoding": args.encoding,
                "iris.layers": args.layers,
                "iris.folds": args.folds,
                "iris.rotation": args.rotation,
            }
        )
    else:
        overrides["preset"] = getattr(args, "preset", None)
    return overrides


def load_experiment(args: argparse.Namespace):
    overrides = _overrides(args)
    if args.config:
        config = experiments.load_config(args.config, args.command, overrides)
    else:
        config = experiments.build_config({"mode": args.command}, overrides)
    seed = experiments.resolve_seed(config.seed, getattr(args, "seed", None))
    return config.model_copy(update={"seed": seed})


def write_schema(out: Optional[str]) -> None:
    text = json.dumps(ResultDocument.model_json_schema(), indent=2) + "\n"
    if out:
        experiments.write_atomic(out, text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=settings.LOG_LEVEL)
    args = build_parser().parse_args(argv)

    if args.command == "schema":
        write_schema(args.out)
        return EXIT_OK

    try:
        config = load_experiment(args)
        doc = experiments.run(config, args.out)
    except (ConfigError, DatasetParseError, FileNotFoundError) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_CONFIG
    except VqsdError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_TRAINING

    if doc.final_cost is not None:
        logger.info(f"Done: final cost {doc.final_cost:.10f}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
