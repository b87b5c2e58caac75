"""Command-line benchmark harness.

Subcommands run subsets of the experiment pipeline from a JSON config:

    advkit bench --config cfg.json --out results/
    advkit attack --config cfg.json --attack fgsm --eps 0.3 --norm inf
    advkit poison-scan --config cfg.json --seed 7 --out scan/
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .. import __version__
from .experiment import ALL_STAGES, run_experiment

_SUBCOMMAND_STAGES = {
    "bench": ALL_STAGES,
    "train": ("train",),
    "attack": ("train", "attack"),
    "defend": ("train", "attack", "defend"),
    "detect": ("train", "detect"),
    "metrics": ("train", "metrics"),
    "poison-scan": ("poison",),
}

_DEFAULT_CONFIG = {
    "seed": 0,
    "dataset": {"name": "blobs", "n": 1000},
    "test_fraction": 0.3,
    "model": {"hidden_sizes": [16], "activation": "relu"},
    "train": {"batch_size": 32, "nb_epochs": 20, "learning_rate": 0.5},
    "attacks": [{"name": "fgsm", "eps": 0.3, "norm": "inf"}],
    "defences": [],
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON experiment config")
    parser.add_argument("--seed", type=int, help="override the global seed")
    parser.add_argument("--out", type=Path, default=Path("advkit-out"),
                        help="output directory (default: advkit-out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="advkit", description="adversarial robustness benchmark harness"
    )
    parser.add_argument("--version", action="version", version=f"advkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMAND_STAGES:
        p = sub.add_parser(name, help=f"run the {name} stage(s)")
        _add_common(p)
        if name == "attack":
            p.add_argument("--attack", help="attack name override (e.g. fgsm)")
            p.add_argument("--eps", type=float, help="attack strength override")
            p.add_argument("--norm", help="attack norm override (0/1/2/inf)")
    return parser


def load_config(args: argparse.Namespace) -> dict:
    if args.config is not None:
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    else:
        config = json.loads(json.dumps(_DEFAULT_CONFIG))
    if args.seed is not None:
        config["seed"] = args.seed
    if getattr(args, "attack", None):
        override = {"name": args.attack}
        if args.eps is not None:
            override["eps"] = args.eps
        if args.norm is not None:
            override["norm"] = args.norm
        config["attacks"] = [override]
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = load_config(args)
    report, _ = run_experiment(
        config, args.out, stages=_SUBCOMMAND_STAGES[args.command]
    )
    print((Path(args.out) / "report.txt").read_text(encoding="utf-8"), end="")
    failures = report.get("failures", [])
    if failures:
        for failure in failures:
            print(f"stage {failure['stage']} failed: {failure['error']}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
