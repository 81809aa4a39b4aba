"""srl-bridge: fine-tune a transformer tagger and export emission files."""

from __future__ import annotations

import argparse
import sys

from . import BridgeError, __version__


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="srl-bridge", description=__doc__)
    parser.add_argument("--version", action="version", version=f"srl-bridge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="fine-tune a model from a JSON config")
    p.add_argument("--config", required=True)

    p = sub.add_parser("export", help="export emissions for a corpus from a checkpoint")
    p.add_argument("--ckpt", required=True, help="checkpoint directory written by train")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    return parser


def cmd_train(args) -> int:
    from .train import TrainConfig, train

    cfg = TrainConfig.load(args.config)
    result = train(cfg)
    print(
        f"best_f1={result.best_f1} best_epoch={result.best_epoch} "
        f"epochs_run={result.epochs_run} checkpoint={cfg.out_dir}"
    )
    return 0


def cmd_export(args) -> int:
    from .data import read_conll
    from .export import write_emissions
    from .model import load_checkpoint

    model, tokenizer, labels = load_checkpoint(args.ckpt)
    write_emissions(model, tokenizer, read_conll(args.corpus), labels, args.out)
    return 0


def dispatch(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code or 0
    handler = {"train": cmd_train, "export": cmd_export}[args.command]
    try:
        return handler(args)
    except (BridgeError, OSError) as exc:
        print(f"srl-bridge: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch())
