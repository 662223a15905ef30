"""Command-line interface.

Subcommands: synth-data, degrade, train, eval. Global flags (--seed,
--config, --set, --log-level) are accepted before or after the subcommand.
Every invocation prints its result dict as JSON: success on stdout with
exit code 0, failure as a single JSON line on stderr with a nonzero exit
code.
"""

import argparse
import json
import sys
import uuid
from dataclasses import replace
from pathlib import Path
from typing import Any, NoReturn

from .errors import DirError, UsageError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of printing usage and exiting."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


def _add_global_flags(parser: argparse.ArgumentParser, *, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=default, help="Seed for every random stream")
    parser.add_argument("--config", type=Path, default=default, help="Experiment TOML (or resolved JSON)")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=argparse.SUPPRESS if suppress else [],
        metavar="SECTION.KEY=VALUE",
        help="Override one config key; the value is parsed as a TOML literal",
    )
    parser.add_argument(
        "--log-level",
        default=default,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Override ISP_DIR_LOG_LEVEL",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isp-dir", description="Degradation-independent representation learning")
    _add_global_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _add_global_flags(common, suppress=True)

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    synth = sub.add_parser("synth-data", parents=[common], help="Render the toy shape corpus")
    synth.add_argument("--out", required=True)
    synth.add_argument("--n", type=int, default=200)
    synth.add_argument("--classes", type=int, default=4)
    synth.add_argument("--size", type=int, default=64)
    synth.add_argument("--force", action="store_true", help="Write into a non-empty directory")

    deg = sub.add_parser("degrade", parents=[common], help="Degrade a folder of clean PNGs")
    deg.add_argument("--in", dest="in_dir", required=True)
    deg.add_argument("--out", required=True)
    deg.add_argument("--profile", default="default")
    deg.add_argument("--pairs", action="store_true", help="Two independent views per input")
    deg.add_argument("--force", action="store_true")

    train = sub.add_parser("train", parents=[common], help="Train Stage I or Stage II")
    train.add_argument("--stage", type=int, choices=[1, 2], required=True)
    train.add_argument("--resume", action="store_true", help="Continue from the stage checkpoint")

    evaluate = sub.add_parser("eval", parents=[common], help="Write an evaluation report")
    evaluate.add_argument("--ckpt", required=True)
    evaluate.add_argument("--test", default=None, help="Test folder (default: held-out split)")
    evaluate.add_argument("--report", default="metrics")
    evaluate.add_argument("--out", default=None, help="Report folder (default: <ckpt dir>/eval)")
    evaluate.add_argument("--nopilot-ckpt", default=None, help="Stage-2 checkpoint trained without the pilot")
    evaluate.add_argument(
        "--strict", action="store_true", help="Fail when ablation ordering, task gain or pilot clustering misses"
    )
    return parser


def dispatch(args: argparse.Namespace) -> dict[str, Any]:
    """Run the selected command and return its result dict."""
    from .experiment import load_experiment

    if args.command == "synth-data":
        from .commands import synth_data

        seed = args.seed if args.seed is not None else load_experiment(args.config, args.overrides).seed
        return synth_data(args.out, args.n, args.classes, seed, force=args.force, size=args.size)

    if args.command == "degrade":
        from .commands import degrade

        seed = args.seed if args.seed is not None else load_experiment(args.config, args.overrides).seed
        return degrade(args.in_dir, args.out, args.profile, seed, pairs=args.pairs, force=args.force)

    config = load_experiment(args.config, args.overrides, args.seed)
    if args.command == "train":
        from .commands import train

        return train(config, args.stage, resume=args.resume)

    from .commands import evaluate

    return evaluate(
        config,
        args.ckpt,
        args.report,
        test=args.test,
        out=args.out,
        nopilot_ckpt=args.nopilot_ckpt,
        strict=args.strict,
    )


def _fail(response: dict[str, Any]) -> None:
    line = {"error_code": response.get("error_code", "execution_error"), "message": response.get("message", "")}
    print(json.dumps(line), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    """
    Parse arguments, initialize logging, run one command.

    Returns:
        Exit code: 0 on success, 1 on a failed command, 2 on a usage error
    """
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        _fail(e.to_error_response())
        return EXIT_USAGE

    # Logging first, before importing anything that logs
    from .config import get_config
    from .logging_config import run_id_var, setup_logging

    try:
        config = get_config()
    except ValueError as e:
        _fail({"error_code": "config_error", "message": str(e)})
        return EXIT_FAILURE
    if args.log_level:
        config = replace(config, log_level=args.log_level)
    setup_logging(config)
    run_id_var.set(uuid.uuid4().hex[:12])

    import torch

    torch.set_num_threads(config.torch_threads)

    try:
        result = dispatch(args)
    except UsageError as e:
        _fail(e.to_error_response())
        return EXIT_USAGE
    except DirError as e:
        _fail(e.to_error_response())
        return EXIT_FAILURE

    if result.get("status") != "success":
        _fail(result)
        return EXIT_USAGE if result.get("error_code") == "usage_error" else EXIT_FAILURE
    print(json.dumps(result, default=str))
    return EXIT_OK
