"""Command line interface for running, validating and predicting experiments."""

from __future__ import annotations

import argparse
import sys
import typing as t
from pathlib import Path
from typing import Self

from p2p_topk.config import ConfigError, ExperimentConfig
from p2p_topk.experiment import run_experiment
from p2p_topk.metrics import (
    predict_bbw,
    predict_mfw_basic,
    predict_mfw_lower_bound,
    predict_mfw_strategy1,
)
from p2p_topk.utils import configure_logging
from p2p_topk.validation import validate_config_file

_Handler = t.Callable[[argparse.Namespace, list[str]], int]

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = 2

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


class CliError(RuntimeError):
    """Raised when CLI arguments cannot be processed."""

    @classmethod
    def unrecognized_arguments(cls, extra: t.Sequence[str]) -> Self:
        joined = " ".join(extra)
        return cls(f"unrecognized arguments: {joined}")

    @classmethod
    def unsupported_command(cls, command: str) -> Self:
        return cls(f"unsupported command: {command}")

    @classmethod
    def config_not_found(cls, path: Path) -> Self:
        return cls(f"config file not found: {path}")

    @classmethod
    def invalid_jobs(cls, jobs: int) -> Self:
        return cls(f"--jobs must be >= 1, got {jobs}")

    @classmethod
    def invalid_prediction(cls, message: str) -> Self:
        return cls(f"cannot predict: {message}")


def main(argv: t.Sequence[str] | None = None) -> int:
    """Parse *argv* and dispatch the requested command.

    Returns 0 on success, 1 for configuration problems and 2 when a run fails.
    """
    parser = _create_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        # usage errors count as configuration problems
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG_ERROR

    configure_logging(args.log_level)
    try:
        handler = _resolve_handler(args.command)
        return handler(args, extra)
    except (CliError, ConfigError) as exc:
        _write_line(sys.stderr, str(exc))
        return EXIT_CONFIG_ERROR
    except Exception as exc:
        _write_line(sys.stderr, f"Error: {exc}")
        return EXIT_RUNTIME_ERROR


def _resolve_handler(command: str) -> _Handler:
    handlers: dict[str, _Handler] = {
        "run": _handle_run,
        "validate": _handle_validate,
        "predict": _handle_predict,
    }
    try:
        return handlers[command]
    except KeyError as exc:
        raise CliError.unsupported_command(command) from exc


def _load(path: Path) -> ExperimentConfig:
    if not path.is_file():
        raise CliError.config_not_found(path)
    return validate_config_file(path)


def _handle_run(args: argparse.Namespace, extra: list[str]) -> int:
    if extra:
        raise CliError.unrecognized_arguments(extra)
    if args.jobs < 1:
        raise CliError.invalid_jobs(args.jobs)
    config = _load(args.config)
    result = run_experiment(config, args.out, jobs=args.jobs, trace=args.trace)
    _write_lines(sys.stdout, [str(result.results_path), str(result.summary_path)])
    return EXIT_OK


def _handle_validate(args: argparse.Namespace, extra: list[str]) -> int:
    if extra:
        raise CliError.unrecognized_arguments(extra)
    config = _load(args.config)
    settings = config.settings
    _write_lines(
        sys.stdout,
        [
            f"sweep: {config.sweep_variable.value} over "
            + ", ".join(repr(value) for value in config.sweep_values),
            "algorithms: " + ", ".join(spec.name for spec in config.algorithms),
            "seeds: " + ", ".join(str(seed) for seed in config.seeds),
            f"peers: {settings.n_peers}, k: {settings.k}, "
            f"ttl: {settings.ttl if settings.ttl is not None else 'coverage'}",
            "ok",
        ],
    )
    return EXIT_OK


def _handle_predict(args: argparse.Namespace, extra: list[str]) -> int:
    if extra:
        raise CliError.unrecognized_arguments(extra)
    try:
        basic = predict_mfw_basic(args.dg, args.npq)
        lower = predict_mfw_lower_bound(args.npq)
        bbw = predict_bbw(args.k, args.l, args.npq)
    except ValueError as exc:
        raise CliError.invalid_prediction(str(exc)) from exc
    # d(G) * |P_Q| / 2 edges when the query covers the whole network
    edges = round(args.dg * args.npq / 2)
    _write_lines(
        sys.stdout,
        [
            f"mFw basic: {basic:g}",
            f"mFw lower bound: {lower}",
            f"mFw strategy1: {predict_mfw_strategy1(edges)}",
            f"bBw: {bbw}",
        ],
    )
    return EXIT_OK


def _create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="p2p-topk",
        description="Simulate fully distributed top-k queries over unstructured P2P overlays.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--log-level",
        default="WARNING",
        type=str.upper,
        choices=LOG_LEVELS,
        help="Logging threshold (default: WARNING).",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser(
        "run",
        parents=[common],
        help="Run an experiment sweep.",
        description="Run every (sweep value, seed) cell and write results.csv and summary.csv.",
    )
    run_parser.add_argument("config", type=Path, help="Experiment config file.")
    run_parser.add_argument("--out", type=Path, help="Output directory.")
    run_parser.add_argument(
        "--jobs", type=int, default=1, help="Worker processes for the cells (default: 1)."
    )
    run_parser.add_argument(
        "--trace",
        action="store_true",
        help="Write a delivery trace per measured query.",
    )

    validate_parser = subparsers.add_parser(
        "validate",
        parents=[common],
        help="Check a config file and show the resolved experiment.",
    )
    validate_parser.add_argument("config", type=Path, help="Experiment config file.")

    predict_parser = subparsers.add_parser(
        "predict",
        parents=[common],
        help="Print the closed-form message and byte counts.",
    )
    predict_parser.add_argument("--dg", type=float, required=True, help="Average degree d(G).")
    predict_parser.add_argument("--npq", type=int, required=True, help="Peers reached |P_Q|.")
    predict_parser.add_argument("--k", type=int, default=20, help="Requested items k.")
    predict_parser.add_argument(
        "--l", type=int, default=10, help="Bytes per score-list entry L (default: 10)."
    )

    return parser


def _write_line(stream: t.TextIO, text: str) -> None:
    stream.write(f"{text}\n")


def _write_lines(stream: t.TextIO, lines: t.Iterable[str]) -> None:
    collected = list(lines)
    if not collected:
        return
    stream.write("\n".join(collected) + "\n")


__all__ = ["CliError", "main"]
