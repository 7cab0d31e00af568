"""Common utilities shared by the simulator modules."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from pathlib import Path

import numpy as np
from platformdirs import user_data_dir

# experiments land here when neither the config nor the CLI names a directory
DEFAULT_OUTPUT_DIR = Path(user_data_dir("p2p_topk")) / "experiments"

# central logger for the project
logger = logging.getLogger("p2p_topk")
logger.propagate = False

ERR_EMPTY_LIST = "expected a comma separated list, got an empty value"
ERR_LIST_ITEM = "invalid list item {item!r}: {reason}"
ERR_OUTPUT_DIR_FILE = "Output directory must be a directory, not a file: {out_dir}"
ERR_NULL_BYTES = "path contains null bytes"


def configure_logging(
    level: str = "INFO", handler: logging.Handler | None = None
) -> logging.Logger:
    """Configure and return the package logger."""
    numeric = getattr(logging, level.upper(), logging.INFO)
    logger.setLevel(numeric)
    logger.handlers.clear()
    if handler is None:
        handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    logger.addHandler(handler)

    # forward warnings.warn() calls through the logging system
    logging.captureWarnings(True)
    wlog = logging.getLogger("py.warnings")
    wlog.setLevel(numeric)
    wlog.handlers.clear()
    wlog.addHandler(handler)
    wlog.propagate = False
    return logger


# configure default logging on import
configure_logging()


def parse_list[T](spec: str, convert: Callable[[str], T]) -> list[T]:
    """Parse a comma separated list such as ``"1000, 2000,5000"``.

    Empty parts are skipped. ``convert`` turns each stripped token into a
    value; a ``ValueError`` raised by it is re-raised with the offending
    token in the message.
    """
    values: list[T] = []
    for raw_part in spec.split(","):
        part = raw_part.strip()
        if not part:
            continue
        try:
            values.append(convert(part))
        except ValueError as exc:
            raise ValueError(ERR_LIST_ITEM.format(item=part, reason=exc)) from exc
    if not values:
        raise ValueError(ERR_EMPTY_LIST)
    return values


def sane_output_dir(out_dir: str | Path | None) -> Path:
    """Return a resolved directory for experiment outputs, creating it.

    ``None`` selects :data:`DEFAULT_OUTPUT_DIR`.
    """
    target = Path(out_dir) if out_dir else DEFAULT_OUTPUT_DIR
    if "\x00" in str(target):
        raise ValueError(ERR_NULL_BYTES)
    target = target.resolve()
    if target.exists() and not target.is_dir():
        raise ValueError(ERR_OUTPUT_DIR_FILE.format(out_dir=out_dir))
    target.mkdir(parents=True, exist_ok=True)
    return target


def mean_and_std(values: Iterable[float]) -> tuple[float, float]:
    """Return the mean and population standard deviation of ``values``."""
    data = np.fromiter(values, dtype=float)
    if data.size == 0:
        return 0.0, 0.0
    return float(data.mean()), float(data.std())


__all__ = [
    "DEFAULT_OUTPUT_DIR",
    "configure_logging",
    "logger",
    "mean_and_std",
    "parse_list",
    "sane_output_dir",
]
