"""Deterministic simulator for fully distributed top-k queries in unstructured P2P overlays."""

from p2p_topk.utils import (
    configure_logging,
    logger,
    mean_and_std,
    parse_list,
    sane_output_dir,
)

__all__ = [
    "configure_logging",
    "logger",
    "mean_and_std",
    "parse_list",
    "sane_output_dir",
]
