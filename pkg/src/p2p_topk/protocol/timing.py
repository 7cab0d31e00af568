"""Wait-time estimation and k-inflation."""

from __future__ import annotations

import math
from dataclasses import dataclass

ERR_WAIT_TTL = "wait time needs ttl >= 1, got {ttl}"
ERR_NEGATIVE_PARAM = "wait-time parameter {name} must be >= 0, got {value}"
ERR_INFLATION_P = "inaccessibility probability P must satisfy 0 <= P < 1, got {p}"
ERR_INFLATION_K = "k must be >= 1, got {k}"


class ProtocolError(ValueError):
    """Raised for invalid protocol parameters."""


@dataclass(frozen=True, slots=True)
class WaitTimeParams:
    """Cost components of a peer's wait time, in milliseconds.

    Attributes:
        t_qsnd: Longest time to send the query to a neighbour.
        t_exec: Longest local execution time (the user budget).
        t_slsnd: Longest time to send a score-list to a neighbour.
        t_merge: Longest time to merge score-lists.
    """

    t_qsnd: float
    t_exec: float
    t_slsnd: float
    t_merge: float

    def __post_init__(self) -> None:
        for name in ("t_qsnd", "t_exec", "t_slsnd", "t_merge"):
            value = getattr(self, name)
            if value < 0:
                raise ProtocolError(ERR_NEGATIVE_PARAM.format(name=name, value=value))


def compute_wait_time(ttl: int, params: WaitTimeParams) -> float:
    """Return how long a peer sending the query with ``ttl`` waits for answers.

    ``ttl * t_qsnd + t_exec + ttl * t_slsnd + (ttl - 1) * t_merge``
    """
    if ttl < 1:
        raise ProtocolError(ERR_WAIT_TTL.format(ttl=ttl))
    return (
        ttl * params.t_qsnd
        + params.t_exec
        + ttl * params.t_slsnd
        + (ttl - 1) * params.t_merge
    )


def inflate_k(k: int, p: float) -> int:
    """Return ``ceil(k / (1 - p))``.

    Requesting that many items leaves ``k`` accessible ones on average when
    each item is lost independently with probability ``p``.
    """
    if k < 1:
        raise ProtocolError(ERR_INFLATION_K.format(k=k))
    if not 0.0 <= p < 1.0:
        raise ProtocolError(ERR_INFLATION_P.format(p=p))
    # round away float noise such as 20 / 0.8 = 25.000000000000004
    return math.ceil(round(k / (1.0 - p), 9))


__all__ = [
    "ProtocolError",
    "WaitTimeParams",
    "compute_wait_time",
    "inflate_k",
]
