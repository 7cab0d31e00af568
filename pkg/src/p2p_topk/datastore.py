"""Synthetic per-peer relations ``R(score, data)`` and local top-k selection."""

from __future__ import annotations

import math
from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from p2p_topk.utils import logger

SCORE_DESC = "score-desc"

ERR_TUPLE_BOUNDS = "tupleCountMin/tupleCountMax must satisfy 1 <= min <= max, got {lo}/{hi}"
ERR_PAYLOAD_MEAN = "payloadMeanBytes must be >= 1, got {value}"
ERR_PAYLOAD_VARIANCE = "payloadVarianceBytes must be >= 0, got {value}"
ERR_NEGATIVE_K = "k must be >= 0, got {k}"
ERR_SCORING_SPEC = "unsupported scoring spec {spec!r}"


class DataGenError(ValueError):
    """Raised for invalid data generation settings."""


class TupleRow(NamedTuple):
    """One row of a peer relation."""

    score: float
    payload_bytes: int


class LocalHit(NamedTuple):
    """A local top-k entry: row index inside the peer relation and its score."""

    row: int
    score: float


@dataclass(frozen=True, slots=True)
class DataGenConfig:
    """Workload parameters for the per-peer relations.

    Attributes:
        tuple_count_min: Smallest row count, inclusive.
        tuple_count_max: Largest row count, inclusive.
        payload_mean_bytes: Mean size of the ``data`` attribute.
        payload_variance_bytes: Variance of the payload size in bytes squared.
        seed: Base seed; each peer draws from ``(seed, peer_id)``.
    """

    tuple_count_min: int = 1001
    tuple_count_max: int = 19999
    payload_mean_bytes: float = 1024.0
    payload_variance_bytes: float = 64.0
    seed: int = 0

    def validate(self) -> None:
        """Raise :class:`DataGenError` when the settings are unusable."""
        if not 1 <= self.tuple_count_min <= self.tuple_count_max:
            raise DataGenError(
                ERR_TUPLE_BOUNDS.format(lo=self.tuple_count_min, hi=self.tuple_count_max)
            )
        if self.payload_mean_bytes < 1:
            raise DataGenError(ERR_PAYLOAD_MEAN.format(value=self.payload_mean_bytes))
        if self.payload_variance_bytes < 0:
            raise DataGenError(ERR_PAYLOAD_VARIANCE.format(value=self.payload_variance_bytes))


@dataclass(frozen=True, slots=True)
class PeerDatabase:
    """Column-oriented relation held by one peer.

    ``scores`` and ``payload_bytes`` are parallel arrays; :attr:`rows`
    exposes them as :class:`TupleRow` values.
    """

    scores: npt.NDArray[np.float64]
    payload_bytes: npt.NDArray[np.int64]

    def __len__(self) -> int:
        return int(self.scores.shape[0])

    @property
    def rows(self) -> Iterator[TupleRow]:
        """Iterate the relation row by row."""
        for score, size in zip(self.scores.tolist(), self.payload_bytes.tolist(), strict=True):
            yield TupleRow(score, size)

    @classmethod
    def from_rows(cls, rows: list[TupleRow]) -> PeerDatabase:
        """Build a database from explicit rows, mainly for fixtures."""
        scores = np.array([row.score for row in rows], dtype=np.float64)
        sizes = np.array([row.payload_bytes for row in rows], dtype=np.int64)
        return cls(scores=scores, payload_bytes=sizes)


def generate_database(peer_id: int, config: DataGenConfig) -> PeerDatabase:
    """Generate the relation of ``peer_id``.

    Row count is uniform in ``[tuple_count_min, tuple_count_max]``, scores are
    i.i.d. uniform on ``[0, 1]`` and payload sizes are normal with the
    configured mean and variance, rounded and truncated below at one byte.
    The result depends only on ``(config.seed, peer_id)``.
    """
    config.validate()
    rng = np.random.default_rng([config.seed, peer_id])
    count = int(rng.integers(config.tuple_count_min, config.tuple_count_max + 1))
    scores = rng.random(count)
    sizes = rng.normal(config.payload_mean_bytes, math.sqrt(config.payload_variance_bytes), count)
    payload = np.maximum(np.rint(sizes), 1).astype(np.int64)
    return PeerDatabase(scores=scores, payload_bytes=payload)


def local_top_k(db: PeerDatabase, k: int) -> tuple[LocalHit, ...]:
    """Return the ``k`` best rows of ``db``, highest score first.

    Equal scores are ordered by ascending row index.
    """
    if k < 0:
        raise DataGenError(ERR_NEGATIVE_K.format(k=k))
    size = len(db)
    if k == 0 or size == 0:
        return ()
    negated = -db.scores
    if k < size:
        threshold = np.partition(negated, k - 1)[k - 1]
        candidates = np.flatnonzero(negated <= threshold)
    else:
        candidates = np.arange(size)
    order = candidates[np.lexsort((candidates, negated[candidates]))][:k]
    return tuple(LocalHit(int(row), float(db.scores[row])) for row in order)


@dataclass(frozen=True, slots=True)
class TopItem:
    """A ranked data item kept by the catalog.

    Attributes:
        row: Row index inside the owner's relation.
        score: Score of the row.
        payload_bytes: Size of the shipped ``data`` attribute.
    """

    row: int
    score: float
    payload_bytes: int


@dataclass(slots=True)
class DatabaseCatalog:
    """Lazy view over every peer relation of a network.

    Relations are regenerated on demand from ``(seed, peer_id)``; only the
    row count and the best ``depth`` rows of each peer are cached.
    """

    config: DataGenConfig
    depth: int
    _row_counts: dict[int, int] = field(default_factory=dict)
    _tops: dict[int, tuple[TopItem, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.config.validate()
        if self.depth < 0:
            raise DataGenError(ERR_NEGATIVE_K.format(k=self.depth))

    def _load(self, peer_id: int) -> None:
        db = generate_database(peer_id, self.config)
        hits = local_top_k(db, self.depth)
        self._row_counts[peer_id] = len(db)
        self._tops[peer_id] = tuple(
            TopItem(hit.row, hit.score, int(db.payload_bytes[hit.row])) for hit in hits
        )

    def database(self, peer_id: int) -> PeerDatabase:
        """Regenerate the full relation of ``peer_id``."""
        return generate_database(peer_id, self.config)

    def row_count(self, peer_id: int) -> int:
        """Return the number of rows held by ``peer_id``."""
        if peer_id not in self._row_counts:
            self._load(peer_id)
        return self._row_counts[peer_id]

    def top_items(self, peer_id: int, k: int) -> tuple[TopItem, ...]:
        """Return the ``k`` best items of ``peer_id`` (``k`` up to ``depth``)."""
        if k > self.depth:
            logger.debug("catalog depth %d below request %d, regenerating", self.depth, k)
            db = generate_database(peer_id, self.config)
            return tuple(
                TopItem(hit.row, hit.score, int(db.payload_bytes[hit.row]))
                for hit in local_top_k(db, k)
            )
        if peer_id not in self._tops:
            self._load(peer_id)
        return self._tops[peer_id][:k]


def check_scoring_spec(spec: str) -> None:
    """Reject scoring specs other than the built-in descending score order."""
    if spec != SCORE_DESC:
        raise DataGenError(ERR_SCORING_SPEC.format(spec=spec))


__all__ = [
    "SCORE_DESC",
    "DataGenConfig",
    "DataGenError",
    "DatabaseCatalog",
    "LocalHit",
    "PeerDatabase",
    "TopItem",
    "TupleRow",
    "check_scoring_spec",
    "generate_database",
    "local_top_k",
]
