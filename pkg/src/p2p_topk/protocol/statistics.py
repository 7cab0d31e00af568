"""Per-neighbour statistics and the neighbour selection heuristics built on them."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import StrEnum

from p2p_topk.protocol.scorelist import ScoreList
from p2p_topk.protocol.timing import ProtocolError

# scoring spec tag plus k
QueryTemplate = tuple[str, int]

ERR_HEURISTIC_MODE = "unknown heuristic mode {mode!r}"
ERR_HEURISTIC_RANGE = "heuristic parameter {name} must lie in [0, 1], got {value}"


class HeuristicMode(StrEnum):
    """Neighbour filters applied before forwarding a repeated query."""

    EXCLUDE_ZERO_HIT = "excludeZeroHit"
    MIN_HIT_FRACTION = "minHitFraction"
    POSITION_THRESHOLD = "positionThreshold"

    @classmethod
    def parse(cls, value: str) -> HeuristicMode:
        """Return the mode named ``value`` or raise :class:`ProtocolError`."""
        try:
            return cls(value)
        except ValueError as exc:
            raise ProtocolError(ERR_HEURISTIC_MODE.format(mode=value)) from exc


@dataclass(frozen=True, slots=True)
class HeuristicConfig:
    """Selected heuristic and its parameters.

    Attributes:
        mode: Filter to apply.
        x: Minimum fraction of a neighbour's scores that must survive.
        z: Position factor; the best surviving rank must be ``<= z * n``.
    """

    mode: HeuristicMode
    x: float = 0.5
    z: float = 0.8

    def __post_init__(self) -> None:
        for name in ("x", "z"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ProtocolError(ERR_HEURISTIC_RANGE.format(name=name, value=value))


@dataclass(slots=True)
class NeighborRecord:
    """Outcome of the latest execution for one neighbour.

    Attributes:
        hits_in_merged_list: Neighbour entries that survived the merge.
        best_position: 1-based rank of its best survivor, ``None`` if none.
        returned: Length of the list the neighbour returned.
        merged_length: Length of the merged list it was compared against.
        executions: Number of recorded executions.
    """

    hits_in_merged_list: int = 0
    best_position: int | None = None
    returned: int = 0
    merged_length: int = 0
    executions: int = 0


@dataclass(slots=True)
class StatisticsStore:
    """Statistics keyed by ``(neighbour, query template)``."""

    records: dict[tuple[int, QueryTemplate], NeighborRecord] = field(default_factory=dict)

    def get(self, neighbor: int, template: QueryTemplate) -> NeighborRecord | None:
        """Return the record of ``neighbor`` for ``template`` if one exists."""
        return self.records.get((neighbor, template))

    def __len__(self) -> int:
        return len(self.records)


def _passes(record: NeighborRecord, cfg: HeuristicConfig) -> bool:
    match cfg.mode:
        case HeuristicMode.EXCLUDE_ZERO_HIT:
            return record.hits_in_merged_list > 0
        case HeuristicMode.MIN_HIT_FRACTION:
            if record.returned == 0:
                return False
            return record.hits_in_merged_list / record.returned >= cfg.x
        case HeuristicMode.POSITION_THRESHOLD:
            if record.best_position is None:
                return False
            return record.best_position <= cfg.z * record.merged_length
    return True  # pragma: no cover


def select_neighbors_heuristic(
    statistics: StatisticsStore,
    template: QueryTemplate,
    candidates: Iterable[int],
    cfg: HeuristicConfig | None,
) -> set[int]:
    """Filter ``candidates`` with the heuristic ``cfg``.

    Candidates without statistics always pass, and ``cfg=None`` keeps every
    candidate.
    """
    selected = set(candidates)
    if cfg is None:
        return selected
    kept: set[int] = set()
    for neighbor in selected:
        record = statistics.get(neighbor, template)
        if record is None or record.executions == 0 or _passes(record, cfg):
            kept.add(neighbor)
    return kept


def update_statistics(
    statistics: StatisticsStore,
    template: QueryTemplate,
    merged_list: ScoreList,
    per_neighbor_lists: Mapping[int, ScoreList],
) -> StatisticsStore:
    """Record how each neighbour list fared in ``merged_list``.

    Neighbours that never answered should be passed with an empty list so
    their execution is counted.
    """
    positions: dict[tuple[int, float], int] = {}
    for rank, entry in enumerate(merged_list, start=1):
        positions.setdefault(entry.identity, rank)
    for neighbor, neighbor_list in per_neighbor_lists.items():
        ranks = [
            positions[entry.identity] for entry in neighbor_list if entry.identity in positions
        ]
        record = statistics.records.setdefault((neighbor, template), NeighborRecord())
        record.hits_in_merged_list = len(ranks)
        record.best_position = min(ranks) if ranks else None
        record.returned = len(neighbor_list)
        record.merged_length = len(merged_list)
        record.executions += 1
    return statistics


__all__ = [
    "HeuristicConfig",
    "HeuristicMode",
    "NeighborRecord",
    "QueryTemplate",
    "StatisticsStore",
    "select_neighbors_heuristic",
    "update_statistics",
]
