"""Score-lists: bounded ``(address, score)`` sequences bubbled toward the originator."""

from __future__ import annotations

import heapq
import itertools
from collections import Counter
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from typing import NamedTuple

SCORE_BYTES = 4
ADDRESS_BYTES = 6
ENTRY_BYTES = SCORE_BYTES + ADDRESS_BYTES


class ScoreEntry(NamedTuple):
    """One couple of a score-list.

    ``row`` is the owner's local row index; it only breaks ties and is not
    part of the accounted entry size.
    """

    owner: int
    score: float
    row: int = 0

    @property
    def identity(self) -> tuple[int, float]:
        """Return the ``(owner, score)`` pair used for duplicate counting."""
        return self.owner, self.score


def entry_order(entry: ScoreEntry) -> tuple[float, int, int]:
    """Sort key of the global total order: score desc, owner asc, row asc."""
    return -entry.score, entry.owner, entry.row


@dataclass(frozen=True, slots=True)
class ScoreList:
    """Sorted score-list of at most ``k`` entries."""

    entries: tuple[ScoreEntry, ...] = ()

    @classmethod
    def from_entries(cls, entries: Iterable[ScoreEntry], k: int | None = None) -> ScoreList:
        """Sort ``entries`` by the global order and keep the first ``k``."""
        ordered = sorted(entries, key=entry_order)
        if k is not None:
            ordered = ordered[: max(k, 0)]
        return cls(tuple(ordered))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ScoreEntry]:
        return iter(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    @property
    def scores(self) -> list[float]:
        """Return the scores in list order."""
        return [entry.score for entry in self.entries]

    @property
    def entry_bytes(self) -> int:
        """Return the accounted payload size: ``ENTRY_BYTES`` per entry."""
        return ENTRY_BYTES * len(self.entries)

    def truncated(self, k: int) -> ScoreList:
        """Return the first ``k`` entries."""
        return ScoreList(self.entries[: max(k, 0)])

    def is_sorted(self) -> bool:
        """Return ``True`` when the entries respect the global order."""
        keys = [entry_order(entry) for entry in self.entries]
        return all(a <= b for a, b in itertools.pairwise(keys))


def merge_score_lists(lists: Iterable[ScoreList], k: int) -> ScoreList:
    """Return the ``k`` best entries of the union of sorted ``lists``.

    Entries that compare equal on ``(owner, score)`` stay distinct.
    """
    if k <= 0:
        return ScoreList()
    merged = heapq.merge(*(sl.entries for sl in lists), key=entry_order)
    return ScoreList(tuple(itertools.islice(merged, k)))


def build_retrieval_plan(final_list: ScoreList) -> dict[int, int]:
    """Map every owner of ``final_list`` to its number of entries.

    Owners appear in ascending id order.
    """
    counts = Counter(entry.owner for entry in final_list)
    return {owner: counts[owner] for owner in sorted(counts)}


__all__ = [
    "ADDRESS_BYTES",
    "ENTRY_BYTES",
    "SCORE_BYTES",
    "ScoreEntry",
    "ScoreList",
    "build_retrieval_plan",
    "entry_order",
    "merge_score_lists",
]
