"""Centralised comparison algorithms.

Both baselines flood the query like the basic FD algorithm. Under ``CN``
every receiving peer then ships its k best data items straight to the
originator; under ``CN*`` it ships only its score-list and the originator
retrieves the winners afterwards.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

from p2p_topk.protocol.messages import QueryDescriptor, ResultItem
from p2p_topk.protocol.peer import (
    Action,
    ExecuteLocally,
    PeerState,
    Phase,
    SendForward,
    SendToOriginator,
    forward_candidates,
    outgoing_copy,
)
from p2p_topk.protocol.scorelist import ScoreList, entry_order, merge_score_lists


@dataclass(frozen=True, slots=True)
class SendItems:
    """Ship ``items`` directly to the originator."""

    items: tuple[ResultItem, ...]


BaselineAction = Action | SendItems


def handle_baseline_forward(
    state: PeerState, query: QueryDescriptor, sender: int | None, now: float
) -> list[BaselineAction]:
    """Flood ``query`` on first reception and start local execution.

    There is no wait window: the response leaves once execution is done.
    """
    del now
    if query.qid in state.seen_qids:
        return []
    state.seen_qids.add(query.qid)
    state.query = query
    state.parent = sender
    state.phase = Phase.COLLECTING
    state.ttl_out = query.ttl if sender is None else query.ttl - 1
    actions: list[BaselineAction] = [ExecuteLocally()]
    if state.ttl_out <= 0:
        return actions
    outgoing = outgoing_copy(state, query, state.ttl_out)
    targets = sorted(forward_candidates(state, query))
    state.targets = frozenset(targets)
    actions.extend(SendForward(target, outgoing) for target in targets)
    return actions


def run_cn(state: PeerState, items: tuple[ResultItem, ...]) -> list[BaselineAction]:
    """Respond to the query under CN: send the local top items to the originator."""
    state.phase = Phase.DONE
    if state.is_originator:
        return []
    return [SendItems(items)]


def run_cnstar(state: PeerState, local_top: ScoreList) -> list[BaselineAction]:
    """Respond to the query under CN*: send the local score-list to the originator."""
    state.local_top = local_top
    state.phase = Phase.DONE
    if state.is_originator:
        return []
    return [SendToOriginator(local_top)]


@dataclass(slots=True)
class BaselineCollector:
    """Originator side of a baseline: a streaming top-``k`` over every response.

    Memory stays bounded by ``k`` whatever the number of responders.
    """

    k: int
    items: list[ResultItem] = field(default_factory=list)
    score_list: ScoreList = field(default_factory=ScoreList)
    last_arrival: float = 0.0
    responses: int = 0

    def add_items(self, items: tuple[ResultItem, ...], now: float) -> None:
        """Merge shipped ``items`` into the running top-``k``."""
        merged = heapq.merge(
            self.items,
            sorted(items, key=lambda item: entry_order(item.to_entry())),
            key=lambda item: entry_order(item.to_entry()),
        )
        self.items = list(itertools.islice(merged, self.k))
        self._arrived(now)

    def add_score_list(self, score_list: ScoreList, now: float) -> None:
        """Merge a shipped score-list into the running top-``k``."""
        self.score_list = merge_score_lists([self.score_list, score_list], self.k)
        self._arrived(now)

    def _arrived(self, now: float) -> None:
        self.responses += 1
        self.last_arrival = max(self.last_arrival, now)


__all__ = [
    "BaselineAction",
    "BaselineCollector",
    "SendItems",
    "handle_baseline_forward",
    "run_cn",
    "run_cnstar",
]
