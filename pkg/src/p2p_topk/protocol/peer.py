"""Per-peer state machine of the fully distributed top-k protocol.

Handlers never block or touch the network. They update a :class:`PeerState`
and return actions that the simulation kernel carries out: sending
messages, scheduling timers and running the local query.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from enum import StrEnum

from p2p_topk.protocol.messages import QueryDescriptor, QueryId, Strategy
from p2p_topk.protocol.scorelist import ScoreList, merge_score_lists
from p2p_topk.protocol.statistics import (
    StatisticsStore,
    select_neighbors_heuristic,
    update_statistics,
)
from p2p_topk.protocol.timing import ProtocolError, WaitTimeParams, compute_wait_time
from p2p_topk.utils import logger

log = logger.getChild("protocol")

ERR_NO_LAMBDA = "strategy {strategy} needs a forwarding delay sampler"
ERR_NO_QUERY = "peer {peer} has not received a query yet"


class Phase(StrEnum):
    """Lifecycle of a peer within one query."""

    IDLE = "idle"
    COLLECTING = "collecting"
    DONE = "done"
    RETRIEVAL = "retrieval"


class DiscardReason(StrEnum):
    """Why a score-list was dropped."""

    LATE = "late"
    PARENT_LOST = "parent-lost"
    RETRIEVAL_STARTED = "retrieval-started"
    ORIGINATOR_LOST = "originator-lost"


def _no_lambda() -> float:
    raise ProtocolError(ERR_NO_LAMBDA.format(strategy=Strategy.STRATEGY1))


@dataclass(frozen=True, slots=True)
class ProtocolConfig:
    """Run-wide protocol parameters shared by every peer.

    Attributes:
        wait_params: Cost components of the wait time.
        merge_time_ms: Time spent merging before a backward send.
        lambda_sampler: Draws the forwarding delay under Strategy 1.
        urgent_hop_budget: Relay hops an urgent score-list may take before it
            is sent straight to the originator.
    """

    wait_params: WaitTimeParams
    merge_time_ms: float = 1.0
    lambda_sampler: Callable[[], float] = _no_lambda
    urgent_hop_budget: int = 0


# actions


@dataclass(frozen=True, slots=True)
class SendForward:
    """Send the query copy ``query`` to ``target``."""

    target: int
    query: QueryDescriptor


@dataclass(frozen=True, slots=True)
class ExecuteLocally:
    """Run the query against the local relation."""


@dataclass(frozen=True, slots=True)
class ScheduleFlush:
    """Flush the delayed forward targets at ``at``."""

    at: float


@dataclass(frozen=True, slots=True)
class ScheduleDeadline:
    """Stop waiting for neighbour score-lists at ``at``."""

    at: float


@dataclass(frozen=True, slots=True)
class SendScoreList:
    """Send ``score_list`` to ``target`` after ``delay`` ms."""

    target: int
    score_list: ScoreList
    urgent: bool = False
    hops_left: int = 0
    delay: float = 0.0


@dataclass(frozen=True, slots=True)
class SendToOriginator:
    """Send ``score_list`` directly to the query originator."""

    score_list: ScoreList
    delay: float = 0.0


@dataclass(frozen=True, slots=True)
class Finalize:
    """The originator holds its final score-list."""

    score_list: ScoreList


@dataclass(frozen=True, slots=True)
class DiscardScoreList:
    """Drop ``score_list``; it never reaches the final result."""

    score_list: ScoreList
    reason: DiscardReason


Action = (
    SendForward
    | ExecuteLocally
    | ScheduleFlush
    | ScheduleDeadline
    | SendScoreList
    | SendToOriginator
    | Finalize
    | DiscardScoreList
)


@dataclass(slots=True)
class PeerState:
    """Protocol state of one peer.

    Attributes:
        peer_id: Identifier of the peer.
        neighbors: Overlay neighbours.
        config: Run-wide protocol parameters.
        statistics: Statistics kept across queries.
        seen_qids: Queries already received.
        query: Kept copy of the current query, the one with the most hops left.
        parent: Sender of the kept copy, ``None`` at the originator.
        children: Neighbours that sent a normal score-list.
        targets: Neighbours the query was forwarded to.
        pending_neighbors: Targets still expected to answer.
        wait_deadline: Time at which waiting stops. Deadline timers firing
            earlier are stale and ignored.
        local_top: Local top-k once execution finished.
        merged_sent: Whether a merged score-list went to the parent.
        phase: Current lifecycle phase.
        ttl_out: TTL carried by the copies this peer forwards; 0 means none.
        flushed: Whether the forward step is over (always true under basic).
        delayed_targets: Candidates waiting for the Strategy 1 flush.
        outgoing: The copy sent to forward targets.
        received: Normal score-lists received since the last merge, by sender.
        extra_lists: Urgent score-lists received since the last merge.
        heard: Highest TTL each neighbour sent us the query with.
        offered: Highest ``ttl_out`` an attached list promised each listed peer.
        local_reported: Whether the local top-k already went upward.
    """

    peer_id: int
    neighbors: frozenset[int]
    config: ProtocolConfig
    statistics: StatisticsStore = field(default_factory=StatisticsStore)
    seen_qids: set[QueryId] = field(default_factory=set)
    query: QueryDescriptor | None = None
    parent: int | None = None
    children: set[int] = field(default_factory=set)
    targets: frozenset[int] = frozenset()
    pending_neighbors: set[int] = field(default_factory=set)
    wait_deadline: float | None = None
    local_top: ScoreList | None = None
    merged_sent: bool = False
    phase: Phase = Phase.IDLE
    ttl_out: int = 0
    flushed: bool = False
    delayed_targets: set[int] = field(default_factory=set)
    outgoing: QueryDescriptor | None = None
    received: dict[int, ScoreList] = field(default_factory=dict)
    extra_lists: list[ScoreList] = field(default_factory=list)
    heard: dict[int, int] = field(default_factory=dict)
    offered: dict[int, int] = field(default_factory=dict)
    local_reported: bool = False

    @property
    def is_originator(self) -> bool:
        """Return ``True`` when this peer issued the current query."""
        return self.query is not None and self.query.originator == self.peer_id

    @property
    def active_query(self) -> QueryDescriptor:
        """Return the current query or raise :class:`ProtocolError`."""
        if self.query is None:
            raise ProtocolError(ERR_NO_QUERY.format(peer=self.peer_id))
        return self.query

    @property
    def exec_done(self) -> bool:
        """Return ``True`` once the local top-k is known."""
        return self.local_top is not None


def forward_candidates(state: PeerState, query: QueryDescriptor) -> set[int]:
    """Return the neighbours ``state`` may forward ``query`` to.

    Removes the parent and whatever the heuristic filter rejects. Peers
    that already hold the query are pruned later by :func:`needs_copy`.
    """
    candidates = set(state.neighbors)
    if state.parent is not None:
        candidates.discard(state.parent)
    return select_neighbors_heuristic(
        state.statistics, query.template, candidates, query.heuristics
    )


def outgoing_copy(state: PeerState, query: QueryDescriptor, ttl_out: int) -> QueryDescriptor:
    """Return the copy ``state`` forwards, with its own attached list if needed."""
    attached = None
    if query.strategy is Strategy.STRATEGY1AND2:
        attached = frozenset(state.neighbors | {state.peer_id})
    return query.relayed(ttl_out, attached)


def needs_copy(state: PeerState, peer: int) -> bool:
    """Return ``True`` unless ``peer`` is known to hold the query with as many hops as we give.

    A neighbour that sent us the query, or a peer listed in an attached list
    of a copy we received, only needs ours when it would gain hops from it.
    """
    known = max(state.heard.get(peer, -1), state.offered.get(peer, -1))
    return known < state.ttl_out - 1


def _learn(state: PeerState, query: QueryDescriptor, sender: int) -> None:
    state.heard[sender] = max(state.heard.get(sender, -1), query.ttl)
    for peer in query.attached_peers or ():
        state.offered[peer] = max(state.offered.get(peer, -1), query.ttl - 1)


def _forward_now(state: PeerState, targets: set[int]) -> list[Action]:
    outgoing = state.outgoing
    if outgoing is None:
        raise ProtocolError(ERR_NO_QUERY.format(peer=state.peer_id))
    state.targets = state.targets | targets
    state.pending_neighbors |= targets
    state.flushed = True
    return [SendForward(target, outgoing) for target in sorted(targets)]


def _extend_deadline(state: PeerState, now: float) -> list[Action]:
    deadline = now + compute_wait_time(state.ttl_out, state.config.wait_params)
    if state.wait_deadline is not None and deadline <= state.wait_deadline:
        return []
    state.wait_deadline = deadline
    return [ScheduleDeadline(deadline)]


def handle_forward(
    state: PeerState, query: QueryDescriptor, sender: int | None, now: float
) -> list[Action]:
    """Handle a FORWARD message, or the originator issuing ``query`` when ``sender`` is None.

    A repeated copy carrying more hops than the kept one replaces it: its
    sender becomes the parent and the extra hops are passed on (see
    :func:`_raise_ttl`). Any other repeat only records what the sender
    holds, and once flushed releases the sender from the pending
    neighbours when it cannot become our child.
    """
    if query.qid in state.seen_qids:
        if sender is None:
            return []
        _learn(state, query, sender)
        if query.ttl - 1 > state.ttl_out and not state.is_originator:
            return _raise_ttl(state, query, sender, now)
        if state.flushed and query.ttl >= state.ttl_out - 1:
            state.pending_neighbors.discard(sender)
        return _maybe_complete(state, now)

    state.seen_qids.add(query.qid)
    state.query = query
    state.parent = sender
    state.phase = Phase.COLLECTING
    state.ttl_out = query.ttl if sender is None else query.ttl - 1
    if sender is not None:
        _learn(state, query, sender)
    actions: list[Action] = [ExecuteLocally()]

    candidates = forward_candidates(state, query) if state.ttl_out > 0 else set()
    if not candidates:
        state.flushed = True
        return actions

    actions.extend(_extend_deadline(state, now))
    state.outgoing = outgoing_copy(state, query, state.ttl_out)
    if query.strategy.delays_forward:
        state.delayed_targets = {peer for peer in candidates if needs_copy(state, peer)}
        actions.append(ScheduleFlush(now + state.config.lambda_sampler()))
    else:
        actions.extend(_forward_now(state, candidates))
    return actions


def _raise_ttl(
    state: PeerState, query: QueryDescriptor, sender: int, now: float
) -> list[Action]:
    """Adopt a copy with more hops left.

    Before the flush the delayed targets are recomputed and leave with the
    new TTL. After it, the new copy goes at once to every candidate that
    gains hops from it; a peer that already answered reopens collection
    and later reports only what it had not sent yet.
    """
    state.query = query
    state.parent = sender
    state.ttl_out = query.ttl - 1
    state.outgoing = outgoing_copy(state, query, state.ttl_out)
    targets = {peer for peer in forward_candidates(state, query) if needs_copy(state, peer)}
    log.debug("peer %d: ttl raised to %d by %d", state.peer_id, state.ttl_out, sender)
    if not state.flushed:
        state.delayed_targets = targets
        return _extend_deadline(state, now)
    if not targets:
        return []
    if state.phase is Phase.DONE:
        state.phase = Phase.COLLECTING
    return _extend_deadline(state, now) + _forward_now(state, targets)


def on_forward_flush(state: PeerState, now: float) -> list[Action]:
    """Send the delayed query to the targets that do not hold it with enough hops."""
    if state.phase is not Phase.COLLECTING or state.flushed:
        log.debug("peer %d: flush after completion ignored", state.peer_id)
        return []
    targets = {peer for peer in state.delayed_targets if needs_copy(state, peer)}
    state.delayed_targets = set()
    return _forward_now(state, targets) + _maybe_complete(state, now)


def on_local_execution_done(state: PeerState, local_top: ScoreList, now: float) -> list[Action]:
    """Record the local top-k; a result finished after the merge travels as a late list."""
    state.local_top = local_top
    if state.phase is Phase.COLLECTING:
        return _maybe_complete(state, now)
    state.local_reported = True
    return _late_list(state, local_top)


def handle_scorelist(
    state: PeerState, sender: int, score_list: ScoreList, now: float
) -> list[Action]:
    """Handle a normal score-list from a child."""
    state.children.add(sender)
    state.pending_neighbors.discard(sender)
    if state.phase is Phase.COLLECTING:
        state.received[sender] = score_list
        return _maybe_complete(state, now)
    return _late_list(state, score_list)


def handle_urgent_scorelist(
    state: PeerState, score_list: ScoreList, now: float, hops_left: int | None = None
) -> list[Action]:
    """Handle an urgent score-list.

    A peer still collecting merges it like any other list. A peer that
    already sent its merged list relays it to its parent at once, and the
    originator drops it once retrieval has started.
    """
    del now
    if state.phase is Phase.COLLECTING:
        state.extra_lists.append(score_list)
        return []
    if state.phase is Phase.RETRIEVAL or state.is_originator:
        return [DiscardScoreList(score_list, DiscardReason.RETRIEVAL_STARTED)]
    if state.phase is Phase.IDLE:
        return [SendToOriginator(score_list)]
    budget = state.config.urgent_hop_budget if hops_left is None else hops_left
    return [_urgent_upward(state, score_list, budget)]


def on_wait_expired(state: PeerState, now: float) -> list[Action]:
    """Merge whatever arrived and send it upward, or finalize at the originator."""
    if state.phase is not Phase.COLLECTING:
        return []
    if state.wait_deadline is not None and now < state.wait_deadline:
        return []  # superseded by a later deadline
    return _complete(state, now)


def route_on_parent_loss(
    state: PeerState,
    score_list: ScoreList,
    is_alive: Callable[[int], bool],
    hops_left: int | None = None,
) -> list[Action]:
    """Reroute a score-list whose parent is unreachable.

    The list goes as urgent to the smallest live neighbour that is neither
    the parent nor a (possible) child; without one it goes straight to the
    originator.
    """
    query = state.active_query
    budget = state.config.urgent_hop_budget if hops_left is None else hops_left
    excluded = state.children | state.pending_neighbors | {state.parent}
    eligible = sorted(n for n in state.neighbors if n not in excluded and is_alive(n))
    if eligible and budget > 0:
        return [SendScoreList(eligible[0], score_list, urgent=True, hops_left=budget - 1)]
    if is_alive(query.originator):
        return [SendToOriginator(score_list)]
    return [DiscardScoreList(score_list, DiscardReason.ORIGINATOR_LOST)]


def _urgent_upward(state: PeerState, score_list: ScoreList, hops_left: int) -> Action:
    if hops_left <= 0 or state.parent is None:
        return SendToOriginator(score_list)
    return SendScoreList(state.parent, score_list, urgent=True, hops_left=hops_left - 1)


def _late_list(state: PeerState, score_list: ScoreList) -> list[Action]:
    query = state.active_query
    if state.is_originator:
        return [DiscardScoreList(score_list, DiscardReason.RETRIEVAL_STARTED)]
    if not query.dynamic:
        return [DiscardScoreList(score_list, DiscardReason.LATE)]
    return [_urgent_upward(state, score_list, state.config.urgent_hop_budget)]


def _maybe_complete(state: PeerState, now: float) -> list[Action]:
    if (
        state.phase is Phase.COLLECTING
        and state.flushed
        and not state.pending_neighbors
        and state.exec_done
    ):
        return _complete(state, now)
    return []


def _complete(state: PeerState, now: float) -> list[Action]:
    query = state.active_query
    reopened = state.merged_sent
    lists = []
    if state.local_top is not None and not state.local_reported:
        lists.append(state.local_top)
    lists.extend(state.received[sender] for sender in sorted(state.received))
    lists.extend(state.extra_lists)
    merged = merge_score_lists(lists, query.k)
    if query.collect_statistics and not reopened:
        responses = {n: state.received.get(n, ScoreList()) for n in state.targets}
        update_statistics(state.statistics, query.template, merged, responses)
    log.debug("peer %d merged %d lists at %.3f ms", state.peer_id, len(lists), now)
    delay = state.config.merge_time_ms if state.received or state.extra_lists else 0.0
    state.received = {}
    state.extra_lists = []
    state.local_reported = state.local_top is not None
    if state.is_originator:
        state.phase = Phase.RETRIEVAL
        return [Finalize(merged)]
    state.phase = Phase.DONE
    if reopened and not merged:
        return []
    state.merged_sent = True
    if state.parent is None:
        return [SendToOriginator(merged, delay=delay)]
    return [SendScoreList(state.parent, merged, delay=delay)]


__all__ = [
    "Action",
    "DiscardReason",
    "DiscardScoreList",
    "ExecuteLocally",
    "Finalize",
    "PeerState",
    "Phase",
    "ProtocolConfig",
    "ScheduleDeadline",
    "ScheduleFlush",
    "SendForward",
    "SendScoreList",
    "SendToOriginator",
    "forward_candidates",
    "handle_forward",
    "handle_scorelist",
    "handle_urgent_scorelist",
    "needs_copy",
    "on_forward_flush",
    "on_local_execution_done",
    "on_wait_expired",
    "outgoing_copy",
    "route_on_parent_loss",
]
