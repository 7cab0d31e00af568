"""Query descriptors, message kinds and their accounted sizes."""

from __future__ import annotations

import dataclasses
from collections.abc import Iterable
from dataclasses import dataclass
from enum import StrEnum
from typing import NamedTuple

from p2p_topk.datastore import SCORE_DESC, TopItem, check_scoring_spec
from p2p_topk.protocol.scorelist import ADDRESS_BYTES, ENTRY_BYTES, ScoreEntry, ScoreList
from p2p_topk.protocol.statistics import HeuristicConfig, QueryTemplate
from p2p_topk.protocol.timing import ProtocolError

HEADER_BYTES = 16
QID_BYTES = 10
TTL_BYTES = 1
STRATEGY_BYTES = 1
COUNT_BYTES = 4

ERR_QUERY_K = "query k must be >= 1, got {k}"
ERR_QUERY_TTL = "query ttl must be >= 0, got {ttl}"
ERR_ATTACHED_LIST = "attached peer list must be present exactly under strategy1and2"


class Strategy(StrEnum):
    """Forwarding strategies."""

    BASIC = "basic"
    STRATEGY1 = "strategy1"
    STRATEGY1AND2 = "strategy1and2"

    @property
    def delays_forward(self) -> bool:
        """Return ``True`` when forwarding waits a random delay first."""
        return self is not Strategy.BASIC


class MessageKind(StrEnum):
    """Kinds of messages exchanged during one query."""

    FORWARD = "FORWARD"
    SCORELIST = "SCORELIST"
    URGENT = "URGENT"
    DIRECT_SCORELIST = "DIRECT_SCORELIST"
    DIRECT_ITEMS = "DIRECT_ITEMS"
    RETRIEVE_REQ = "RETRIEVE_REQ"
    RETRIEVE_RESP = "RETRIEVE_RESP"

    @property
    def is_direct(self) -> bool:
        """Return ``True`` for messages sent outside the overlay edges."""
        return self in _DIRECT_KINDS

    @property
    def carries_score_list(self) -> bool:
        """Return ``True`` for kinds whose body is a score-list."""
        return self in _SCORE_LIST_KINDS


_DIRECT_KINDS = frozenset(
    {
        MessageKind.DIRECT_SCORELIST,
        MessageKind.DIRECT_ITEMS,
        MessageKind.RETRIEVE_REQ,
        MessageKind.RETRIEVE_RESP,
    }
)
_SCORE_LIST_KINDS = frozenset(
    {MessageKind.SCORELIST, MessageKind.URGENT, MessageKind.DIRECT_SCORELIST}
)


class ResultItem(NamedTuple):
    """A data item shipped to the originator, tagged with its owner."""

    owner: int
    row: int
    score: float
    payload_bytes: int

    @classmethod
    def of(cls, owner: int, item: TopItem) -> ResultItem:
        """Tag the catalog item ``item`` with ``owner``."""
        return cls(owner, item.row, item.score, item.payload_bytes)

    def to_entry(self) -> ScoreEntry:
        """Return the score-list entry describing this item."""
        return ScoreEntry(self.owner, self.score, self.row)


class QueryId(NamedTuple):
    """Unique query identifier."""

    originator: int
    counter: int


@dataclass(frozen=True, slots=True)
class QueryDescriptor:
    """A top-k query as it travels through the overlay.

    Attributes:
        qid: Unique identifier.
        k: Number of requested items (already inflated when applicable).
        ttl: Remaining hops carried by this copy.
        originator: Peer that issued the query.
        scoring_spec: Scoring function tag.
        strategy: Forwarding strategy.
        heuristics: Optional neighbour selection heuristic.
        attached_peers: Sender and its neighbours, only under ``strategy1and2``.
        dynamic: Whether late and orphaned score-lists are relayed as urgent.
        collect_statistics: Whether peers record per-neighbour statistics.
    """

    qid: QueryId
    k: int
    ttl: int
    originator: int
    scoring_spec: str = SCORE_DESC
    strategy: Strategy = Strategy.BASIC
    heuristics: HeuristicConfig | None = None
    attached_peers: frozenset[int] | None = None
    dynamic: bool = False
    collect_statistics: bool = False

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ProtocolError(ERR_QUERY_K.format(k=self.k))
        if self.ttl < 0:
            raise ProtocolError(ERR_QUERY_TTL.format(ttl=self.ttl))
        check_scoring_spec(self.scoring_spec)
        if (self.attached_peers is not None) != (self.strategy is Strategy.STRATEGY1AND2):
            raise ProtocolError(ERR_ATTACHED_LIST)

    @property
    def template(self) -> QueryTemplate:
        """Return the key under which statistics about this query are kept."""
        return self.scoring_spec, self.k

    def relayed(self, ttl: int, attached_peers: frozenset[int] | None) -> QueryDescriptor:
        """Return the copy a peer forwards with ``ttl`` and its own attached list."""
        return dataclasses.replace(self, ttl=ttl, attached_peers=attached_peers)


def forward_size(query: QueryDescriptor) -> int:
    """Return the accounted size of a FORWARD message carrying ``query``."""
    attached = len(query.attached_peers) if query.attached_peers is not None else 0
    return (
        HEADER_BYTES
        + QID_BYTES
        + TTL_BYTES
        + ADDRESS_BYTES
        + STRATEGY_BYTES
        + ADDRESS_BYTES * attached
    )


def score_list_size(entries: int) -> int:
    """Return the accounted size of a score-list message with ``entries`` couples."""
    return HEADER_BYTES + ENTRY_BYTES * entries


def retrieve_request_size() -> int:
    """Return the accounted size of a retrieval request."""
    return HEADER_BYTES + COUNT_BYTES


def items_size(items: Iterable[ResultItem]) -> int:
    """Return the accounted size of a message shipping ``items``."""
    return HEADER_BYTES + sum(item.payload_bytes for item in items)


Body = QueryDescriptor | ScoreList | tuple[ResultItem, ...] | int


@dataclass(frozen=True, slots=True)
class Message:
    """A message in flight.

    Attributes:
        kind: Message kind.
        sender: Sending peer.
        target: Receiving peer.
        qid: Query the message belongs to.
        body: Query, score-list, shipped items or requested item count.
        size_bytes: Accounted size.
        hops_left: Remaining relay budget of an urgent score-list.
    """

    kind: MessageKind
    sender: int
    target: int
    qid: QueryId
    body: Body
    size_bytes: int
    hops_left: int = 0


def make_message(
    kind: MessageKind,
    sender: int,
    target: int,
    qid: QueryId,
    body: Body,
    hops_left: int = 0,
) -> Message:
    """Build a :class:`Message` with its accounted size."""
    match body:
        case QueryDescriptor():
            size = forward_size(body)
        case ScoreList():
            size = score_list_size(len(body))
        case int():
            size = retrieve_request_size()
        case _:
            size = items_size(body)
    return Message(kind, sender, target, qid, body, size, hops_left)


__all__ = [
    "COUNT_BYTES",
    "HEADER_BYTES",
    "QID_BYTES",
    "STRATEGY_BYTES",
    "TTL_BYTES",
    "Body",
    "Message",
    "MessageKind",
    "QueryDescriptor",
    "QueryId",
    "ResultItem",
    "Strategy",
    "forward_size",
    "items_size",
    "make_message",
    "retrieve_request_size",
    "score_list_size",
]
