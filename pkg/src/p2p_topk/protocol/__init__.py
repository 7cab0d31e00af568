"""Fully distributed top-k protocol: messages, score-lists, statistics and peer state."""

from p2p_topk.protocol.messages import (
    MessageKind,
    QueryDescriptor,
    QueryId,
    ResultItem,
    Strategy,
)
from p2p_topk.protocol.peer import PeerState, ProtocolConfig
from p2p_topk.protocol.scorelist import (
    ScoreEntry,
    ScoreList,
    build_retrieval_plan,
    merge_score_lists,
)
from p2p_topk.protocol.statistics import HeuristicConfig, HeuristicMode, StatisticsStore
from p2p_topk.protocol.timing import ProtocolError, WaitTimeParams, compute_wait_time, inflate_k

__all__ = [
    "HeuristicConfig",
    "HeuristicMode",
    "MessageKind",
    "PeerState",
    "ProtocolConfig",
    "ProtocolError",
    "QueryDescriptor",
    "QueryId",
    "ResultItem",
    "ScoreEntry",
    "ScoreList",
    "StatisticsStore",
    "Strategy",
    "WaitTimeParams",
    "build_retrieval_plan",
    "compute_wait_time",
    "inflate_k",
    "merge_score_lists",
]
