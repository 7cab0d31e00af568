"""Deterministic discrete-event kernel: events, links, churn, traces and the query driver."""

from p2p_topk.simkernel.churn import ChurnDistribution, ChurnModel
from p2p_topk.simkernel.engine import (
    AlgorithmFamily,
    AlgorithmSpec,
    ExecutionModel,
    Network,
    QuerySpec,
    SimulationResult,
    estimate_wait_params,
    parse_algorithm,
    run_simulation,
)
from p2p_topk.simkernel.events import EventKind, EventQueue, SimulationConfigError
from p2p_topk.simkernel.links import LinkModel, LinkTable
from p2p_topk.simkernel.trace import MessageCounters, TraceError, TraceWriter, replay_counters

__all__ = [
    "AlgorithmFamily",
    "AlgorithmSpec",
    "ChurnDistribution",
    "ChurnModel",
    "EventKind",
    "EventQueue",
    "ExecutionModel",
    "LinkModel",
    "LinkTable",
    "MessageCounters",
    "Network",
    "QuerySpec",
    "SimulationConfigError",
    "SimulationResult",
    "TraceError",
    "TraceWriter",
    "estimate_wait_params",
    "parse_algorithm",
    "replay_counters",
    "run_simulation",
]
