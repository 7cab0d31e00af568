"""Discrete-event driver running one top-k query over a simulated overlay."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from functools import partial
from typing import cast

import numpy as np
import numpy.typing as npt

from p2p_topk.baselines import (
    BaselineAction,
    BaselineCollector,
    SendItems,
    handle_baseline_forward,
    run_cn,
    run_cnstar,
)
from p2p_topk.datastore import DatabaseCatalog, DataGenConfig
from p2p_topk.metrics import MetricsReport, accuracy, oracle_top_k
from p2p_topk.protocol.messages import (
    Body,
    Message,
    MessageKind,
    QueryDescriptor,
    QueryId,
    ResultItem,
    Strategy,
    forward_size,
    make_message,
    score_list_size,
)
from p2p_topk.protocol.peer import (
    DiscardScoreList,
    ExecuteLocally,
    Finalize,
    PeerState,
    ProtocolConfig,
    ScheduleDeadline,
    ScheduleFlush,
    SendForward,
    SendScoreList,
    SendToOriginator,
    handle_forward,
    handle_scorelist,
    handle_urgent_scorelist,
    on_forward_flush,
    on_local_execution_done,
    on_wait_expired,
    route_on_parent_loss,
)
from p2p_topk.protocol.scorelist import ScoreList, build_retrieval_plan, entry_order
from p2p_topk.protocol.statistics import HeuristicConfig, StatisticsStore
from p2p_topk.protocol.timing import WaitTimeParams, inflate_k
from p2p_topk.simkernel.churn import ChurnModel
from p2p_topk.simkernel.events import EventKind, EventQueue, SimulationConfigError
from p2p_topk.simkernel.links import IngressQueue, LinkModel, LinkTable, transfer_time
from p2p_topk.simkernel.trace import MessageCounters, TraceWriter
from p2p_topk.topology import TopologyGraph, coverage_ttl
from p2p_topk.utils import logger

log = logger.getChild("kernel")

_LAMBDA_STREAM = 5

_RETRIEVAL_KINDS = frozenset({MessageKind.RETRIEVE_REQ, MessageKind.RETRIEVE_RESP})

ERR_UNKNOWN_ALGORITHM = (
    "unknown algorithm {name!r}; expected cn, cnstar or fd-basic|fd-str1|fd-str12 "
    "with optional -dynamic and -stats suffixes"
)
ERR_ORIGINATOR = "originator {peer} is not a peer of a {count}-peer network"
ERR_EXEC_MODEL = "{name} must be >= 0, got {value}"
ERR_LAMBDA_MAX = "strategy1.lambdaMaxMs must be > 0, got {value}"
ERR_USER_K = "k must be >= 1, got {k}"


class AlgorithmFamily(StrEnum):
    """Top-level algorithm families."""

    FD = "fd"
    CN = "cn"
    CNSTAR = "cnstar"


_FD_STRATEGIES = {
    "basic": Strategy.BASIC,
    "str1": Strategy.STRATEGY1,
    "str12": Strategy.STRATEGY1AND2,
}
_STRATEGY_NAMES = {strategy: name for name, strategy in _FD_STRATEGIES.items()}


@dataclass(frozen=True, slots=True)
class AlgorithmSpec:
    """A runnable algorithm variant.

    Attributes:
        family: FD, CN or CN*.
        strategy: FD forwarding strategy (``basic`` for the baselines).
        dynamic: Relay late and orphaned score-lists as urgent lists.
        statistics: Record neighbour statistics and apply the heuristic filter.
    """

    family: AlgorithmFamily
    strategy: Strategy = Strategy.BASIC
    dynamic: bool = False
    statistics: bool = False

    @property
    def name(self) -> str:
        """Return the canonical name, e.g. ``fd-str12-stats``."""
        if self.family is not AlgorithmFamily.FD:
            return self.family.value
        parts = ["fd", _STRATEGY_NAMES[self.strategy]]
        if self.dynamic:
            parts.append("dynamic")
        if self.statistics:
            parts.append("stats")
        return "-".join(parts)

    @property
    def is_baseline(self) -> bool:
        """Return ``True`` for CN and CN*."""
        return self.family is not AlgorithmFamily.FD


def parse_algorithm(name: str) -> AlgorithmSpec:
    """Parse names such as ``cn``, ``fd-basic``, ``fd-dynamic`` or ``fd-str12-stats``."""
    text = name.strip().lower()
    if text in (AlgorithmFamily.CN, AlgorithmFamily.CNSTAR):
        return AlgorithmSpec(AlgorithmFamily(text))
    if text == "fd-dynamic":
        return AlgorithmSpec(AlgorithmFamily.FD, dynamic=True)
    parts = text.split("-")
    if len(parts) < 2 or parts[0] != "fd" or parts[1] not in _FD_STRATEGIES:  # noqa: PLR2004  # p2p-topk: family plus strategy | issue:-
        raise SimulationConfigError(ERR_UNKNOWN_ALGORITHM.format(name=name))
    suffixes = parts[2:]
    if suffixes not in ([], ["dynamic"], ["stats"], ["dynamic", "stats"]):
        raise SimulationConfigError(ERR_UNKNOWN_ALGORITHM.format(name=name))
    return AlgorithmSpec(
        AlgorithmFamily.FD,
        strategy=_FD_STRATEGIES[parts[1]],
        dynamic="dynamic" in suffixes,
        statistics="stats" in suffixes,
    )


@dataclass(frozen=True, slots=True)
class ExecutionModel:
    """Local processing costs and wait-time estimation settings.

    Attributes:
        ms_per_row: Local execution cost per stored row.
        merge_time_ms: Time spent merging before a backward send.
        wait_margin_ms: Slack added to each network-dependent wait estimate.
        exec_budget_ms: User budget for local execution; ``None`` derives it
            from the largest relation.
        lambda_max_ms: Upper bound of the Strategy 1 forwarding delay.
    """

    ms_per_row: float = 0.005
    merge_time_ms: float = 1.0
    wait_margin_ms: float = 1.0
    exec_budget_ms: float | None = None
    lambda_max_ms: float = 20.0

    def validate(self) -> None:
        """Raise :class:`SimulationConfigError` for negative costs."""
        for name in ("ms_per_row", "merge_time_ms", "wait_margin_ms"):
            value = getattr(self, name)
            if value < 0:
                raise SimulationConfigError(ERR_EXEC_MODEL.format(name=name, value=value))
        if self.exec_budget_ms is not None and self.exec_budget_ms < 0:
            raise SimulationConfigError(
                ERR_EXEC_MODEL.format(name="exec_budget_ms", value=self.exec_budget_ms)
            )
        if self.lambda_max_ms <= 0:
            raise SimulationConfigError(ERR_LAMBDA_MAX.format(value=self.lambda_max_ms))


@dataclass(frozen=True, slots=True)
class QuerySpec:
    """What the user asks for.

    Attributes:
        originator: Issuing peer.
        k: Number of wanted items.
        ttl: Hop limit; ``None`` selects the originator's coverage ttl.
        inflation_p: Probability that a top item is inaccessible; the query
            requests ``inflate_k(k, inflation_p)`` items.
        heuristics: Neighbour filter used by ``-stats`` variants.
        counter: Sequence number making the query id unique.
    """

    originator: int = 0
    k: int = 20
    ttl: int | None = None
    inflation_p: float = 0.0
    heuristics: HeuristicConfig | None = None
    counter: int = 0


@dataclass(frozen=True, slots=True)
class SimulationResult:
    """Everything a run produced.

    Attributes:
        result_set: Best ``k`` items the originator ended up holding.
        final_list: Final score-list, truncated to the user's ``k``.
        report: Counters and derived metrics.
        peers_reached: Peers that received the query.
        retrieval_shortfall: Final-list entries whose item never arrived.
    """

    result_set: tuple[ResultItem, ...]
    final_list: ScoreList
    report: MetricsReport
    peers_reached: frozenset[int]
    retrieval_shortfall: int


def estimate_wait_params(
    links: LinkTable,
    execution: ExecutionModel,
    data_config: DataGenConfig,
    k: int,
    strategy: Strategy,
    max_degree: int,
) -> WaitTimeParams:
    """Estimate the wait-time cost components from the simulated network.

    Network terms come from the slowest overlay link, the execution term
    from the largest relation (or the user budget). Each estimate is rounded
    up to a whole millisecond and padded with ``wait_margin_ms``.
    """
    attached = frozenset(range(max_degree + 1)) if strategy is Strategy.STRATEGY1AND2 else None
    largest_forward = QueryDescriptor(
        qid=QueryId(0, 0), k=k, ttl=0, originator=0, strategy=strategy, attached_peers=attached
    )
    t_qsnd = links.max_overlay_transfer(forward_size(largest_forward))
    if strategy.delays_forward:
        t_qsnd += execution.lambda_max_ms
    t_slsnd = links.max_overlay_transfer(score_list_size(k))
    t_exec = (
        execution.exec_budget_ms
        if execution.exec_budget_ms is not None
        else execution.ms_per_row * data_config.tuple_count_max
    )
    margin = execution.wait_margin_ms
    return WaitTimeParams(
        t_qsnd=math.ceil(t_qsnd) + margin,
        t_exec=math.ceil(t_exec) + margin,
        t_slsnd=math.ceil(t_slsnd) + margin,
        t_merge=execution.merge_time_ms,
    )


@dataclass(slots=True)
class Network:
    """A simulated overlay that persists across queries.

    Peer statistics survive from one query to the next so repeated queries
    can warm the heuristic filters.
    """

    graph: TopologyGraph
    catalog: DatabaseCatalog
    links: LinkTable
    churn: ChurnModel
    execution: ExecutionModel
    seed: int
    statistics: dict[int, StatisticsStore] = field(default_factory=dict)
    lambda_sampler: Callable[[], float] | None = None

    @classmethod
    def build(
        cls,
        graph: TopologyGraph,
        catalog: DatabaseCatalog,
        link_model: LinkModel,
        churn_model: ChurnModel,
        execution: ExecutionModel,
        seed: int,
    ) -> Network:
        """Draw link characteristics and validate the setup."""
        execution.validate()
        churn_model.validate()
        return cls(
            graph=graph,
            catalog=catalog,
            links=LinkTable.build(graph, link_model),
            churn=churn_model,
            execution=execution,
            seed=seed,
        )

    def run_query(
        self, algorithm: AlgorithmSpec, query: QuerySpec, trace: TraceWriter | None = None
    ) -> SimulationResult:
        """Simulate ``query`` under ``algorithm`` until no event is left."""
        if not 0 <= query.originator < self.graph.node_count:
            raise SimulationConfigError(
                ERR_ORIGINATOR.format(peer=query.originator, count=self.graph.node_count)
            )
        if query.k < 1:
            raise SimulationConfigError(ERR_USER_K.format(k=query.k))
        return _QueryRun(self, algorithm, query, trace).run()


def run_simulation(
    graph: TopologyGraph,
    catalog: DatabaseCatalog,
    algorithm: AlgorithmSpec,
    query: QuerySpec,
    link_model: LinkModel,
    churn_model: ChurnModel,
    seed: int,
    *,
    execution: ExecutionModel | None = None,
    trace: TraceWriter | None = None,
) -> SimulationResult:
    """Run one query on a fresh network; the outcome depends only on the inputs."""
    network = Network.build(
        graph, catalog, link_model, churn_model, execution or ExecutionModel(), seed
    )
    return network.run_query(algorithm, query, trace)


class _QueryRun:
    """State of a single query execution."""

    def __init__(
        self,
        network: Network,
        algorithm: AlgorithmSpec,
        spec: QuerySpec,
        trace: TraceWriter | None,
    ) -> None:
        self.network = network
        self.algorithm = algorithm
        self.spec = spec
        self.trace = trace
        self.queue = EventQueue()
        self.counters = MessageCounters()
        self.ingress = IngressQueue()
        graph = network.graph
        self.ttl = spec.ttl if spec.ttl is not None else coverage_ttl(graph, spec.originator)
        self.k = inflate_k(spec.k, spec.inflation_p)
        self.departures: npt.NDArray[np.float64] = network.churn.departure_times(
            graph.node_count, spec.originator
        )
        self.query = QueryDescriptor(
            qid=QueryId(spec.originator, spec.counter),
            k=self.k,
            ttl=self.ttl,
            originator=spec.originator,
            strategy=algorithm.strategy,
            heuristics=spec.heuristics if algorithm.statistics else None,
            attached_peers=(
                frozenset() if algorithm.strategy is Strategy.STRATEGY1AND2 else None
            ),
            dynamic=algorithm.dynamic,
            collect_statistics=algorithm.statistics,
        )
        wait_params = estimate_wait_params(
            network.links,
            network.execution,
            network.catalog.config,
            self.k,
            algorithm.strategy,
            graph.max_degree,
        )
        self.protocol = ProtocolConfig(
            wait_params=wait_params,
            merge_time_ms=network.execution.merge_time_ms,
            lambda_sampler=network.lambda_sampler or self._uniform_lambda(),
            urgent_hop_budget=self.ttl,
        )
        self.states: dict[int, PeerState] = {}
        self.collector = BaselineCollector(self.k)
        self.lost_lists = 0
        self.final_list: ScoreList | None = None
        self.retrieved: list[ResultItem] = []
        self.outstanding = 0
        self.completion_time: float | None = None
        self.time_offset = 0.0

    def _uniform_lambda(self) -> Callable[[], float]:
        rng = np.random.default_rng([self.network.seed, _LAMBDA_STREAM, self.spec.counter])
        lambda_max = self.network.execution.lambda_max_ms

        def sample() -> float:
            # uniform on (0, lambda_max]
            return lambda_max * (1.0 - float(rng.random()))

        return sample

    # liveness and state

    def _alive(self, peer: int, now: float) -> bool:
        return bool(self.departures[peer] > now)

    def _state(self, peer: int) -> PeerState:
        state = self.states.get(peer)
        if state is None:
            state = PeerState(
                peer_id=peer,
                neighbors=self.network.graph.neighbors(peer),
                config=self.protocol,
                statistics=self.network.statistics.setdefault(peer, StatisticsStore()),
            )
            self.states[peer] = state
        return state

    # sending

    def _overlay(
        self,
        sender: int,
        target: int,
        kind: MessageKind,
        body: Body,
        now: float,
        hops_left: int = 0,
    ) -> bool:
        if not self._alive(target, now):
            return False
        message = make_message(kind, sender, target, self.query.qid, body, hops_left)
        link = self.network.links.edge(sender, target)
        self.queue.push(
            now + transfer_time(message.size_bytes, link), EventKind.DELIVER, target, message
        )
        return True

    def _direct(self, sender: int, target: int, kind: MessageKind, body: Body, now: float) -> bool:
        if not self._alive(target, now):
            return False
        message = make_message(kind, sender, target, self.query.qid, body)
        links = self.network.links
        serialization = 8.0 * message.size_bytes / links.access_bandwidth(target)
        arrival = self.ingress.arrival(
            target, now, links.direct_latency(sender, target), serialization
        )
        self.queue.push(arrival, EventKind.DELIVER, target, message)
        return True

    def _send_score_list(self, peer: int, action: SendScoreList, now: float) -> None:
        kind = MessageKind.URGENT if action.urgent else MessageKind.SCORELIST
        if self._overlay(peer, action.target, kind, action.score_list, now, action.hops_left):
            return
        if not self.algorithm.dynamic:
            self.lost_lists += 1
            return
        log.debug("peer %d: target %d gone, rerouting", peer, action.target)
        reroute = route_on_parent_loss(
            self.states[peer],
            action.score_list,
            partial(self._alive, now=now),
            action.hops_left if action.urgent else None,
        )
        self._apply(peer, reroute, now)

    def _send_to_originator(self, peer: int, score_list: ScoreList, now: float) -> None:
        sent = self._direct(
            peer, self.query.originator, MessageKind.DIRECT_SCORELIST, score_list, now
        )
        if not sent:
            self.lost_lists += 1

    def _apply(self, peer: int, actions: Sequence[BaselineAction], now: float) -> None:
        for action in actions:
            match action:
                case SendForward(target=target, query=query):
                    self._overlay(peer, target, MessageKind.FORWARD, query, now)
                case ExecuteLocally():
                    cost = self.network.execution.ms_per_row * self.network.catalog.row_count(
                        peer
                    )
                    self.queue.push(now + cost, EventKind.EXEC_DONE, peer)
                case ScheduleFlush(at=at):
                    self.queue.push(at, EventKind.FLUSH, peer)
                case ScheduleDeadline(at=at):
                    self.queue.push(at, EventKind.DEADLINE, peer)
                case SendScoreList() | SendToOriginator() if action.delay > 0:
                    self.queue.push(now + action.delay, EventKind.SEND, peer, action)
                case SendScoreList():
                    self._send_score_list(peer, action, now)
                case SendToOriginator(score_list=score_list):
                    self._send_to_originator(peer, score_list, now)
                case SendItems(items=items):
                    sent = self._direct(
                        peer, self.query.originator, MessageKind.DIRECT_ITEMS, items, now
                    )
                    if not sent:
                        self.lost_lists += 1
                case Finalize(score_list=score_list):
                    self._finalize(score_list, now)
                case DiscardScoreList():
                    self.lost_lists += 1

    # originator side

    def _finalize(self, score_list: ScoreList, now: float) -> None:
        originator = self.query.originator
        self.final_list = score_list
        plan = build_retrieval_plan(score_list)
        log.debug("originator %d: retrieval plan over %d owners", originator, len(plan))
        for owner, count in plan.items():
            if owner == originator:
                items = self.network.catalog.top_items(owner, count)
                self.retrieved.extend(ResultItem.of(owner, item) for item in items)
            elif self._direct(originator, owner, MessageKind.RETRIEVE_REQ, count, now):
                self.outstanding += 1
        if self.outstanding == 0:
            self.completion_time = now

    def _retrieval_arrived(self, now: float) -> None:
        self.outstanding -= 1
        if self.outstanding == 0:
            self.completion_time = now

    # dispatch

    def _local_top(self, peer: int) -> tuple[ResultItem, ...]:
        items = self.network.catalog.top_items(peer, self.k)
        return tuple(ResultItem.of(peer, item) for item in items)

    def _on_exec_done(self, peer: int, now: float) -> None:
        items = self._local_top(peer)
        local_list = ScoreList(tuple(item.to_entry() for item in items))
        state = self.states[peer]
        family = self.algorithm.family
        if family is AlgorithmFamily.FD:
            self._apply(peer, on_local_execution_done(state, local_list, now), now)
        elif family is AlgorithmFamily.CN:
            if state.is_originator:
                self.collector.add_items(items, now)
            self._apply(peer, run_cn(state, items), now)
        else:
            if state.is_originator:
                self.collector.add_score_list(local_list, now)
            self._apply(peer, run_cnstar(state, local_list), now)

    def _on_deliver(self, message: Message, now: float) -> None:
        target = message.target
        if not self._alive(target, now):
            if message.kind.carries_score_list or message.kind is MessageKind.DIRECT_ITEMS:
                self.lost_lists += 1
            elif message.kind is MessageKind.RETRIEVE_REQ:
                self._retrieval_arrived(now)
            return
        self.counters.record(message.kind, message.size_bytes)
        if self.trace is not None:
            self.trace.write(
                now, self.queue.dispatched, target, message.kind, message.size_bytes
            )
        if message.kind in _RETRIEVAL_KINDS or message.kind is MessageKind.DIRECT_ITEMS:
            self._on_originator_message(message, now)
        else:
            self._on_protocol_message(message, now)

    def _on_forward(
        self, peer: int, sender: int | None, query: QueryDescriptor, now: float
    ) -> None:
        state = self._state(peer)
        actions: Sequence[BaselineAction]
        if self.algorithm.is_baseline:
            actions = handle_baseline_forward(state, query, sender, now)
        else:
            actions = handle_forward(state, query, sender, now)
        self._apply(peer, actions, now)

    def _on_protocol_message(self, message: Message, now: float) -> None:
        target = message.target
        if message.kind is MessageKind.FORWARD:
            self._on_forward(target, message.sender, cast(QueryDescriptor, message.body), now)
            return
        score_list = cast(ScoreList, message.body)
        actions: Sequence[BaselineAction]
        if message.kind is MessageKind.SCORELIST:
            actions = handle_scorelist(self.states[target], message.sender, score_list, now)
        elif self.algorithm.is_baseline:
            self.collector.add_score_list(score_list, now)
            return
        elif target not in self.states:
            # the query never reached this peer
            self._send_to_originator(target, score_list, now)
            return
        else:
            actions = handle_urgent_scorelist(
                self.states[target], score_list, now, message.hops_left
            )
        self._apply(target, actions, now)

    def _on_originator_message(self, message: Message, now: float) -> None:
        match message.kind:
            case MessageKind.DIRECT_ITEMS:
                self.collector.add_items(cast(tuple[ResultItem, ...], message.body), now)
            case MessageKind.RETRIEVE_REQ:
                items = self._local_top(message.target)[: cast(int, message.body)]
                self._direct(
                    message.target, message.sender, MessageKind.RETRIEVE_RESP, items, now
                )
            case MessageKind.RETRIEVE_RESP:
                self.retrieved.extend(cast(tuple[ResultItem, ...], message.body))
                self._retrieval_arrived(now)

    def _dispatch(self) -> None:
        while self.queue:
            event = self.queue.pop()
            now = event.fire_time
            peer = event.target
            if event.kind is EventKind.DELIVER:
                self._on_deliver(cast(Message, event.payload), now)
                continue
            if not self._alive(peer, now):
                if event.kind is EventKind.SEND:
                    self.lost_lists += 1
                continue
            state = self.states[peer]
            match event.kind:
                case EventKind.EXEC_DONE:
                    self._on_exec_done(peer, now)
                case EventKind.FLUSH:
                    self._apply(peer, on_forward_flush(state, now), now)
                case EventKind.DEADLINE:
                    self._apply(peer, on_wait_expired(state, now), now)
                case EventKind.SEND:
                    self._apply_delayed(peer, event.payload, now)

    def _apply_delayed(self, peer: int, action: object, now: float) -> None:
        if isinstance(action, SendScoreList):
            self._send_score_list(peer, action, now)
        elif isinstance(action, SendToOriginator):
            self._send_to_originator(peer, action.score_list, now)

    def _finish_baseline(self) -> None:
        # completion is detected once every response has arrived
        arrival = self.collector.last_arrival
        if self.algorithm.family is AlgorithmFamily.CN:
            self.final_list = ScoreList(tuple(item.to_entry() for item in self.collector.items))
            self.retrieved = list(self.collector.items)
            self.completion_time = arrival
            return
        self.time_offset = self.queue.now - arrival
        self._finalize(self.collector.score_list, self.queue.now)
        self._dispatch()

    def run(self) -> SimulationResult:
        self._on_forward(self.query.originator, None, self.query, 0.0)
        self._dispatch()
        if self.algorithm.is_baseline:
            self._finish_baseline()
        return self._result()

    def _result(self) -> SimulationResult:
        final_list = (self.final_list or ScoreList()).truncated(self.spec.k)
        result_set = tuple(
            sorted(self.retrieved, key=lambda item: entry_order(item.to_entry()))[: self.spec.k]
        )
        reached = frozenset(self.states)
        expected = oracle_top_k(
            self.network.graph, self.network.catalog, self.spec.originator, self.ttl, self.spec.k
        )
        completion = self.completion_time if self.completion_time is not None else self.queue.now
        retrieved_ids = {(item.owner, item.row) for item in self.retrieved}
        shortfall = sum(
            1
            for entry in self.final_list or ScoreList()
            if (entry.owner, entry.row) not in retrieved_ids
        )
        report = MetricsReport(
            seed=self.network.seed,
            algorithm=self.algorithm.name,
            n_peers=self.network.graph.node_count,
            k=self.spec.k,
            ttl=self.ttl,
            m_fw=self.counters.m_fw,
            m_bw=self.counters.m_bw,
            m_rt=self.counters.m_rt,
            b_bw=self.counters.b_bw,
            total_bytes=self.counters.total_bytes,
            response_time_ms=completion - self.time_offset,
            ac_q=accuracy(expected, final_list),
            lost_lists=self.lost_lists,
            urgent_lists_sent=self.counters.urgent_lists,
        )
        log.debug(
            "%s: %d peers reached, mFw=%d, %.1f ms",
            report.algorithm,
            len(reached),
            report.m_fw,
            report.response_time_ms,
        )
        return SimulationResult(
            result_set=result_set,
            final_list=final_list,
            report=report,
            peers_reached=reached,
            retrieval_shortfall=shortfall,
        )


__all__ = [
    "AlgorithmFamily",
    "AlgorithmSpec",
    "ExecutionModel",
    "Network",
    "QuerySpec",
    "SimulationResult",
    "estimate_wait_params",
    "parse_algorithm",
    "run_simulation",
]
