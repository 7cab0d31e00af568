from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from p2p_topk.datastore import DatabaseCatalog, DataGenConfig
from p2p_topk.metrics import (
    accuracy,
    oracle_for_peers,
    oracle_top_k,
    predict_bbw,
    predict_mfw_basic,
)
from p2p_topk.protocol.messages import Strategy
from p2p_topk.protocol.statistics import HeuristicConfig, HeuristicMode
from p2p_topk.protocol.timing import inflate_k
from p2p_topk.simkernel import (
    AlgorithmFamily,
    ChurnDistribution,
    ChurnModel,
    ExecutionModel,
    LinkModel,
    LinkTable,
    Network,
    QuerySpec,
    SimulationConfigError,
    TraceWriter,
    estimate_wait_params,
    parse_algorithm,
    replay_counters,
    run_simulation,
)
from p2p_topk.topology import (
    TopologyConfig,
    average_degree,
    coverage_ttl,
    edges_within,
    generate_topology,
    graph_from_edges,
)
from tests.conftest import INSTANT_LINKS, SMALL_DATA

ALL_ALGORITHMS = ["fd-basic", "fd-str1", "fd-str12", "fd-basic-dynamic", "cn", "cnstar"]


def _run(
    graph,
    catalog,
    name: str,
    *,
    ttl: int | None = None,
    k: int = 5,
    originator: int = 0,
    links: LinkModel = INSTANT_LINKS,
    churn: ChurnModel | None = None,
    inflation_p: float = 0.0,
    trace: TraceWriter | None = None,
):
    return run_simulation(
        graph,
        catalog,
        parse_algorithm(name),
        QuerySpec(originator=originator, k=k, ttl=ttl, inflation_p=inflation_p),
        links,
        churn or ChurnModel(),
        seed=1,
        trace=trace,
    )


@pytest.mark.parametrize(
    "name",
    [
        "cn",
        "cnstar",
        "fd-basic",
        "fd-str1",
        "fd-str12",
        "fd-dynamic",
        "fd-basic-dynamic-stats",
        "fd-str12-stats",
    ],
)
def test_parse_algorithm_names(name):
    spec = parse_algorithm(name)
    expected = "fd-basic-dynamic" if name == "fd-dynamic" else name
    assert spec.name == expected


def test_parse_algorithm_flags():
    spec = parse_algorithm(" FD-STR12-dynamic ")
    assert spec.family is AlgorithmFamily.FD
    assert spec.strategy is Strategy.STRATEGY1AND2
    assert spec.dynamic
    assert not spec.statistics
    assert parse_algorithm("cnstar").is_baseline


@pytest.mark.parametrize("name", ["fd", "fd-str3", "fd-basic-stats-dynamic", "gossip"])
def test_parse_algorithm_rejects(name):
    with pytest.raises(SimulationConfigError, match="unknown algorithm"):
        parse_algorithm(name)


def test_wait_params_from_links(ba_graph):
    table = LinkTable.build(ba_graph, INSTANT_LINKS)
    execution = ExecutionModel(ms_per_row=0.005, merge_time_ms=1.0, wait_margin_ms=1.0)
    basic = estimate_wait_params(table, execution, SMALL_DATA, 5, Strategy.BASIC, 6)
    assert (basic.t_qsnd, basic.t_exec, basic.t_slsnd, basic.t_merge) == (2.0, 2.0, 2.0, 1.0)
    delayed = estimate_wait_params(table, execution, SMALL_DATA, 5, Strategy.STRATEGY1, 6)
    assert delayed.t_qsnd == 22.0
    budget = ExecutionModel(exec_budget_ms=10.0)
    assert estimate_wait_params(table, budget, SMALL_DATA, 5, Strategy.BASIC, 6).t_exec == 11.0


@pytest.mark.parametrize("name", ALL_ALGORITHMS)
def test_static_runs_are_exact(ba_graph, catalog, name):
    result = _run(ba_graph, catalog, name)
    assert result.report.ac_q == 1.0
    assert result.final_list == oracle_top_k(ba_graph, catalog, 0, result.report.ttl, 5)
    assert [item.score for item in result.result_set] == result.final_list.scores
    assert result.retrieval_shortfall == 0
    assert result.report.lost_lists == 0
    assert result.peers_reached == frozenset(range(ba_graph.node_count))


@pytest.mark.parametrize("name", ["fd-basic", "fd-str12", "cnstar"])
def test_exact_with_slow_links(ba_graph, catalog, name):
    result = _run(ba_graph, catalog, name, links=LinkModel(seed=4), originator=7)
    assert result.report.ac_q == 1.0
    assert result.report.response_time_ms > 0


def test_basic_forward_count_matches_closed_form(ba_graph, catalog):
    ttl = coverage_ttl(ba_graph, 0) + 1
    result = _run(ba_graph, catalog, "fd-basic", ttl=ttl)
    n = ba_graph.node_count
    expected = predict_mfw_basic(average_degree(ba_graph, range(n)), n)
    assert result.report.m_fw == pytest.approx(expected)


def test_basic_backward_traffic(ba_graph, catalog):
    result = _run(ba_graph, catalog, "fd-basic")
    n = ba_graph.node_count
    assert result.report.m_bw == n - 1
    assert result.report.b_bw == predict_bbw(5, n_pq=n)
    assert 0 < result.report.m_rt <= 2 * 5


def test_inflated_k_travels_in_score_lists(ba_graph, catalog):
    result = _run(ba_graph, catalog, "fd-basic", inflation_p=0.2)
    assert result.report.b_bw == predict_bbw(inflate_k(5, 0.2), n_pq=ba_graph.node_count)
    assert len(result.final_list) == 5
    assert result.report.ac_q == 1.0


def test_strategy_one_forward_count(ba_graph, catalog):
    ttl = ba_graph.node_count
    delayed = _run(ba_graph, catalog, "fd-str1", ttl=ttl)
    basic = _run(ba_graph, catalog, "fd-basic", ttl=ttl)
    edges = edges_within(ba_graph, range(ba_graph.node_count))
    assert delayed.report.m_fw >= edges
    assert delayed.report.m_fw < basic.report.m_fw


def _network(graph, catalog, sampler, *, lambda_max_ms: float = 20.0) -> Network:
    network = Network.build(
        graph,
        catalog,
        INSTANT_LINKS,
        ChurnModel(),
        ExecutionModel(lambda_max_ms=lambda_max_ms),
        seed=1,
    )
    network.lambda_sampler = sampler
    return network


def _layered_lambdas(seed: int = 11):
    # spread small enough that copies always arrive along shortest paths first
    rng = np.random.default_rng(seed)
    return lambda: 1000.0 + 50.0 * float(rng.random())


@pytest.mark.parametrize("name", ["fd-str1", "fd-str12"])
def test_longer_path_first_still_reaches_every_peer(catalog, name):
    # peer 3 first hears the query along 0-2-4-3 with no hop left for peer 5
    graph = graph_from_edges(6, [(0, 1), (0, 2), (1, 3), (2, 4), (4, 3), (3, 5)])
    draws = itertools.chain([1.0, 19.0], itertools.repeat(1.0))
    network = _network(graph, catalog, lambda: next(draws))
    result = network.run_query(parse_algorithm(name), QuerySpec(k=20))
    assert result.report.ttl == 3
    assert result.peers_reached == frozenset(range(6))
    assert result.final_list == oracle_top_k(graph, catalog, 0, 3, 20)
    assert result.report.ac_q == 1.0
    assert result.report.m_fw == 6
    assert result.report.lost_lists == 0


def test_strategy_one_sends_one_forward_per_edge(ba_graph, catalog):
    n = ba_graph.node_count
    network = _network(ba_graph, catalog, _layered_lambdas(), lambda_max_ms=1050.0)
    ttl = coverage_ttl(ba_graph, 0) + 1
    result = network.run_query(parse_algorithm("fd-str1"), QuerySpec(k=5, ttl=ttl))
    assert result.report.m_fw == edges_within(ba_graph, range(n))
    assert result.report.m_bw == n - 1
    assert result.report.ac_q == 1.0


def test_strategy_two_stays_within_edge_count(ba_graph, catalog):
    n = ba_graph.node_count
    network = _network(ba_graph, catalog, _layered_lambdas(), lambda_max_ms=1050.0)
    ttl = coverage_ttl(ba_graph, 0) + 1
    result = network.run_query(parse_algorithm("fd-str12"), QuerySpec(k=5, ttl=ttl))
    assert n - 1 <= result.report.m_fw <= edges_within(ba_graph, range(n))
    assert result.report.ac_q == 1.0


def test_strategy_two_on_a_clique(catalog):
    clique = graph_from_edges(4, list(itertools.combinations(range(4), 2)))
    result = _run(clique, catalog, "fd-str12", ttl=3)
    assert result.report.m_fw == 3
    assert result.report.m_fw <= edges_within(clique, range(4))
    assert result.report.ac_q == 1.0


@pytest.mark.parametrize("name", ["fd-str1", "fd-str12"])
def test_delayed_strategies_exact_at_coverage_ttl(ba_graph, catalog, name):
    for originator in (0, 17, 42):
        result = _run(ba_graph, catalog, name, originator=originator)
        ttl = coverage_ttl(ba_graph, originator)
        assert result.peers_reached == frozenset(range(ba_graph.node_count))
        assert result.final_list == oracle_top_k(ba_graph, catalog, originator, ttl, 5)


def test_strategy_two_reaches_everyone_cheaply(ba_graph, catalog):
    ttl = ba_graph.node_count
    result = _run(ba_graph, catalog, "fd-str12", ttl=ttl)
    basic = _run(ba_graph, catalog, "fd-basic", ttl=ttl)
    assert result.peers_reached == frozenset(range(ba_graph.node_count))
    assert ba_graph.node_count - 1 <= result.report.m_fw < basic.report.m_fw


@pytest.mark.parametrize("name", ["fd-basic", "fd-str1", "fd-str12"])
def test_trees_need_one_forward_per_peer(star, catalog, name):
    for originator in (0, 3):
        result = _run(star, catalog, name, originator=originator)
        assert result.report.m_fw == star.node_count - 1


def test_triangle_forward_counts(triangle, catalog):
    assert _run(triangle, catalog, "fd-basic", ttl=2).report.m_fw == 4
    assert _run(triangle, catalog, "fd-str1", ttl=2).report.m_fw == 3
    assert _run(triangle, catalog, "fd-str12", ttl=2).report.m_fw == 2


def test_baselines_ship_directly(ba_graph, catalog):
    n = ba_graph.node_count
    cn = _run(ba_graph, catalog, "cn")
    assert cn.report.m_bw == n - 1
    assert cn.report.m_rt == 0
    assert cn.report.b_bw == 0
    star_run = _run(ba_graph, catalog, "cnstar")
    assert star_run.report.m_bw == n - 1
    assert 0 < star_run.report.m_rt <= 2 * 5
    assert star_run.report.b_bw == predict_bbw(5, n_pq=n)


def test_runs_are_deterministic(ba_graph, catalog):
    links = LinkModel(seed=8)
    first = _run(ba_graph, catalog, "fd-str12-dynamic", links=links)
    second = _run(ba_graph, catalog, "fd-str12-dynamic", links=links)
    assert first.report == second.report
    assert first.result_set == second.result_set


def test_trace_replays_to_reported_counters(ba_graph, catalog, tmp_path):
    writer = TraceWriter()
    report = _run(ba_graph, catalog, "fd-str1", trace=writer).report
    path = tmp_path / "trace.tsv"
    path.write_text("\n".join(writer.lines) + "\n", encoding="utf-8")
    counters = replay_counters(path)
    assert (counters.m_fw, counters.m_bw, counters.m_rt, counters.b_bw) == (
        report.m_fw,
        report.m_bw,
        report.m_rt,
        report.b_bw,
    )
    assert counters.total_bytes == report.total_bytes


def test_invalid_queries_rejected(path3, catalog):
    with pytest.raises(SimulationConfigError, match="originator"):
        _run(path3, catalog, "fd-basic", originator=3)
    with pytest.raises(SimulationConfigError, match="k must be"):
        _run(path3, catalog, "fd-basic", k=0)


@pytest.fixture
def middle_peer_leaves(monkeypatch):
    # peer 1 leaves before any local execution can finish
    def departures(self, node_count, originator):
        return np.array([math.inf, 0.1, math.inf])

    monkeypatch.setattr(ChurnModel, "departure_times", departures)
    return ChurnModel(ChurnDistribution.FIXED, mean_lifetime_seconds=1.0)


def test_departed_parent_loses_list_without_dynamic_mode(path3, catalog, middle_peer_leaves):
    result = _run(path3, catalog, "fd-basic", churn=middle_peer_leaves)
    assert result.report.lost_lists == 1
    assert result.final_list == oracle_for_peers(catalog, [0], 5)


def test_dynamic_mode_reroutes_to_originator(path3, catalog, middle_peer_leaves):
    basic = _run(path3, catalog, "fd-basic", churn=middle_peer_leaves)
    dynamic = _run(path3, catalog, "fd-basic-dynamic", churn=middle_peer_leaves)
    assert dynamic.report.lost_lists == 0
    assert dynamic.report.m_bw == 1
    assert dynamic.final_list == oracle_for_peers(catalog, [0, 2], 5)
    assert dynamic.report.ac_q >= basic.report.ac_q


def test_statistics_persist_across_queries(ba_graph, catalog):
    network = Network.build(
        ba_graph, catalog, INSTANT_LINKS, ChurnModel(), ExecutionModel(), seed=1
    )
    algorithm = parse_algorithm("fd-basic-stats")
    heuristics = HeuristicConfig(HeuristicMode.POSITION_THRESHOLD, z=0.8)
    first = network.run_query(algorithm, QuerySpec(k=5, heuristics=heuristics, counter=0))
    assert len(network.statistics[0]) > 0
    second = network.run_query(algorithm, QuerySpec(k=5, heuristics=heuristics, counter=1))
    assert first.report.ac_q == 1.0
    assert second.report.m_fw <= predict_mfw_basic(
        average_degree(ba_graph, range(ba_graph.node_count)), ba_graph.node_count
    )


def test_filtered_run_is_scored_against_the_full_ttl_ball(ba_graph, catalog):
    # the peer with the weakest best row cannot hold the global winner
    originator = min(
        range(ba_graph.node_count), key=lambda peer: catalog.top_items(peer, 1)[0].score
    )
    network = Network.build(
        ba_graph, catalog, INSTANT_LINKS, ChurnModel(), ExecutionModel(), seed=1
    )
    algorithm = parse_algorithm("fd-str12-stats")
    heuristics = HeuristicConfig(HeuristicMode.POSITION_THRESHOLD, z=0.0)
    warm = network.run_query(
        algorithm, QuerySpec(originator=originator, k=5, heuristics=heuristics, counter=0)
    )
    assert warm.report.ac_q == 1.0
    filtered = network.run_query(
        algorithm, QuerySpec(originator=originator, k=5, heuristics=heuristics, counter=1)
    )
    ttl = filtered.report.ttl
    assert filtered.report.m_fw == 0
    assert filtered.peers_reached == frozenset({originator})
    assert filtered.final_list == oracle_for_peers(catalog, [originator], 5)
    expected = oracle_top_k(ba_graph, catalog, originator, ttl, 5)
    assert filtered.report.ac_q == accuracy(expected, filtered.final_list)
    assert filtered.report.ac_q <= 0.8


def _scale_cell(n_peers: int, seed: int, k: int, **data):
    graph = generate_topology(TopologyConfig(n_peers, attachment_edges=2, seed=seed))
    config = DataGenConfig(
        tuple_count_min=data.get("tuple_count_min", 30),
        tuple_count_max=data.get("tuple_count_max", 60),
        payload_mean_bytes=100.0,
        payload_variance_bytes=16.0,
        seed=seed,
    )
    return graph, DatabaseCatalog(config, depth=k)


@pytest.mark.slow
@pytest.mark.parametrize("n_peers", [100, 500, 2000])
@pytest.mark.parametrize("k", [1, 5, 20])
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_every_algorithm_matches_the_oracle(n_peers, k, seed):
    graph, catalog = _scale_cell(n_peers, seed, k)
    originator = seed % n_peers
    ttl = coverage_ttl(graph, originator)
    expected = oracle_top_k(graph, catalog, originator, ttl, k)
    for name in ("fd-basic", "fd-str1", "fd-str12", "cn", "cnstar"):
        result = run_simulation(
            graph,
            catalog,
            parse_algorithm(name),
            QuerySpec(originator=originator, k=k),
            LinkModel(seed=seed),
            ChurnModel(),
            seed=seed,
        )
        assert result.final_list.scores == expected.scores, name
        assert result.report.ac_q == 1.0, name
        assert result.report.m_rt <= 2 * k, name


@pytest.mark.slow
def test_backward_bytes_follow_the_closed_form():
    graph, catalog = _scale_cell(300, 5, 20, tuple_count_min=1000, tuple_count_max=1200)
    result = run_simulation(
        graph,
        catalog,
        parse_algorithm("fd-basic"),
        QuerySpec(k=20),
        LinkModel(seed=5),
        ChurnModel(),
        seed=5,
    )
    n = graph.node_count
    assert result.report.m_bw == n - 1
    assert result.report.b_bw == predict_bbw(20, n_pq=n) == 20 * 10 * (n - 1)


@pytest.mark.parametrize("name", ["fd-basic", "cn", "cnstar"])
def test_faster_links_never_slow_the_answer(ba_graph, catalog, name):
    times = []
    for bandwidth in (28.0, 56.0, 512.0, 10_000.0):
        links = LinkModel(
            latency_mean_ms=50.0,
            latency_variance=0.0,
            bandwidth_mean_kbps=bandwidth,
            bandwidth_variance=0.0,
        )
        times.append(_run(ba_graph, catalog, name, links=links).report.response_time_ms)
    assert times == sorted(times, reverse=True)


@pytest.mark.slow
def test_distributed_answer_beats_centralised_ones():
    graph, catalog = _scale_cell(1000, 4, 20)
    times = {}
    for name in ("fd-basic", "cn", "cnstar"):
        result = run_simulation(
            graph,
            catalog,
            parse_algorithm(name),
            QuerySpec(k=20),
            LinkModel(seed=4),
            ChurnModel(),
            seed=4,
        )
        times[name] = result.report.response_time_ms
    assert times["fd-basic"] < times["cn"]
    assert times["fd-basic"] < times["cnstar"]


@pytest.mark.slow
def test_rerouting_keeps_more_of_the_answer_under_churn():
    graph, catalog = _scale_cell(500, 3, 20)
    totals = {"fd-basic": 0.0, "fd-basic-dynamic": 0.0}
    lost = {"fd-basic": 0, "fd-basic-dynamic": 0}
    for seed in range(1, 6):
        churn = ChurnModel(ChurnDistribution.EXPONENTIAL, mean_lifetime_seconds=60.0, seed=seed)
        for name in totals:
            result = run_simulation(
                graph,
                catalog,
                parse_algorithm(name),
                QuerySpec(k=20),
                LinkModel(seed=seed),
                churn,
                seed=seed,
            )
            totals[name] += result.report.ac_q
            lost[name] += result.report.lost_lists
    assert totals["fd-basic-dynamic"] >= totals["fd-basic"]
    assert lost["fd-basic-dynamic"] <= lost["fd-basic"]
