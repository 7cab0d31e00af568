from __future__ import annotations

import networkx as nx
import pytest

from p2p_topk.topology import (
    TopologyConfig,
    TopologyError,
    average_degree,
    coverage_ttl,
    dump_graph,
    edges_within,
    generate_topology,
    graph_from_edges,
    hop_distances,
    load_graph,
    reachable_set,
)


def test_generate_topology_is_deterministic():
    config = TopologyConfig(200, attachment_edges=2, seed=11)
    first = generate_topology(config)
    second = generate_topology(config)
    assert list(first.edges()) == list(second.edges())
    assert first.edge_count == (200 - 2) * 2


def test_generated_graph_is_connected_and_symmetric():
    graph = generate_topology(TopologyConfig(300, attachment_edges=2, seed=5))
    assert nx.is_connected(graph.nx_graph)
    for peer in range(graph.node_count):
        for neighbor in graph.neighbors(peer):
            assert peer in graph.neighbors(neighbor)
            assert neighbor != peer


def test_average_degree_tends_to_twice_attachment():
    graph = generate_topology(TopologyConfig(2000, attachment_edges=2, seed=1))
    assert average_degree(graph, range(graph.node_count)) == pytest.approx(4.0, abs=0.05)


@pytest.mark.parametrize(
    ("config", "match"),
    [
        (TopologyConfig(0), "nodeCount"),
        (TopologyConfig(10, attachment_edges=0), "attachmentEdges"),
        (TopologyConfig(3, attachment_edges=3), "smaller than"),
    ],
)
def test_invalid_config_rejected(config, match):
    with pytest.raises(TopologyError, match=match):
        generate_topology(config)


def test_single_peer_coverage_is_zero():
    graph = graph_from_edges(1, [])
    assert coverage_ttl(graph, 0) == 0
    assert reachable_set(graph, 0, 3) == frozenset({0})


def test_reachable_set_and_coverage_on_path(path3):
    assert reachable_set(path3, 0, 0) == frozenset({0})
    assert reachable_set(path3, 0, 1) == frozenset({0, 1})
    assert reachable_set(path3, 0, 2) == frozenset({0, 1, 2})
    assert coverage_ttl(path3, 0) == 2
    assert coverage_ttl(path3, 1) == 1
    assert hop_distances(path3, 0) == {0: 0, 1: 1, 2: 2}


def test_coverage_of_disconnected_graph_fails():
    graph = graph_from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(TopologyError, match="disconnected"):
        coverage_ttl(graph, 0)


def test_negative_ttl_rejected(path3):
    with pytest.raises(TopologyError):
        reachable_set(path3, 0, -1)


def test_edges_within(triangle, star):
    assert edges_within(triangle, {0, 1, 2}) == 3
    assert edges_within(triangle, {0, 1}) == 1
    assert edges_within(star, {1, 2, 3}) == 0


def test_graph_from_edges_rejects_self_loops_and_unknown_peers():
    with pytest.raises(TopologyError):
        graph_from_edges(2, [(1, 1)])
    with pytest.raises(TopologyError):
        graph_from_edges(2, [(0, 5)])


def test_graph_from_edges_drops_duplicates():
    graph = graph_from_edges(2, [(0, 1), (1, 0), (0, 1)])
    assert graph.edge_count == 1
    assert graph.max_degree == 1


def test_dump_and_load_graph(tmp_path, ba_graph):
    target = tmp_path / "graph.txt"
    dump_graph(ba_graph, target)
    assert target.read_text(encoding="utf-8").splitlines()[0] == (
        f"nodes {ba_graph.node_count} edges {ba_graph.edge_count}"
    )
    loaded = load_graph(target)
    assert list(loaded.edges()) == list(ba_graph.edges())


def test_load_graph_rejects_bad_header(tmp_path):
    target = tmp_path / "graph.txt"
    target.write_text("vertices 3\n0 1\n", encoding="utf-8")
    with pytest.raises(TopologyError):
        load_graph(target)


def test_load_graph_rejects_wrong_edge_count(tmp_path):
    target = tmp_path / "graph.txt"
    target.write_text("nodes 3 edges 2\n0 1\n", encoding="utf-8")
    with pytest.raises(TopologyError):
        load_graph(target)
