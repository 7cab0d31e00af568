from __future__ import annotations

import pytest

from p2p_topk.datastore import DatabaseCatalog, DataGenConfig
from p2p_topk.simkernel.links import LinkModel
from p2p_topk.topology import TopologyConfig, TopologyGraph, generate_topology, graph_from_edges

# links so fast that only the protocol's own delays order events
INSTANT_LINKS = LinkModel(
    latency_mean_ms=0.001,
    latency_variance=0.0,
    bandwidth_mean_kbps=1e9,
    bandwidth_variance=0.0,
)

SMALL_DATA = DataGenConfig(
    tuple_count_min=30,
    tuple_count_max=60,
    payload_mean_bytes=100.0,
    payload_variance_bytes=16.0,
    seed=7,
)


@pytest.fixture
def instant_links() -> LinkModel:
    return INSTANT_LINKS


@pytest.fixture
def small_data() -> DataGenConfig:
    return SMALL_DATA


@pytest.fixture
def catalog() -> DatabaseCatalog:
    return DatabaseCatalog(SMALL_DATA, depth=20)


@pytest.fixture
def triangle() -> TopologyGraph:
    return graph_from_edges(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def path3() -> TopologyGraph:
    return graph_from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def star() -> TopologyGraph:
    return graph_from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)])


@pytest.fixture
def ba_graph() -> TopologyGraph:
    return generate_topology(TopologyConfig(60, attachment_edges=2, seed=3))
