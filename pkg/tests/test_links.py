from __future__ import annotations

import numpy as np
import pytest

from p2p_topk.simkernel.events import SimulationConfigError
from p2p_topk.simkernel.links import (
    IngressQueue,
    Link,
    LinkModel,
    LinkTable,
    positive_normal,
    transfer_time,
)


def test_transfer_time_adds_serialization():
    # 56 kbps moves 7 bytes per ms
    assert transfer_time(700, Link(200.0, 56.0)) == pytest.approx(300.0)
    assert transfer_time(0, Link(5.0, 1.0)) == 5.0


def test_positive_normal_never_yields_non_positive():
    values = positive_normal(np.random.default_rng(1), 1.0, 4.0, 10_000)
    assert (values > 0).all()


def test_positive_normal_without_variance_is_constant():
    values = positive_normal(np.random.default_rng(1), 3.5, 0.0, 5)
    assert values.tolist() == [3.5] * 5


def test_table_is_deterministic(ba_graph):
    model = LinkModel(seed=9)
    first = LinkTable.build(ba_graph, model)
    second = LinkTable.build(ba_graph, model)
    u, v = next(ba_graph.edges())
    assert first.edge(u, v) == second.edge(v, u)
    assert first.direct_latency(0, 5) == second.direct_latency(5, 0)
    assert np.array_equal(first.access_bandwidths, second.access_bandwidths)


def test_edge_statistics_follow_model(ba_graph):
    table = LinkTable.build(ba_graph, LinkModel(200.0, 100.0, 56.0, 32.0, seed=2))
    assert table.latencies.mean() == pytest.approx(200.0, abs=4.0)
    assert (table.bandwidths > 0).all()
    slowest = table.max_overlay_transfer(100)
    assert slowest >= max(transfer_time(100, table.edge(u, v)) for u, v in ba_graph.edges())


def test_unknown_edge_rejected(path3):
    table = LinkTable.build(path3, LinkModel())
    with pytest.raises(SimulationConfigError, match="not an overlay edge"):
        table.edge(0, 2)


@pytest.mark.parametrize(
    ("model", "message"),
    [
        (LinkModel(latency_mean_ms=0.0), "latency_mean_ms"),
        (LinkModel(bandwidth_variance=-1.0), "bandwidth_variance"),
    ],
)
def test_invalid_model_rejected(model, message):
    with pytest.raises(SimulationConfigError, match=message):
        model.validate()


def test_ingress_queue_serializes_per_receiver():
    queue = IngressQueue()
    assert queue.arrival(1, 0.0, 10.0, 5.0) == 15.0
    # second transfer waits for the access link to free up
    assert queue.arrival(1, 0.0, 10.0, 5.0) == 20.0
    assert queue.arrival(2, 0.0, 10.0, 5.0) == 15.0
    assert queue.arrival(1, 100.0, 10.0, 5.0) == 115.0
