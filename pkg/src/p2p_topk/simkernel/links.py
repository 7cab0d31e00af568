"""Link characteristics: per-edge latency and bandwidth, direct paths and access links."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from p2p_topk.simkernel.events import SimulationConfigError
from p2p_topk.topology import TopologyGraph

# independent seed streams
_EDGE_LATENCY = 0
_EDGE_BANDWIDTH = 1
_DIRECT_LATENCY = 2
_ACCESS_BANDWIDTH = 3

ERR_LINK_MEAN = "{name} must be > 0, got {value}"
ERR_LINK_VARIANCE = "{name} must be >= 0, got {value}"
ERR_NOT_AN_EDGE = "({u}, {v}) is not an overlay edge"


class Link(NamedTuple):
    """Latency in ms and bandwidth in kbps (bits per ms) of one link."""

    latency_ms: float
    bandwidth_kbps: float


@dataclass(frozen=True, slots=True)
class LinkModel:
    """Normal distributions the link characteristics are drawn from.

    Attributes:
        latency_mean_ms: Mean one-way latency.
        latency_variance: Variance of the latency in ms squared.
        bandwidth_mean_kbps: Mean bandwidth.
        bandwidth_variance: Variance of the bandwidth in kbps squared.
        seed: Seed of the draws.
    """

    latency_mean_ms: float = 200.0
    latency_variance: float = 100.0
    bandwidth_mean_kbps: float = 56.0
    bandwidth_variance: float = 32.0
    seed: int = 0

    def validate(self) -> None:
        """Raise :class:`SimulationConfigError` for unusable parameters."""
        for name in ("latency_mean_ms", "bandwidth_mean_kbps"):
            value = getattr(self, name)
            if value <= 0:
                raise SimulationConfigError(ERR_LINK_MEAN.format(name=name, value=value))
        for name in ("latency_variance", "bandwidth_variance"):
            value = getattr(self, name)
            if value < 0:
                raise SimulationConfigError(ERR_LINK_VARIANCE.format(name=name, value=value))


def transfer_time(msg_bytes: int, link: Link) -> float:
    """Return ``latency + 8 * msg_bytes / bandwidth`` in ms."""
    return link.latency_ms + 8.0 * msg_bytes / link.bandwidth_kbps


def positive_normal(
    rng: np.random.Generator, mean: float, variance: float, size: int
) -> npt.NDArray[np.float64]:
    """Draw ``size`` normal values, redrawing every non-positive one."""
    sd = math.sqrt(variance)
    values = mean + sd * rng.standard_normal(size)
    bad = values <= 0
    while bad.any():
        values[bad] = mean + sd * rng.standard_normal(int(bad.sum()))
        bad = values <= 0
    return values


@dataclass(slots=True)
class LinkTable:
    """Characteristics of every overlay edge plus direct paths between peers.

    Overlay edges draw latency and bandwidth once. Direct messages use a
    per-pair latency, drawn on first use, and the receiver's access
    bandwidth.
    """

    model: LinkModel
    node_count: int
    edge_index: dict[tuple[int, int], int]
    latencies: npt.NDArray[np.float64]
    bandwidths: npt.NDArray[np.float64]
    access_bandwidths: npt.NDArray[np.float64]
    _direct_latency: dict[tuple[int, int], float] = field(default_factory=dict)

    @classmethod
    def build(cls, graph: TopologyGraph, model: LinkModel) -> LinkTable:
        """Draw every link characteristic of ``graph`` from ``model``."""
        model.validate()
        edges = list(graph.edges())
        size = len(edges)
        latencies = positive_normal(
            np.random.default_rng([model.seed, _EDGE_LATENCY]),
            model.latency_mean_ms,
            model.latency_variance,
            size,
        )
        bandwidths = positive_normal(
            np.random.default_rng([model.seed, _EDGE_BANDWIDTH]),
            model.bandwidth_mean_kbps,
            model.bandwidth_variance,
            size,
        )
        access = positive_normal(
            np.random.default_rng([model.seed, _ACCESS_BANDWIDTH]),
            model.bandwidth_mean_kbps,
            model.bandwidth_variance,
            graph.node_count,
        )
        return cls(
            model=model,
            node_count=graph.node_count,
            edge_index={edge: i for i, edge in enumerate(edges)},
            latencies=latencies,
            bandwidths=bandwidths,
            access_bandwidths=access,
        )

    def edge(self, u: int, v: int) -> Link:
        """Return the characteristics of overlay edge ``(u, v)``."""
        key = (u, v) if u < v else (v, u)
        index = self.edge_index.get(key)
        if index is None:
            raise SimulationConfigError(ERR_NOT_AN_EDGE.format(u=u, v=v))
        return Link(float(self.latencies[index]), float(self.bandwidths[index]))

    def direct_latency(self, u: int, v: int) -> float:
        """Return the latency of the direct path between ``u`` and ``v``."""
        key = (u, v) if u < v else (v, u)
        cached = self._direct_latency.get(key)
        if cached is None:
            rng = np.random.default_rng([self.model.seed, _DIRECT_LATENCY, *key])
            cached = float(
                positive_normal(rng, self.model.latency_mean_ms, self.model.latency_variance, 1)[0]
            )
            self._direct_latency[key] = cached
        return cached

    def access_bandwidth(self, peer: int) -> float:
        """Return the bandwidth of ``peer``'s access link."""
        return float(self.access_bandwidths[peer])

    def max_overlay_transfer(self, msg_bytes: int) -> float:
        """Return the slowest overlay transfer of a ``msg_bytes`` message."""
        if self.latencies.size == 0:
            return 0.0
        return float(np.max(self.latencies + 8.0 * msg_bytes / self.bandwidths))


@dataclass(slots=True)
class IngressQueue:
    """Serialises direct transfers into each receiver's access link, first come first served."""

    busy_until: dict[int, float] = field(default_factory=dict)

    def arrival(
        self, receiver: int, now: float, latency_ms: float, serialization_ms: float
    ) -> float:
        """Return when a direct message sent at ``now`` has fully arrived."""
        start = max(now + latency_ms, self.busy_until.get(receiver, 0.0))
        done = start + serialization_ms
        self.busy_until[receiver] = done
        return done


__all__ = [
    "IngressQueue",
    "Link",
    "LinkModel",
    "LinkTable",
    "positive_normal",
    "transfer_time",
]
