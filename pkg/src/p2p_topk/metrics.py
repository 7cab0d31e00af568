"""Run reports, closed-form message counts, the exact oracle and result accuracy."""

from __future__ import annotations

import csv
import io
from collections import Counter
from collections.abc import Iterable
from dataclasses import astuple, dataclass, fields

from p2p_topk.datastore import DatabaseCatalog
from p2p_topk.protocol.scorelist import ENTRY_BYTES, ScoreEntry, ScoreList
from p2p_topk.topology import TopologyGraph, reachable_set

CSV_COLUMNS = (
    "seed",
    "algorithm",
    "nPeers",
    "k",
    "ttl",
    "mFw",
    "mBw",
    "mRt",
    "bBw",
    "totalBytes",
    "responseTimeMs",
    "acQ",
    "lostLists",
    "urgentListsSent",
)

ERR_CSV_COLUMNS = "expected {expected} columns, got {found}"
ERR_CSV_HEADER = "unexpected CSV header {header!r}"
ERR_NPQ = "nPQ must be >= 1, got {value}"


@dataclass(frozen=True, slots=True)
class MetricsReport:
    """Outcome of one simulated query.

    Attributes:
        seed: Seed of the run.
        algorithm: Algorithm name.
        n_peers: Number of peers in the network.
        k: Number of items the user asked for.
        ttl: Time-to-live the query was issued with.
        m_fw: Forward messages.
        m_bw: Non-urgent backward messages.
        m_rt: Retrieval messages.
        b_bw: Backward score-list entry bytes.
        total_bytes: Bytes of every message kind.
        response_time_ms: Time until the originator held its result.
        ac_q: Accuracy of the returned score-list.
        lost_lists: Score-lists or item shipments that never arrived or were dropped.
        urgent_lists_sent: Urgent score-lists delivered.
    """

    seed: int
    algorithm: str
    n_peers: int
    k: int
    ttl: int
    m_fw: int
    m_bw: int
    m_rt: int
    b_bw: int
    total_bytes: int
    response_time_ms: float
    ac_q: float
    lost_lists: int
    urgent_lists_sent: int

    def to_row(self) -> list[str]:
        """Return the CSV cells; floats use ``repr`` so rows parse back exactly."""
        return [repr(value) if isinstance(value, float) else str(value) for value in astuple(self)]

    @classmethod
    def from_row(cls, row: list[str]) -> MetricsReport:
        """Parse cells written by :meth:`to_row`."""
        specs = fields(cls)
        if len(row) != len(specs):
            raise ValueError(ERR_CSV_COLUMNS.format(expected=len(specs), found=len(row)))
        converters = {"int": int, "float": float, "str": str}
        values = [
            converters[str(spec.type)](cell) for spec, cell in zip(specs, row, strict=True)
        ]
        return cls(*values)


def reports_to_csv(reports: Iterable[MetricsReport]) -> str:
    """Serialise ``reports`` with the fixed header."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(report.to_row() for report in reports)
    return buffer.getvalue()


def reports_from_csv(text: str) -> list[MetricsReport]:
    """Parse a CSV document produced by :func:`reports_to_csv`."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError(ERR_CSV_HEADER.format(header=rows[0] if rows else None))
    return [MetricsReport.from_row(row) for row in rows[1:] if row]


def oracle_for_peers(catalog: DatabaseCatalog, peers: Iterable[int], k: int) -> ScoreList:
    """Return the exact top-``k`` over the relations of ``peers``.

    Every peer contributes its own best ``k`` rows; the union is fully
    sorted and truncated.
    """
    if k <= 0:
        return ScoreList()
    union = [
        ScoreEntry(peer, item.score, item.row)
        for peer in sorted(set(peers))
        for item in catalog.top_items(peer, k)
    ]
    union.sort(key=lambda entry: (-entry.score, entry.owner, entry.row))
    return ScoreList(tuple(union[:k]))


def oracle_top_k(
    graph: TopologyGraph, catalog: DatabaseCatalog, origin: int, ttl: int, k: int
) -> ScoreList:
    """Return ``T_Q``: the exact top-``k`` over every peer within ``ttl`` hops of ``origin``."""
    return oracle_for_peers(catalog, reachable_set(graph, origin, ttl), k)


def accuracy(t_q: Iterable[ScoreEntry], t_r: Iterable[ScoreEntry]) -> float:
    """Return ``|T_Q ∩ T_r| / |T_r|`` on ``(owner, score)`` multisets; 0 for empty ``T_r``."""
    expected = Counter(entry.identity for entry in t_q)
    returned = Counter(entry.identity for entry in t_r)
    total = returned.total()
    if total == 0:
        return 0.0
    return (expected & returned).total() / total


def predict_mfw_basic(d_g: float, n_pq: int) -> float:
    """Return ``(d(G) - 1) * |P_Q| + 1`` forward messages of the basic algorithm."""
    if n_pq < 1:
        raise ValueError(ERR_NPQ.format(value=n_pq))
    return (d_g - 1.0) * n_pq + 1.0


def predict_mfw_lower_bound(n_pq: int) -> int:
    """Return ``|P_Q| - 1``: every peer but the originator must receive the query once."""
    if n_pq < 1:
        raise ValueError(ERR_NPQ.format(value=n_pq))
    return n_pq - 1


def predict_mfw_strategy1(edges_in_pq: int) -> int:
    """Return the forward messages under Strategy 1: one per edge of ``G(P_Q)``."""
    return edges_in_pq


def predict_bbw(k: int, entry_bytes: int = ENTRY_BYTES, n_pq: int = 1) -> int:
    """Return ``k * L * (|P_Q| - 1)`` backward bytes when every list is full."""
    if n_pq < 1:
        raise ValueError(ERR_NPQ.format(value=n_pq))
    return k * entry_bytes * (n_pq - 1)


__all__ = [
    "CSV_COLUMNS",
    "MetricsReport",
    "accuracy",
    "oracle_for_peers",
    "oracle_top_k",
    "predict_bbw",
    "predict_mfw_basic",
    "predict_mfw_lower_bound",
    "predict_mfw_strategy1",
    "reports_from_csv",
    "reports_to_csv",
]
