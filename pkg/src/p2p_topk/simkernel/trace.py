"""Message counters and the tab-separated delivery trace they can be rebuilt from."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

from p2p_topk.protocol.messages import HEADER_BYTES, MessageKind

ERR_TRACE_LINE = "{path}:{lineno}: expected 'time seq target kind bytes', got {line!r}"

_BACKWARD_KINDS = frozenset(
    {MessageKind.SCORELIST, MessageKind.DIRECT_SCORELIST, MessageKind.DIRECT_ITEMS}
)
_RETRIEVAL_KINDS = frozenset({MessageKind.RETRIEVE_REQ, MessageKind.RETRIEVE_RESP})


class TraceError(ValueError):
    """Raised for malformed trace files."""


@dataclass(slots=True)
class MessageCounters:
    """Counters over delivered messages.

    Attributes:
        m_fw: Forward messages.
        m_bw: Non-urgent backward messages (score-lists and direct responses).
        m_rt: Retrieval requests and responses.
        b_bw: Score-list entry bytes, headers excluded.
        total_bytes: Accounted bytes of every kind.
        urgent_lists: Urgent score-lists.
    """

    m_fw: int = 0
    m_bw: int = 0
    m_rt: int = 0
    b_bw: int = 0
    total_bytes: int = 0
    urgent_lists: int = 0

    def record(self, kind: MessageKind, size_bytes: int) -> None:
        """Account one delivered message."""
        self.total_bytes += size_bytes
        if kind is MessageKind.FORWARD:
            self.m_fw += 1
        elif kind in _RETRIEVAL_KINDS:
            self.m_rt += 1
        if kind in _BACKWARD_KINDS:
            self.m_bw += 1
        if kind is MessageKind.URGENT:
            self.urgent_lists += 1
        if kind.carries_score_list:
            self.b_bw += size_bytes - HEADER_BYTES


@dataclass(slots=True)
class TraceWriter:
    """Writes one line per delivered message: ``time seq target kind bytes``."""

    stream: TextIO | None = None
    lines: list[str] = field(default_factory=list)

    def write(self, time: float, seq: int, target: int, kind: MessageKind, size: int) -> None:
        """Append one delivery record."""
        line = f"{time!r}\t{seq}\t{target}\t{kind.value}\t{size}"
        if self.stream is not None:
            self.stream.write(line + "\n")
        else:
            self.lines.append(line)


def replay_counters(path: str | Path) -> MessageCounters:
    """Rebuild the message counters of a run from its trace file."""
    counters = MessageCounters()
    trace_path = Path(path)
    with trace_path.open(encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            try:
                _time, _seq, _target, kind, size = parts
                counters.record(MessageKind(kind), int(size))
            except ValueError as exc:
                raise TraceError(
                    ERR_TRACE_LINE.format(path=trace_path, lineno=lineno, line=line)
                ) from exc
    return counters


__all__ = ["MessageCounters", "TraceError", "TraceWriter", "replay_counters"]
