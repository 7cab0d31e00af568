"""Event queue of the discrete-event kernel."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from enum import StrEnum

ERR_PAST_EVENT = "event at {time} ms scheduled before current time {now} ms"


class SimulationConfigError(ValueError):
    """Raised for inconsistent simulation setups or kernel misuse."""


class EventKind(StrEnum):
    """What a dispatched event does."""

    DELIVER = "deliver"
    SEND = "send"
    EXEC_DONE = "exec-done"
    FLUSH = "flush"
    DEADLINE = "deadline"

    @property
    def priority(self) -> int:
        """Rank among events firing at the same time; deliveries come first."""
        return _PRIORITY[self]


_PRIORITY = {
    EventKind.DELIVER: 0,
    EventKind.SEND: 1,
    EventKind.EXEC_DONE: 2,
    EventKind.FLUSH: 3,
    EventKind.DEADLINE: 4,
}


@dataclass(frozen=True, slots=True, order=True)
class Event:
    """A scheduled event, ordered by ``(fire_time, priority, sequence)``."""

    fire_time: float
    priority: int
    sequence: int
    kind: EventKind = field(compare=False)
    target: int = field(compare=False)
    payload: object = field(default=None, compare=False)


@dataclass(slots=True)
class EventQueue:
    """Min-heap of events with a monotone clock."""

    now: float = 0.0
    dispatched: int = 0
    _heap: list[Event] = field(default_factory=list)
    _counter: itertools.count[int] = field(default_factory=itertools.count)

    def push(
        self, fire_time: float, kind: EventKind, target: int, payload: object = None
    ) -> Event:
        """Schedule an event; ``fire_time`` must not lie in the past."""
        if fire_time < self.now:
            raise SimulationConfigError(ERR_PAST_EVENT.format(time=fire_time, now=self.now))
        event = Event(fire_time, kind.priority, next(self._counter), kind, target, payload)
        heapq.heappush(self._heap, event)
        return event

    def pop(self) -> Event:
        """Remove the next event and advance the clock to its time."""
        event = heapq.heappop(self._heap)
        self.now = event.fire_time
        self.dispatched += 1
        return event

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)


__all__ = ["Event", "EventKind", "EventQueue", "SimulationConfigError"]
