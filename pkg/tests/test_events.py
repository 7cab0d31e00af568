from __future__ import annotations

import pytest

from p2p_topk.simkernel.events import EventKind, EventQueue, SimulationConfigError


def test_events_pop_in_time_order():
    queue = EventQueue()
    queue.push(5.0, EventKind.DEADLINE, 1)
    queue.push(1.0, EventKind.FLUSH, 2)
    queue.push(3.0, EventKind.DELIVER, 3)
    assert [queue.pop().fire_time for _ in range(3)] == [1.0, 3.0, 5.0]
    assert queue.now == 5.0
    assert queue.dispatched == 3
    assert not queue


def test_ties_break_by_kind_then_insertion():
    queue = EventQueue()
    queue.push(2.0, EventKind.DEADLINE, 0)
    queue.push(2.0, EventKind.DELIVER, 1, "first")
    queue.push(2.0, EventKind.EXEC_DONE, 2)
    queue.push(2.0, EventKind.DELIVER, 3, "second")
    order = [queue.pop() for _ in range(len(queue))]
    assert [event.kind for event in order] == [
        EventKind.DELIVER,
        EventKind.DELIVER,
        EventKind.EXEC_DONE,
        EventKind.DEADLINE,
    ]
    assert [event.payload for event in order[:2]] == ["first", "second"]


def test_priorities_put_deliveries_first():
    ranks = [kind.priority for kind in EventKind]
    assert ranks == sorted(ranks)
    assert EventKind.DELIVER.priority == 0


def test_scheduling_in_the_past_fails():
    queue = EventQueue()
    queue.push(4.0, EventKind.SEND, 0)
    queue.pop()
    with pytest.raises(SimulationConfigError, match="before current time"):
        queue.push(3.0, EventKind.SEND, 0)
