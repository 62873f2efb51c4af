"""Time-ordered event queue for the simulation loop.

Ties at equal times are broken by a fixed total order on (time, kind rank,
entity id), so runs are deterministic. Kind ranks place state changes
(failure toggles) before node polls, node polls before aggregator
transfers, and the measurement probe last. Aggregator transfers are ranked
pull-down < push-up < member-poll so that information moves exactly one
tree hop per poll interval even when every phase coincides.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import IntEnum


class EventKind(IntEnum):
    FAILURE_TOGGLE = 0
    POLL_TICK = 1
    MONITOR_SWEEP = 2
    HIER_PULL = 3
    HIER_PUSH = 4
    HIER_POLL = 5
    PROBE = 6


@dataclass(frozen=True, order=True)
class Event:
    time: float
    kind: int
    entity: int


class EventQueue:
    """Min-heap of (time, kind, entity) triples with a monotone clock."""

    __slots__ = ("_heap", "now")

    def __init__(self) -> None:
        self._heap: list[tuple[float, int, int]] = []
        self.now = 0.0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, time: float, kind: int, entity: int) -> None:
        assert time >= self.now, f"event at {time} scheduled in the past (now={self.now})"
        heapq.heappush(self._heap, (time, kind, entity))

    def schedule(self, event: Event) -> None:
        self.push(event.time, event.kind, event.entity)

    def peek_time(self) -> float:
        return self._heap[0][0]

    def pop(self) -> tuple[float, int, int]:
        item = heapq.heappop(self._heap)
        self.now = item[0]
        return item
