from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Any


@dataclass(order=True)
class Scheduled:
    time: int
    seq: int
    kind: str = field(compare=False)
    payload: Any = field(compare=False, default=None)


class SimClock:
    """Integer-tick event queue; ties break on scheduling order."""

    def __init__(self):
        self.now = 0
        self._queue: list[Scheduled] = []
        self._seq = 0

    def schedule(self, time: int, kind: str, payload: Any = None) -> Scheduled:
        if time < self.now:
            raise ValueError(f"cannot schedule {kind!r} at {time} before now={self.now}")
        item = Scheduled(time, self._seq, kind, payload)
        self._seq += 1
        heapq.heappush(self._queue, item)
        return item

    def peek(self) -> Scheduled | None:
        return self._queue[0] if self._queue else None

    def pop(self) -> Scheduled:
        item = heapq.heappop(self._queue)
        self.now = item.time
        return item

    def __len__(self) -> int:
        return len(self._queue)


def streams(seed: int, *names: str) -> dict[str, random.Random]:
    """Independent generators per entity class, derived from one seed.

    Keyed by name so adding or consuming one stream never shifts another.
    """
    return {name: random.Random(f"fso:{seed}:{name}") for name in names}
