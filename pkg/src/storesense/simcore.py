"""Deterministic discrete-event engine.

Virtual time is an integer microsecond counter; events with equal fire
times are processed in insertion order, so a run is fully determined by
the seed and the schedule calls.  All stochastic models draw from
per-entity streams derived from one master seed, which keeps one
entity's draws stable when another entity is added or removed.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import Callable, TextIO

US_PER_MS = 1_000
US_PER_S = 1_000_000


class SchedulingError(ValueError):
    """An event was scheduled before the current clock."""


@dataclass(frozen=True)
class Event:
    """One queued occurrence: fire time, insertion order, tag, and target."""

    fire_at: int
    seq: int
    kind: str
    target: str
    action: Callable[[], None] | None = field(default=None, compare=False, repr=False)


class RandomSource:
    """Master seed plus derived per-entity pseudo-random streams.

    A stream is derived by hashing the master seed together with the
    entity name, so the mapping is stable across runs and platforms.
    """

    def __init__(self, seed: int):
        self.seed = seed

    def stream(self, name: str) -> random.Random:
        digest = hashlib.sha256(f"{self.seed}:{name}".encode()).digest()
        return random.Random(int.from_bytes(digest[:8], "big"))


class Simulator:
    """Single-threaded event loop over an integer-microsecond clock."""

    def __init__(self, seed: int = 0, trace: TextIO | None = None):
        self.now: int = 0
        self.rng = RandomSource(seed)
        self._queue: list[tuple[int, int, Event]] = []
        self._next_seq = 0
        self._trace = trace

    def __len__(self) -> int:
        return len(self._queue)

    def schedule(
        self,
        fire_at: int,
        kind: str,
        target: str,
        action: Callable[[], None] | None = None,
    ) -> Event:
        """Queue an event at or after the current clock.

        Raises SchedulingError for fire times in the past; zero delay is
        allowed and fires on the next processing step.
        """
        if fire_at < self.now:
            raise SchedulingError(
                f"cannot schedule {kind!r} at {fire_at} us; clock is {self.now} us"
            )
        event = Event(fire_at=fire_at, seq=self._next_seq, kind=kind, target=target, action=action)
        self._next_seq += 1
        heapq.heappush(self._queue, (event.fire_at, event.seq, event))
        return event

    def after(
        self,
        delay_us: int,
        kind: str,
        target: str,
        action: Callable[[], None] | None = None,
    ) -> Event:
        return self.schedule(self.now + delay_us, kind, target, action)

    def run_until(self, t_end: int) -> int:
        """Process every event with fire_at <= t_end; leave the clock at t_end.

        Returns the number of events processed.  Actions may schedule
        further events, including at the current instant.
        """
        if t_end < self.now:
            raise SchedulingError(f"cannot run backwards to {t_end} us from {self.now} us")
        processed = 0
        while self._queue and self._queue[0][0] <= t_end:
            _, _, event = heapq.heappop(self._queue)
            assert event.fire_at >= self.now, "event queue lost time ordering"
            self.now = event.fire_at
            if self._trace is not None:
                self._trace.write(f"{event.fire_at}\t{event.seq}\t{event.kind}\t{event.target}\n")
            if event.action is not None:
                event.action()
            processed += 1
        self.now = t_end
        return processed
