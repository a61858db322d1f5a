"""Deterministic discrete-event engine.

Simulation time is an integer number of milliseconds. Events fire in
``(fire_at, seq)`` order where ``seq`` is the insertion counter, so two events
scheduled for the same millisecond run in the order they were scheduled.

Randomness: every consumer asks :meth:`Simulator.rng` for a named sub-stream.
A sub-stream is ``random.Random("<seed>/<stream>/<entity>")``. String seeds are
hashed with SHA-512 by the stdlib, independent of ``PYTHONHASHSEED``, so adding
an entity never perturbs another entity's draws.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator


class SchedulingError(ValueError):
    """An event was scheduled before the current clock."""


@dataclass(order=True)
class Event:
    fire_at: int
    seq: int
    target: Any = field(compare=False, default=None)
    action: Callable[..., Any] | None = field(compare=False, default=None)
    args: tuple = field(compare=False, default=())
    label: str = field(compare=False, default="")
    cancelled: bool = field(compare=False, default=False)


@dataclass(frozen=True)
class RunConfig:
    seed: int
    end_time: int
    scenario: Any = None

    def __post_init__(self):
        if self.end_time <= 0:
            raise ValueError(f"end_time must be > 0, got {self.end_time}")


@dataclass(frozen=True)
class RunSummary:
    events: int
    clock: int
    trace_hash: str


def substream(seed: int, stream: str, entity: Any = None) -> random.Random:
    """Independent generator for ``(seed, stream, entity)``."""
    return random.Random(f"{seed}/{stream}/{entity}")


class Simulator:
    """Single-threaded event loop with a hashed trace.

    The trace hash covers every processed event ``(fire_at, seq, label,
    target)`` plus every record passed to :meth:`record`. Records are also kept
    in memory when ``keep_records`` is set, for writing a trace file.
    """

    def __init__(self, seed: int = 0, keep_records: bool = False):
        self.seed = seed
        self.now = 0
        self._queue: list[Event] = []
        self._seq = 0
        self._by_id: dict[int, Event] = {}
        self.events_processed = 0
        self._hasher = hashlib.sha256()
        self.records: list[dict] | None = [] if keep_records else None
        self._rngs: dict[tuple, random.Random] = {}

    # -- randomness -------------------------------------------------------
    def rng(self, stream: str, entity: Any = None) -> random.Random:
        key = (stream, entity)
        gen = self._rngs.get(key)
        if gen is None:
            gen = self._rngs[key] = substream(self.seed, stream, entity)
        return gen

    # -- scheduling -------------------------------------------------------
    def schedule(self, at: int, action: Callable[..., Any], *args,
                 target: Any = None, label: str | None = None) -> int:
        at = int(at)
        if at < self.now:
            raise SchedulingError(f"cannot schedule at t={at} ms, clock is {self.now} ms")
        ev = Event(at, self._seq, target, action, args,
                   label if label is not None else getattr(action, "__name__", "event"))
        self._seq += 1
        heapq.heappush(self._queue, ev)
        self._by_id[ev.seq] = ev
        return ev.seq

    def schedule_in(self, delay: int, action: Callable[..., Any], *args, **kw) -> int:
        return self.schedule(self.now + int(delay), action, *args, **kw)

    def cancel(self, event_id: int) -> None:
        ev = self._by_id.pop(event_id, None)
        if ev is not None:
            ev.cancelled = True

    def pending(self) -> Iterator[Event]:
        return (ev for ev in self._queue if not ev.cancelled)

    # -- tracing ----------------------------------------------------------
    def record(self, type_: str, actor: Any = None, **fields) -> None:
        rec = {"t": self.now, "type": type_, "actor": actor, **fields}
        line = json.dumps(rec, sort_keys=True, separators=(",", ":"))
        self._hasher.update(line.encode())
        self._hasher.update(b"\n")
        if self.records is not None:
            self.records.append(rec)

    @property
    def trace_hash(self) -> str:
        return self._hasher.hexdigest()

    # -- running ----------------------------------------------------------
    def step(self) -> bool:
        """Process the next live event. Returns False when the queue is empty."""
        while self._queue:
            ev = heapq.heappop(self._queue)
            if ev.cancelled:
                continue
            self._by_id.pop(ev.seq, None)
            self.now = ev.fire_at
            self._hasher.update(f"{ev.fire_at} {ev.seq} {ev.label} {ev.target}\n".encode())
            self.events_processed += 1
            if ev.action is not None:
                ev.action(*ev.args)
            return True
        return False

    def run_until(self, end: int) -> RunSummary:
        queue = self._queue
        while queue:
            head = queue[0]
            if head.cancelled:
                heapq.heappop(queue)
                continue
            if head.fire_at > end:
                break
            self.step()
        self.now = max(self.now, int(end))
        return RunSummary(self.events_processed, self.now, self.trace_hash)
