"""Ground node state: relay flooding, friend storage and low-power duty cycling.

:meth:`MeshNode.on_receive` is the mesh-layer decision for one received
message. It returns actions and leaves the scheduling to the network that owns
the node (see :mod:`meshmule.ground`).
"""

from __future__ import annotations

import enum
from collections import OrderedDict, deque
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Sequence

from .radio import Position
from .routing import RouteTable


class NodeRole(str, enum.Enum):
    RELAY = "relay"
    FRIEND = "friend"
    LOW_POWER = "lpn"
    SENSOR_ONLY = "sensor"


RELAYING_ROLES = (NodeRole.RELAY, NodeRole.FRIEND)


class MsgKind(str, enum.Enum):
    DISCOVERY = "discovery"
    SENSOR_DATA = "data"
    FRIEND_POLL = "poll"
    FRIEND_STORE = "store"


@dataclass(frozen=True, slots=True)
class Message:
    kind: MsgKind
    origin: Any
    seq: int
    ttl: int
    hop_count: int = 0
    sink: Any = None
    created_at: int = 0
    payload_bytes: int = 0
    dest: Any = None  # None for broadcast
    hub: Any = None

    def __post_init__(self):
        if self.ttl < 0 or self.hop_count < 0:
            raise ValueError("ttl and hop_count must be >= 0")
        if self.kind is MsgKind.SENSOR_DATA and self.payload_bytes <= 0:
            raise ValueError("sensor data needs a positive payload")

    @property
    def key(self) -> tuple:
        return (self.origin, self.seq)

    @property
    def is_data(self) -> bool:
        return self.kind is MsgKind.SENSOR_DATA

    def relayed(self) -> "Message":
        return replace(self, ttl=self.ttl - 1, hop_count=self.hop_count + 1)


class DedupCache:
    """Bounded set of ``(origin, seq)``; evicts the oldest entry when full."""

    def __init__(self, capacity: int = 512):
        if capacity <= 0:
            raise ValueError("dedup capacity must be > 0")
        self.capacity = capacity
        self._entries: OrderedDict[tuple, None] = OrderedDict()

    def __contains__(self, key) -> bool:
        return key in self._entries

    def __len__(self):
        return len(self._entries)

    def add(self, key) -> bool:
        """Insert ``key``; False if it was already cached."""
        if key in self._entries:
            return False
        self._entries[key] = None
        if len(self._entries) > self.capacity:
            self._entries.popitem(last=False)
        return True


@dataclass(frozen=True)
class DutyCycle:
    wake_interval: int
    wake_duration: int
    phase: int = 0

    def __post_init__(self):
        if not 0 < self.wake_duration <= self.wake_interval:
            raise ValueError("need 0 < wake_duration <= wake_interval")

    def is_awake(self, t: int) -> bool:
        if t < self.phase:
            return False
        return (t - self.phase) % self.wake_interval < self.wake_duration

    def next_wake(self, t: int) -> int:
        """First wake start at or after ``t``."""
        if t <= self.phase:
            return self.phase
        k = -(-(t - self.phase) // self.wake_interval)
        return self.phase + k * self.wake_interval

    def windows(self, start: int, end: int) -> list[tuple[int, int]]:
        out = []
        t = self.next_wake(start)
        # include a window that began before ``start`` but is still open
        prev = t - self.wake_interval
        if prev >= self.phase and prev + self.wake_duration > start:
            out.append((max(prev, start), prev + self.wake_duration))
        while t < end:
            out.append((t, min(t + self.wake_duration, end)))
            t += self.wake_interval
        return out


class FriendQueue:
    """Per-LPN bounded store held by a Friend; overflow drops the oldest."""

    def __init__(self, capacity: int = 16):
        self.capacity = capacity
        self._queues: dict[Any, deque] = {}

    def store(self, lpn, msg: Message) -> Message | None:
        q = self._queues.setdefault(lpn, deque())
        q.append(msg)
        if len(q) > self.capacity:
            return q.popleft()
        return None

    def release(self, lpn) -> list[Message]:
        q = self._queues.pop(lpn, None)
        return list(q) if q else []

    def pending(self, lpn) -> int:
        return len(self._queues.get(lpn, ()))


@dataclass(frozen=True)
class Action:
    kind: str  # relay | store | process | drop
    msg: Message
    target: Any = None
    reason: str = ""


@dataclass
class MeshNode:
    id: int
    role: NodeRole
    pos: Position
    buffer_cap: int = 100
    dedup_capacity: int = 512
    friend_queue_cap: int = 16
    duty: DutyCycle | None = None
    buffer: deque = field(default_factory=deque)
    routes: RouteTable = field(default_factory=RouteTable)
    radio_on: bool = True
    friend: Any = None
    lpns: list = field(default_factory=list)
    tx_queue: deque = field(default_factory=deque)
    tx_busy: bool = False
    rx_busy_until: int = 0
    tx_count: int = 0
    overflow_drops: int = 0
    generated_bytes: int = 0
    last_hub_contact: dict = field(default_factory=dict)
    flush_timers: dict = field(default_factory=dict)
    batch: list = field(default_factory=list)
    awake_since: int = 0
    awake_total: int = 0
    _seq: int = 0

    def __post_init__(self):
        self.dedup = DedupCache(self.dedup_capacity)
        self.friend_queue = FriendQueue(self.friend_queue_cap)
        if self.role is NodeRole.LOW_POWER and self.duty is None:
            self.duty = DutyCycle(1000, 100, 0)
        if self.role is NodeRole.LOW_POWER:
            self.radio_on = False

    @property
    def relays(self) -> bool:
        return self.role in RELAYING_ROLES

    def next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def on_receive(self, msg: Message, sender: Any, now: int) -> list[Action]:
        """Mesh-layer handling of one delivery.

        Broadcast traffic goes through the dedup cache; a fresh copy is
        relayed by Relay/Friend nodes while ``ttl > 1`` and, for discoveries,
        stored by a Friend for each of its LPNs. Unicast data addressed to this
        node skips the cache and is handed up.
        """
        if not self.radio_on:
            return [Action("drop", msg, reason="asleep")]
        if msg.dest is not None:
            if msg.dest == self.id:
                return [Action("process", msg)]
            return [Action("drop", msg, reason="not-addressed")]
        if not self.dedup.add(msg.key):
            return [Action("drop", msg, reason="duplicate")]
        actions = []
        if self.relays and msg.ttl > 1:
            actions.append(Action("relay", msg.relayed()))
        if msg.kind is MsgKind.DISCOVERY and self.role is NodeRole.FRIEND:
            actions.extend(Action("store", msg, target=lpn) for lpn in self.lpns)
        actions.append(Action("process", msg))
        return actions

    def sample_sensor(self, now: int, payload_bytes: int, ttl: int = 16) -> tuple[Message, Message | None]:
        """Append a fresh reading to the buffer; returns it and any evicted item."""
        msg = Message(MsgKind.SENSOR_DATA, self.id, self.next_seq(), ttl,
                      created_at=now, payload_bytes=payload_bytes)
        self.generated_bytes += payload_bytes
        return msg, self.push_buffer(msg)

    def push_buffer(self, msg: Message) -> Message | None:
        self.buffer.append(msg)
        if len(self.buffer) > self.buffer_cap:
            self.overflow_drops += 1
            return self.buffer.popleft()
        return None


def establish_friendship(lpn: MeshNode, candidates: Iterable[MeshNode], radio_range: float) -> Any:
    """Bind ``lpn`` to the nearest in-range Friend (lowest id on ties).

    Returns the friend id, or None when no Friend is in range.
    """
    best = None
    for node in sorted(candidates, key=lambda n: n.id):
        if node.role is not NodeRole.FRIEND or node.id == lpn.id:
            continue
        d = lpn.pos.distance_to(node.pos)
        if d > radio_range:
            continue
        if best is None or d < best[0]:
            best = (d, node)
    if best is None:
        lpn.friend = None
        return None
    friend = best[1]
    lpn.friend = friend.id
    if lpn.id not in friend.lpns:
        friend.lpns.append(lpn.id)
    return friend.id


def bfs_distances(adjacency: dict, source) -> dict:
    """Hop distance from ``source`` over an adjacency map."""
    dist = {source: 0}
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adjacency[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


def adjacency(positions: dict, radio_range: float, ids: Sequence | None = None) -> dict:
    ids = sorted(positions) if ids is None else list(ids)
    adj = {i: [] for i in ids}
    for a_i, a in enumerate(ids):
        pa = positions[a]
        for b in ids[a_i + 1:]:
            if pa.distance_to(positions[b]) <= radio_range:
                adj[a].append(b)
                adj[b].append(a)
    return adj
