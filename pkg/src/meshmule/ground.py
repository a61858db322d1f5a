"""Ground mesh network served by mobile hubs.

Per-node radio model: one transmit queue drained at ``per_hop_latency`` per
frame, and a receive path that processes one frame per ``rx_proc_ms`` with a
bounded backlog. Discovery frames jump the transmit queue. Unicast frames are
only delivered to their addressee; broadcasts reach every in-range entity,
hubs included.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

from . import radio
from .des import Simulator
from .mesh import (DutyCycle, MeshNode, Message, MsgKind, NodeRole,
                   adjacency, establish_friendship)
from .metrics import DataLedger, RunMetrics, summarize
from .mobility import Trajectory, position_at
from .radio import Position, RadioParams
from .routing import FlushTimer, PolicyKind, RelayPolicy, RouteEntry, update_route

log = logging.getLogger(__name__)


@dataclass
class GroundConfig:
    radio: RadioParams = field(default_factory=lambda: RadioParams(50.0))
    policy: RelayPolicy = field(default_factory=RelayPolicy)
    end_time_ms: int = 540_000
    sample_period_ms: int = 5000
    payload_bytes: int = 20
    buffer_cap: int = 100
    ttl: int = 16
    dedup_capacity: int = 512
    tx_queue_cap: int = 64
    rx_proc_ms: int = 1
    rx_queue_cap: int = 32
    wake_interval_ms: int = 1000
    wake_duration_ms: int = 100
    lpn_aligned: bool = False
    lpn_max_awake_ms: int = 1000
    friend_queue_cap: int = 16
    flush_timeout_ms: int | None = None
    discovery_period_ms: int = 1000
    hub_range_m: float | None = None
    record_ra_trace: bool = False

    @property
    def flush_timeout(self) -> int:
        if self.flush_timeout_ms is not None:
            return self.flush_timeout_ms
        return int(round(1.2 * self.wake_interval_ms))

    @property
    def hub_radio(self) -> RadioParams:
        if self.hub_range_m is None:
            return self.radio
        return replace(self.radio, range=self.hub_range_m)


@dataclass(frozen=True)
class NodeSpec:
    id: int
    pos: Position
    role: NodeRole = NodeRole.RELAY


@dataclass(frozen=True)
class HubSpec:
    id: int
    trajectory: Trajectory


@dataclass(frozen=True)
class RaObservation:
    node: int
    at: int
    candidate: RouteEntry
    selected: RouteEntry | None = None  # the node's selection right after this candidate


class GroundNetwork:
    def __init__(self, nodes: Sequence[NodeSpec], hubs: Sequence[HubSpec], cfg: GroundConfig,
                 seed: int = 0, keep_records: bool = False, force_awake: bool = False):
        self.cfg = cfg
        self.policy = cfg.policy
        self.sim = Simulator(seed, keep_records=keep_records)
        self.ledger = DataLedger(self.sim)
        self.nodes: dict[int, MeshNode] = {}
        for spec in sorted(nodes, key=lambda s: s.id):
            self.nodes[spec.id] = MeshNode(spec.id, NodeRole(spec.role), spec.pos,
                                           buffer_cap=cfg.buffer_cap,
                                           dedup_capacity=cfg.dedup_capacity,
                                           friend_queue_cap=cfg.friend_queue_cap)
        self.hubs = {h.id: h for h in hubs}
        clash = set(self.hubs) & set(self.nodes)
        if clash:
            raise ValueError(f"hub ids collide with node ids: {sorted(clash)}")
        self.positions = {i: n.pos for i, n in self.nodes.items()}
        self.adj = adjacency(self.positions, cfg.radio.range)
        self.force_awake = force_awake
        self.ra_trace: list[RaObservation] = []
        self.hub_ticks = 0
        self.contact_floods = 0
        self._hub_seq = {h: 0 for h in self.hubs}
        self._bind_friends()

    # -- setup ------------------------------------------------------------
    def _bind_friends(self):
        cfg = self.cfg
        for node in self.nodes.values():
            if node.role is not NodeRole.LOW_POWER:
                continue
            if cfg.lpn_aligned:
                phase = 0
            else:
                phase = self.sim.rng("lpn-phase", node.id).randrange(cfg.wake_interval_ms)
            node.duty = DutyCycle(cfg.wake_interval_ms, cfg.wake_duration_ms, phase)
            friend = establish_friendship(node, self.nodes.values(), cfg.radio.range)
            if friend is None:
                log.info("LPN %s has no Friend in range; it only samples", node.id)
            if self.force_awake:
                node.radio_on = True

    def start(self):
        sim, cfg = self.sim, self.cfg
        for node in self.nodes.values():
            sim.schedule(cfg.sample_period_ms, self._sample, node, target=node.id, label="sample")
            if node.role is NodeRole.LOW_POWER and not self.force_awake:
                sim.schedule(node.duty.phase, self._lpn_wake, node, target=node.id, label="wake")
        for hub in self.hubs.values():
            sim.schedule(cfg.discovery_period_ms, self._hub_tick, hub, target=hub.id, label="hub_tick")

    def run(self, scenario: str = "", density: str = "") -> RunMetrics:
        self.start()
        summary = self.sim.run_until(self.cfg.end_time_ms)
        return self.summarize(summary, scenario=scenario, density=density)

    # -- helpers ----------------------------------------------------------
    def hub_position(self, hub_id, t: int | None = None) -> Position:
        return position_at(self.hubs[hub_id].trajectory, self.sim.now if t is None else t)

    def hub_in_range(self, node: MeshNode) -> Any:
        rng = self.cfg.hub_radio.range
        for hid in sorted(self.hubs):
            if node.pos.distance_to(self.hub_position(hid)) <= rng:
                return hid
        return None

    def _is_contact(self, node: MeshNode) -> Any:
        window = self.cfg.discovery_period_ms + self.cfg.discovery_period_ms // 2
        now = self.sim.now
        for hid in sorted(node.last_hub_contact):
            if now - node.last_hub_contact[hid] <= window:
                return hid
        return None

    def _discard(self, msg: Message, reason: str, actor=None):
        if msg.is_data:
            self.ledger.release(msg.key, reason, actor)

    def _stale(self, msg: Message) -> bool:
        return self.sim.now - msg.created_at > self.policy.freshness_limit

    def _hold(self, node: MeshNode, msg: Message):
        evicted = node.push_buffer(msg)
        if evicted is not None:
            self._discard(evicted, "overflow", node.id)

    # -- transmit path ----------------------------------------------------
    def enqueue_tx(self, node: MeshNode, msg: Message, dest=None):
        if msg.kind is MsgKind.DISCOVERY:
            node.tx_queue.appendleft((msg, dest))
        else:
            node.tx_queue.append((msg, dest))
        if len(node.tx_queue) > self.cfg.tx_queue_cap:
            # drop the oldest data frame; discoveries are never the victim
            for i, (old, _) in enumerate(node.tx_queue):
                if old.is_data:
                    del node.tx_queue[i]
                    self._discard(old, "overflow", node.id)
                    break
        if not node.tx_busy:
            self._tx_next(node)

    def _tx_next(self, node: MeshNode):
        sim, cfg = self.sim, self.cfg
        lat = cfg.radio.per_hop_latency
        while node.tx_queue:
            msg, dest = node.tx_queue.popleft()
            if msg.is_data and self._stale(msg):
                self._discard(msg, "stale", node.id)
                continue
            if dest is not None and dest in self.hubs:
                if node.pos.distance_to(self.hub_position(dest)) > cfg.hub_radio.range:
                    self._hold(node, replace(msg, dest=None))
                    continue
            node.tx_busy = True
            node.tx_count += 1
            now = sim.now
            if dest is None:
                self._broadcast(node, msg)
            else:
                self._unicast(node, msg, dest)
            sim.schedule(now + lat, self._tx_next, node, target=node.id, label="tx_next")
            return
        node.tx_busy = False

    def _broadcast(self, node: MeshNode, msg: Message):
        local = {node.id: node.pos}
        for n in self.adj[node.id]:
            local[n] = self.positions[n]
        now = self.sim.now
        for hid in self.hubs:
            local[hid] = self.hub_position(hid)
        receivers = radio.broadcast(node.id, msg, local, self.cfg.radio,
                                    self.sim.rng("radio", node.id), self._schedule_arrival, now)
        if msg.is_data:
            self.ledger.release(msg.key, "lost", node.id)
        return receivers

    def _unicast(self, node: MeshNode, msg: Message, dest):
        params = self.cfg.hub_radio if dest in self.hubs else self.cfg.radio
        target_pos = self.hub_position(dest) if dest in self.hubs else self.positions[dest]
        msg = replace(msg, dest=dest)
        if node.pos.distance_to(target_pos) > params.range:
            self._discard(msg, "lost", node.id)
            return
        p = params.loss_prob
        if p >= 1.0 or (p > 0.0 and self.sim.rng("radio", node.id).random() < p):
            self._discard(msg, "lost", node.id)
            return
        self.sim.schedule(self.sim.now + params.per_hop_latency, self._arrive, dest, msg, node.id,
                          target=dest, label="arrive")

    def _schedule_arrival(self, receiver, msg: Message, sender, at: int):
        if msg.is_data:
            self.ledger.hold(msg.key)
        self.sim.schedule(at, self._arrive, receiver, msg, sender, target=receiver, label="arrive")

    # -- receive path -----------------------------------------------------
    def _arrive(self, receiver, msg: Message, sender):
        if receiver in self.hubs:
            self._hub_receive(receiver, msg, sender)
            return
        node = self.nodes[receiver]
        if not node.radio_on:
            self._discard(msg, "lost", node.id)
            return
        now = self.sim.now
        proc = self.cfg.rx_proc_ms
        start = max(now, node.rx_busy_until)
        if proc > 0 and (start - now) // proc >= self.cfg.rx_queue_cap:
            self._discard(msg, "overflow", node.id)
            return
        node.rx_busy_until = start + proc
        if start == now:
            self._process(node, msg, sender)
        else:
            self.sim.schedule(start, self._process, node, msg, sender, target=node.id, label="process")

    def _process(self, node: MeshNode, msg: Message, sender):
        if msg.kind is MsgKind.DISCOVERY:
            if sender in self.hubs:
                self._on_hub_discovery(node, msg, sender)
            else:
                self.on_ra(node, msg, sender)
            return
        if msg.dest is None:
            self._on_flooded_data(node, msg, sender)
        else:
            self._on_routed_data(node, msg, sender)

    def _hub_receive(self, hub, msg: Message, sender):
        if not msg.is_data:
            return
        self.ledger.record_delivery(msg.key, self.sim.now, hub)
        self.ledger.release(msg.key, "consumed", hub)

    # -- hub discovery ----------------------------------------------------
    def _hub_tick(self, hub: HubSpec):
        """One discovery broadcast; in-range awake ground nodes become contacts."""
        sim = self.sim
        self.hub_ticks += 1
        self._hub_seq[hub.id] += 1
        msg = Message(MsgKind.DISCOVERY, hub.id, self._hub_seq[hub.id], 1,
                      created_at=sim.now, hub=hub.id)
        local = dict(self.positions)
        local[hub.id] = self.hub_position(hub.id)
        radio.broadcast(hub.id, msg, local, self.cfg.hub_radio, sim.rng("radio", hub.id),
                        self._schedule_arrival, sim.now)
        sim.record("hub_tick", hub.id, seq=msg.seq)
        sim.schedule(sim.now + self.cfg.discovery_period_ms, self._hub_tick, hub,
                     target=hub.id, label="hub_tick")

    def _on_hub_discovery(self, node: MeshNode, msg: Message, hub):
        if node.role is NodeRole.LOW_POWER:
            return
        now = self.sim.now
        node.last_hub_contact[hub] = now
        ra = Message(MsgKind.DISCOVERY, node.id, node.next_seq(), self.cfg.ttl, 0,
                     sink=node.id, created_at=now, hub=hub)
        node.dedup.add(ra.key)
        self.contact_floods += 1
        self.sim.record("ra_origin", node.id, seq=ra.seq, hub=hub)
        self.enqueue_tx(node, ra)
        self._emit_buffer(node)
        if node.role is NodeRole.FRIEND and self.policy.routed:
            self._arm_flush(node, node.id)

    def advertise(self, node_id, hub=None) -> None:
        """Have ``node_id`` originate a routing advertisement now, as a fresh contact would."""
        self._on_hub_discovery(self.nodes[node_id], None, hub)

    # -- routing advertisements ------------------------------------------
    def on_ra(self, node: MeshNode, msg: Message, sender):
        now = self.sim.now
        if node.role is not NodeRole.LOW_POWER and msg.sink != node.id:
            cand = RouteEntry(msg.sink, sender, msg.hop_count + 1, now)
            update_route(node.routes, cand, self.policy, now)
            if self.cfg.record_ra_trace:
                self.ra_trace.append(RaObservation(node.id, now, cand, node.routes.selected))
        fresh = False
        for act in node.on_receive(msg, sender, now):
            if act.kind == "relay":
                self.enqueue_tx(node, act.msg)
            elif act.kind == "store":
                self.nodes[node.id].friend_queue.store(act.target, act.msg)
            elif act.kind == "process":
                fresh = True
        if not fresh:
            return
        if node.role is NodeRole.LOW_POWER:
            self._lpn_offload(node)
            return
        self._emit_buffer(node)
        if node.role is NodeRole.FRIEND and self.policy.routed:
            self._arm_flush(node, msg.sink)

    # -- data -------------------------------------------------------------
    def _emit_buffer(self, node: MeshNode):
        if not node.buffer:
            return
        items = list(node.buffer)
        node.buffer.clear()
        for msg in items:
            self.forward_data(node, msg)

    def forward_data(self, node: MeshNode, msg: Message):
        """Send one data item this node currently holds, or keep holding it."""
        if self._stale(msg):
            self._discard(msg, "stale", node.id)
            return
        cfg = self.cfg
        if node.role is NodeRole.LOW_POWER:
            if node.friend is None:
                self._hold(node, msg)
            else:
                self.enqueue_tx(node, replace(msg, ttl=cfg.ttl), node.friend)
            return
        if not self.policy.routed:
            node.dedup.add(msg.key)
            self.enqueue_tx(node, replace(msg, ttl=cfg.ttl, dest=None))
            return
        hub = self._is_contact(node)
        if hub is not None:
            self.enqueue_tx(node, replace(msg, sink=node.id), hub)
            return
        route = node.routes.selected
        if route is None:
            self._hold(node, msg)
            return
        self.enqueue_tx(node, replace(msg, ttl=cfg.ttl, sink=route.sink), route.next_hop)

    def _route_along(self, node: MeshNode, msg: Message, route: RouteEntry | None):
        if route is None:
            self._hold(node, replace(msg, dest=None))
            return
        if msg.ttl <= 1:
            self._discard(msg, "lost", node.id)
            return
        self.enqueue_tx(node, replace(msg, ttl=msg.ttl - 1, hop_count=msg.hop_count + 1,
                                      sink=route.sink), route.next_hop)

    def _on_routed_data(self, node: MeshNode, msg: Message, sender):
        acts = node.on_receive(msg, sender, self.sim.now)
        if acts[0].kind != "process":
            self._discard(msg, "lost", node.id)
            return
        if self._stale(msg):
            self._discard(msg, "stale", node.id)
            return
        msg = replace(msg, dest=None)
        if node.role is NodeRole.FRIEND and sender in node.lpns:
            if not self.policy.routed:
                node.dedup.add(msg.key)
                self.enqueue_tx(node, replace(msg, ttl=self.cfg.ttl))
            elif node.flush_timers:
                node.batch.append(msg)
            else:
                self._hold(node, msg)
            return
        if msg.sink == node.id:
            hub = self._is_contact(node)
            if hub is not None:
                self.enqueue_tx(node, msg, hub)
            else:
                self._hold(node, msg)
            return
        self._route_along(node, msg, node.routes.entries.get(msg.sink) or node.routes.selected)

    def _on_flooded_data(self, node: MeshNode, msg: Message, sender):
        for act in node.on_receive(msg, sender, self.sim.now):
            if act.kind == "relay":
                self.ledger.hold(act.msg.key)
                self.enqueue_tx(node, act.msg)
        self._discard(msg, "lost", node.id)

    # -- friend flush -----------------------------------------------------
    def _arm_flush(self, friend: MeshNode, sink):
        if sink in friend.flush_timers:
            return
        expires = self.sim.now + self.cfg.flush_timeout
        friend.flush_timers[sink] = FlushTimer(friend.id, sink, expires)
        self.sim.schedule(expires, self.fn_flush, friend, sink, target=friend.id, label="flush")

    def fn_flush(self, friend: MeshNode, sink):
        """Timer expiry: send the LPN batch toward ``sink`` over the learned route."""
        friend.flush_timers.pop(sink, None)
        if not friend.batch:
            return
        batch, friend.batch = friend.batch, []
        self.sim.record("flush", friend.id, sink=sink, items=len(batch))
        for msg in batch:
            if self._stale(msg):
                self._discard(msg, "stale", friend.id)
            elif sink == friend.id:
                hub = self._is_contact(friend)
                if hub is not None:
                    self.enqueue_tx(friend, replace(msg, sink=friend.id), hub)
                else:
                    self._hold(friend, msg)
            else:
                route = friend.routes.entries.get(sink)
                if route is None:
                    self._hold(friend, msg)
                else:
                    self.enqueue_tx(friend, replace(msg, ttl=self.cfg.ttl, sink=sink), route.next_hop)

    # -- low-power nodes --------------------------------------------------
    def _lpn_wake(self, node: MeshNode):
        sim, cfg = self.sim, self.cfg
        now = sim.now
        node.radio_on = True
        node.awake_since = now
        sim.schedule(now + node.duty.wake_interval, self._lpn_wake, node, target=node.id, label="wake")
        stay = node.duty.wake_duration
        if node.friend is not None:
            friend = self.nodes[node.friend]
            stored = friend.friend_queue.release(node.id)
            lat = cfg.radio.per_hop_latency
            for i, m in enumerate(stored):
                sim.schedule(now + lat * (i + 1), self._arrive, node.id, m, friend.id,
                             target=node.id, label="poll_reply")
            stay = max(stay, lat * (len(stored) + 1))
        sim.schedule(now + stay, self._lpn_try_sleep, node, target=node.id, label="sleep")

    def _lpn_try_sleep(self, node: MeshNode):
        now = self.sim.now
        if not node.radio_on:
            return
        busy = node.tx_busy or node.tx_queue or node.rx_busy_until > now
        if busy and now - node.awake_since < self.cfg.lpn_max_awake_ms:
            self.sim.schedule(now + self.cfg.radio.per_hop_latency, self._lpn_try_sleep, node,
                              target=node.id, label="sleep")
            return
        node.radio_on = False
        node.awake_total += now - node.awake_since

    def _lpn_offload(self, node: MeshNode):
        if node.friend is None:
            return
        self._emit_buffer(node)

    # -- sensing ----------------------------------------------------------
    def _sample(self, node: MeshNode):
        now = self.sim.now
        msg, evicted = node.sample_sensor(now, self.cfg.payload_bytes, self.cfg.ttl)
        self.ledger.generate(msg.key, msg.payload_bytes, now, node.id)
        if evicted is not None:
            self._discard(evicted, "overflow", node.id)
        self.sim.schedule(now + self.cfg.sample_period_ms, self._sample, node,
                          target=node.id, label="sample")

    # -- accounting -------------------------------------------------------
    def scan_in_flight(self) -> set:
        keys = set()
        for node in self.nodes.values():
            keys.update(m.key for m in node.buffer if m.is_data)
            keys.update(m.key for m, _ in node.tx_queue if m.is_data)
            keys.update(m.key for m in node.batch)
        for ev in self.sim.pending():
            for a in ev.args:
                if isinstance(a, Message) and a.is_data:
                    keys.add(a.key)
        return keys

    def lpn_duty_fraction(self) -> float | None:
        lpns = [n for n in self.nodes.values() if n.role is NodeRole.LOW_POWER]
        if not lpns or self.force_awake:
            return None
        end = self.sim.now
        total = 0
        for n in lpns:
            on = n.awake_total + (end - n.awake_since if n.radio_on else 0)
            total += on
        return total / (len(lpns) * end) if end else None

    def summarize(self, summary=None, strict: bool = False, **meta) -> RunMetrics:
        pol = self.policy
        m = summarize(self.ledger, self.scan_in_flight(), strict=strict,
                      kind="ground", strategy=pol.kind.value, seed=self.sim.seed,
                      delta_ms=pol.delta if pol.kind is PolicyKind.MAM1 else None, **meta)
        m.relay_tx = {i: n.tx_count for i, n in self.nodes.items()}
        m.lpn_duty_fraction = self.lpn_duty_fraction()
        m.events = self.sim.events_processed
        m.final_clock_ms = self.sim.now
        m.trace_hash = self.sim.trace_hash
        m.extra = {"hub_ticks": self.hub_ticks, "contact_floods": self.contact_floods}
        return m
