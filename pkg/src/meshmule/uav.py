"""UAV fleet data collection: DADCA segment patrol and the TSP-Ferry baseline.

Every DADCA agent plans the same open path from the ground station through all
POIs and owns an arc interval ``[lo, hi]`` of it. It bounces inside that
interval and, at an inner boundary, waits for the neighbour that shares it:
until ``meet_wait`` past the time that neighbour is expected back, judged from
their last rendezvous. Any encounter in radio range swaps rosters and moves
data one hop towards the ground station; only a rendezvous at the boundary
turns the two agents around.

A shared boundary is only ever moved by the two agents that share it, at a
meeting, and both compute the same value from their merged rosters. That keeps
the division consistent without any agent knowing the whole fleet state.

Agents never see the simulator; :class:`AirSim` only hands them their own
clock tick and the :class:`Hello` of a peer that is within radio range.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .des import Simulator
from .metrics import DataLedger, RunMetrics, summarize
from .radio import Position
from .tours import (OpCounter, Polyline, Tour, nearest_neighbor, partition_tour,
                    tour_length, two_opt)

log = logging.getLogger(__name__)

STRATEGIES = ("dadca-naive", "dadca-parted", "dadca-2opt", "dadca-2opt-cut", "tsp-ferry")
GS = 0  # vertex index of the ground station in every planning point list


@dataclass(frozen=True, slots=True)
class Item:
    origin: int
    seq: int
    nbytes: int
    created_at: int

    @property
    def key(self):
        return (self.origin, self.seq)


# -- planning -----------------------------------------------------------------

def plan_points(gs: Position, pois: Sequence[Position]) -> list[Position]:
    return [gs, *pois]


def plan_path(points: Sequence[Position], strategy: str, k: int,
              counter: OpCounter | None = None) -> Tour:
    """Open visiting order that starts at the ground station (vertex 0)."""
    n = len(points)
    if n < 2:
        raise ValueError("need at least one POI")
    if strategy == "dadca-naive":
        return nearest_neighbor(points, GS, closed=False, counter=counter)
    if strategy == "dadca-2opt":
        return two_opt(nearest_neighbor(points, GS, closed=False, counter=counter), points, counter)
    if strategy == "dadca-2opt-cut":
        loop = closed_tour(points, counter)
        i = loop.order.index(GS)
        order = loop.order[i:] + loop.order[:i]
        return Tour(order, tour_length(order, points, False, counter), False)
    if strategy == "dadca-parted":
        return parted_path(points, k, counter)
    raise ValueError(f"unknown DADCA strategy {strategy!r}")


def closed_tour(points: Sequence[Position], counter: OpCounter | None = None) -> Tour:
    return two_opt(nearest_neighbor(points, GS, closed=True, counter=counter), points, counter)


def parted_path(points: Sequence[Position], k: int, counter: OpCounter | None = None) -> Tour:
    """POIs split into ``k`` bands by distance from the GS, nearest-neighbour inside each."""
    gs = points[GS]
    ranked = sorted(range(1, len(points)), key=lambda i: (gs.distance_to(points[i]), i))
    k = max(1, min(k, len(ranked)))
    bands = [ranked[len(ranked) * b // k: len(ranked) * (b + 1) // k] for b in range(k)]
    order = [GS]
    for band in bands:
        part = nearest_neighbor(points, order[-1], closed=False, ids=[order[-1], *band],
                                counter=counter)
        order.extend(part.order[1:])
    return Tour(tuple(order), tour_length(order, points, False, counter), False)


# -- DADCA agent ---------------------------------------------------------------

@dataclass(frozen=True)
class RosterEntry:
    key: float
    alive: bool
    stamp: int
    speed: float


def _newer(a: RosterEntry, b: RosterEntry) -> RosterEntry:
    if a.stamp != b.stamp:
        return a if a.stamp > b.stamp else b
    return a if not a.alive else b


@dataclass(frozen=True)
class Hello:
    id: Any
    key: float
    roster: dict
    lo: float = 0.0
    hi: float = 0.0
    speed: float = 1.0
    searching: tuple = (False, False)


@dataclass
class MeetingRecord:
    a: Any  # ground-station side
    b: Any
    at: int
    exchanged_bytes: int
    boundary: float | None


class DadcaAgent:
    def __init__(self, uid, key: float, speed: float, points: Sequence[Position], strategy: str,
                 fleet: dict, meet_wait_ms: int = 30_000, miss_threshold: int = 2,
                 buffer_cap: int = 10_000, start: str = "midpoint", slack: float = 0.5,
                 reach: float = 50.0):
        self.id = uid
        self.reach = reach
        self.key = key
        self.speed = speed
        self.meet_wait_ms = meet_wait_ms
        self.miss_threshold = miss_threshold
        self.buffer_cap = buffer_cap
        self.slack = slack
        self.buffer: list[Item] = []
        self.init_counter = OpCounter()
        self.replan_counter = OpCounter()
        self.replans = 0
        self.tour = plan_path(points, strategy, len(fleet), self.init_counter)
        self.path = Polyline(self.tour.order, points, closed=False, counter=self.init_counter)
        self.roster: dict[Any, RosterEntry] = {
            i: RosterEntry(k, True, 0, v) for i, (k, v) in fleet.items()}
        self._bounds_key = None
        self._bounds: list[float] = []
        self.heading = 1
        self.waiting_until: int | None = None
        self.misses = {-1: 0, 1: 0}
        self.searching = {-1: False, 1: False}
        self.meetings = 0
        self.missed_meetings = 0
        self.declared: list[tuple[int, Any]] = []  # (time, uav declared dead)
        # neighbour id -> (time of last meeting, its round-trip time in ms)
        self.last_meet: dict[Any, tuple[int, float]] = {}
        if start == "gs":
            self.lo, self.hi = 0.0, self.path.length
            self.searching[1] = self.neighbour(1) is not None
            self.s = 0.0
        else:
            bounds = self.bounds()
            r = self.rank()
            self.lo, self.hi = bounds[r], bounds[r + 1]
            self.s = (self.lo + self.hi) / 2
            self.heading = 1 if r % 2 == 0 else -1

    # roster helpers
    def alive_ids(self) -> list:
        return sorted((i for i, e in self.roster.items() if e.alive), key=lambda i: self.roster[i].key)

    def rank(self) -> int:
        return self.alive_ids().index(self.id)

    def neighbour(self, side: int):
        ids = self.alive_ids()
        r = ids.index(self.id) + side
        return ids[r] if 0 <= r < len(ids) else None

    def bounds(self) -> list[float]:
        """Arc bounds of the equal-time division over the alive roster (cached)."""
        ids = self.alive_ids()
        key = tuple((i, self.roster[i].speed) for i in ids)
        if key != self._bounds_key:
            counter = self.replan_counter if self._bounds_key is not None else self.init_counter
            if self._bounds_key is not None:
                self.replans += 1
            segs = partition_tour(self.tour, self.path.points, len(ids),
                                  [self.roster[i].speed for i in ids], counter)
            self._bounds = [segs[0].start] + [s.end for s in segs]
            self._bounds_key = key
        return self._bounds

    def position(self) -> Position:
        return self.path.position_at(self.s)

    def hello(self) -> Hello:
        return Hello(self.id, self.key, dict(self.roster), self.lo, self.hi, self.speed,
                     (self.searching[-1], self.searching[1]))

    def segment(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    # motion
    def _target(self) -> float:
        if self.heading > 0:
            return self.path.length if self.searching[1] else self.hi
        return 0.0 if self.searching[-1] else self.lo

    def step(self, now: int, dt_ms: int) -> None:
        if self.waiting_until is not None:
            if now < self.waiting_until:
                return
            self._missed(now)
            return
        target = self._target()
        move = self.speed * dt_ms / 1000.0
        if self.heading > 0:
            self.s = min(self.s + move, target) if self.s < target else self.s
            arrived = self.s >= target
        else:
            self.s = max(self.s - move, target) if self.s > target else self.s
            arrived = self.s <= target
        if arrived:
            self._at_end(now)

    def _at_end(self, now: int) -> None:
        side = self.heading
        if self.searching[side]:
            # ran to the end of the path without meeting anyone
            self.searching[side] = False
            if side > 0:
                self.hi = self.path.length
            else:
                self.lo = 0.0
            self.heading = -side
            return
        partner = self.neighbour(side)
        if partner is None:
            self.heading = -side
            return
        self.waiting_until = self._expected(partner, now) + self.meet_wait_ms
        seen = self.last_meet.get(partner)
        if seen is not None:
            self.waiting_until += int(self.slack * seen[1])

    def _expected(self, partner, now: int) -> int:
        """Next time ``partner`` should be back at our shared boundary."""
        seen = self.last_meet.get(partner)
        if seen is None:
            return now
        t_m, period = seen
        if period <= 0:
            return now
        j = max(1, math.ceil((now - self.meet_wait_ms - t_m) / period))
        return max(now, int(t_m + j * period))

    def _missed(self, now: int) -> None:
        side = self.heading
        self.waiting_until = None
        self.missed_meetings += 1
        self.misses[side] += 1
        if self.misses[side] < self.miss_threshold:
            self.heading = -side
            return
        dead = self.neighbour(side)
        e = self.roster[dead]
        self.roster[dead] = RosterEntry(e.key, False, now, e.speed)
        self.misses[side] = 0
        self.declared.append((now, dead))
        log.debug("uav %s declares %s dead at %d", self.id, dead, now)
        self.bounds()
        if self.neighbour(side) is None:
            if side > 0:
                self.hi = self.path.length
            else:
                self.lo = 0.0
        else:
            self.searching[side] = True
        # keep flying the same way into the orphaned stretch

    # meetings
    def gossip(self, peer: Hello, now: int) -> None:
        """Merge the peer's roster; any encounter is proof that both are alive."""
        self.meetings += 1
        for i, e in peer.roster.items():
            mine = self.roster.get(i)
            self.roster[i] = e if mine is None else _newer(mine, e)
        me = self.roster[self.id]
        if not me.alive:
            # someone gave up on us too early; reassert with a newer stamp
            self.roster[self.id] = RosterEntry(me.key, True, now, me.speed)
        if not self.roster[peer.id].alive:
            self.roster[peer.id] = RosterEntry(peer.key, True, now, self.roster[peer.id].speed)

    def ready(self, side: int) -> bool:
        """True when we are at, or about to reach, our boundary on ``side``.

        Paths fold back on themselves, so two UAVs can be in radio range while
        far apart along the path; turning around there would leave the stretch
        between them unvisited.
        """
        if self.heading != side:
            return False
        if self.waiting_until is not None or self.searching[side]:
            return True
        bound = self.hi if side > 0 else self.lo
        return abs(bound - self.s) <= self.reach

    def rendezvous(self, peer: Hello, now: int) -> float:
        """Settle the boundary shared with an adjacent peer and turn back."""
        side = 1 if peer.key > self.key else -1
        bounds = self.bounds()
        r = self.rank()
        shared = bounds[r + 1] if side > 0 else bounds[r]
        if side > 0:
            far = self.path.length if peer.searching[1] else peer.hi
        else:
            far = 0.0 if peer.searching[0] else peer.lo
        self.last_meet[peer.id] = (now, 2 * abs(far - shared) / peer.speed * 1000.0)
        self.waiting_until = None
        self.misses[side] = 0
        self.searching[side] = False
        if side > 0:
            self.hi = shared
        else:
            self.lo = shared
        self.heading = -side
        return shared

    def take_all(self) -> list[Item]:
        out, self.buffer = self.buffer, []
        return out

    def receive(self, items: list[Item]) -> list[Item]:
        """Append items; returns those evicted by the buffer cap (oldest first)."""
        self.buffer.extend(items)
        over = len(self.buffer) - self.buffer_cap
        if over > 0:
            evicted, self.buffer = self.buffer[:over], self.buffer[over:]
            return evicted
        return []

    def planning_ops(self) -> int:
        return self.init_counter.count + self.replan_counter.count


class FerryAgent:
    """TSP-Ferry: fly the full closed loop through the GS, in isolation."""

    def __init__(self, uid, speed: float, loop: Polyline, offset: float, buffer_cap: int = 10_000):
        self.id = uid
        self.speed = speed
        self.path = loop
        self.s = offset % loop.length if loop.length else 0.0
        self.buffer: list[Item] = []
        self.buffer_cap = buffer_cap
        self.key = 0

    def position(self) -> Position:
        return self.path.position_at(self.s)

    def step(self, now: int, dt_ms: int) -> None:
        if self.path.length:
            self.s = (self.s + self.speed * dt_ms / 1000.0) % self.path.length

    receive = DadcaAgent.receive
    take_all = DadcaAgent.take_all


# -- world ---------------------------------------------------------------------

@dataclass
class GroundStation:
    pos: Position
    delivered_items: int = 0


@dataclass(frozen=True)
class FleetEvent:
    at_ms: int
    kind: str  # failure | reinforcement
    uav: Any


@dataclass
class AirConfig:
    gs: Position = Position(0.0, 500.0)
    pois: tuple[Position, ...] = ()
    strategy: str = "dadca-2opt"
    n_uavs: int = 8
    speed: float = 10.0
    range_m: float = 50.0
    dt_ms: int = 100
    end_time_ms: int = 3_600_000
    sample_period_ms: int = 10_000
    payload_bytes: int = 20
    poi_buffer_cap: int = 100
    uav_buffer_cap: int = 10_000
    meet_wait_ms: int = 30_000
    miss_threshold: int = 2
    events: tuple[FleetEvent, ...] = ()

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.n_uavs < 1:
            raise ValueError("need at least one UAV")
        if not self.pois:
            raise ValueError("need at least one POI")
        if self.speed <= 0 or self.range_m <= 0 or self.dt_ms <= 0:
            raise ValueError("speed, range and dt must be > 0")


class AirSim:
    def __init__(self, cfg: AirConfig, seed: int = 0, keep_records: bool = False):
        self.cfg = cfg
        self.sim = Simulator(seed, keep_records=keep_records)
        self.ledger = DataLedger(self.sim)
        self.gs = GroundStation(cfg.gs)
        self.points = plan_points(cfg.gs, cfg.pois)
        self.poi_xy = np.array([[p.x, p.y] for p in cfg.pois], dtype=float)
        self.poi_buffers: list[list[Item]] = [[] for _ in cfg.pois]
        self.poi_seq = [0] * len(cfg.pois)
        self.agents: dict[Any, Any] = {}
        self.alive: list = []
        self.meetings: list[MeetingRecord] = []
        self.audit: list[tuple] = []
        self.handoffs: list[tuple] = []
        self.visits: list[list[int]] = [[] for _ in cfg.pois]
        self.fleet_log: list[tuple[int, str, Any]] = []
        self._poi_seen = np.zeros(len(cfg.pois), dtype=bool)
        self._in_range_pairs: set = set()
        self.baseline_counter = OpCounter()
        self.baseline_solves: list[int] = []
        self._launch()

    @property
    def dadca(self) -> bool:
        return self.cfg.strategy != "tsp-ferry"

    def _launch(self):
        cfg = self.cfg
        ids = list(range(cfg.n_uavs))
        if self.dadca:
            fleet = {i: (float(i), cfg.speed) for i in ids}
            for i in ids:
                self.agents[i] = DadcaAgent(i, float(i), cfg.speed, self.points, cfg.strategy, fleet,
                                            cfg.meet_wait_ms, cfg.miss_threshold, cfg.uav_buffer_cap,
                                            reach=cfg.range_m)
        else:
            loop = self._solve_loop()
            for i in ids:
                self.agents[i] = FerryAgent(i, cfg.speed, loop, loop.length * i / cfg.n_uavs,
                                            cfg.uav_buffer_cap)
        self.alive = ids

    def _solve_loop(self) -> Polyline:
        before = self.baseline_counter.count
        tour = closed_tour(self.points, self.baseline_counter)
        i = tour.order.index(GS)
        order = tour.order[i:] + tour.order[:i]
        loop = Polyline(order, self.points, closed=True, counter=self.baseline_counter)
        self.baseline_solves.append(self.baseline_counter.count - before)
        return loop

    # -- scheduling -------------------------------------------------------
    def start(self):
        sim, cfg = self.sim, self.cfg
        for p in range(len(cfg.pois)):
            sim.schedule(cfg.sample_period_ms, self._sample, p, target=f"poi{p}", label="sample")
        for ev in sorted(cfg.events, key=lambda e: e.at_ms):
            sim.schedule(ev.at_ms, self._fleet_event, ev, target=ev.uav, label=ev.kind)
        sim.schedule(0, self._tick, target="air", label="tick")

    def run(self, scenario: str = "", density: str = "") -> RunMetrics:
        self.start()
        self.sim.run_until(self.cfg.end_time_ms)
        return self.summarize(scenario=scenario, density=density)

    def _sample(self, p: int):
        sim, cfg = self.sim, self.cfg
        self.poi_seq[p] += 1
        item = Item(p, self.poi_seq[p], cfg.payload_bytes, sim.now)
        self.ledger.generate(item.key, item.nbytes, sim.now, f"poi{p}")
        buf = self.poi_buffers[p]
        buf.append(item)
        if len(buf) > cfg.poi_buffer_cap:
            old = buf.pop(0)
            self.ledger.release(old.key, "overflow", f"poi{p}")
        sim.schedule(sim.now + cfg.sample_period_ms, self._sample, p, target=f"poi{p}", label="sample")

    def _fleet_event(self, ev: FleetEvent):
        now = self.sim.now
        if ev.kind == "failure":
            if ev.uav not in self.alive:
                return
            agent = self.agents[ev.uav]
            for it in agent.take_all():
                self.ledger.release(it.key, "failure", ev.uav)
            self.alive = [u for u in self.alive if u != ev.uav]
            self._in_range_pairs = {p for p in self._in_range_pairs if ev.uav not in p}
            self.fleet_log.append((now, "failure", ev.uav))
            self.sim.record("uav_failure", ev.uav)
            if not self.dadca:
                # the central planner re-solves; survivors keep their loop positions
                self._solve_loop()
        elif ev.kind == "reinforcement":
            if ev.uav in self.agents:
                raise ValueError(f"reinforcement id {ev.uav} already used")
            cfg = self.cfg
            if self.dadca:
                key = min(a.key for a in self.agents.values()) - 1.0
                agent = DadcaAgent(ev.uav, key, cfg.speed, self.points, cfg.strategy,
                                   {ev.uav: (key, cfg.speed)}, cfg.meet_wait_ms,
                                   cfg.miss_threshold, cfg.uav_buffer_cap, start="gs",
                                   reach=cfg.range_m)
            else:
                loop = self._solve_loop()
                agent = FerryAgent(ev.uav, cfg.speed, loop, 0.0, cfg.uav_buffer_cap)
            self.agents[ev.uav] = agent
            self.alive = self.alive + [ev.uav]
            self.fleet_log.append((now, "reinforcement", ev.uav))
            self.sim.record("uav_reinforcement", ev.uav)
        else:
            raise ValueError(f"unknown fleet event {ev.kind!r}")

    # -- tick -------------------------------------------------------------
    def _tick(self):
        sim, cfg = self.sim, self.cfg
        now = sim.now
        agents = [self.agents[u] for u in self.alive]
        for a in agents:
            a.step(now, cfg.dt_ms)
        if agents:
            xy = np.array([[p.x, p.y] for p in (a.position() for a in agents)], dtype=float)
            self._collect(agents, xy, now)
            self._meet(agents, xy, now)
            self._deliver(agents, xy, now)
        else:
            self._poi_seen[:] = False
        nxt = now + cfg.dt_ms
        if nxt <= cfg.end_time_ms:
            sim.schedule(nxt, self._tick, target="air", label="tick")

    def _collect(self, agents, xy, now):
        d = np.sqrt(((self.poi_xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=2))
        near = d <= self.cfg.range_m
        seen = near.any(axis=1)
        for p in np.flatnonzero(seen & ~self._poi_seen):
            self.visits[p].append(now)
        self._poi_seen = seen
        for p, u in zip(*np.nonzero(near)):
            buf = self.poi_buffers[p]
            if not buf:
                continue
            agent = agents[u]
            self.audit.append((now, "collect", agent.id, f"poi{p}", float(d[p, u])))
            self.poi_buffers[p] = []
            for it in agent.receive(buf):
                self.ledger.release(it.key, "overflow", agent.id)

    def _meet(self, agents, xy, now):
        if not self.dadca or len(agents) < 2:
            return
        d = np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=2))
        rng = self.cfg.range_m
        current = set()
        for i in range(len(agents)):
            for j in range(i + 1, len(agents)):
                if d[i, j] > rng:
                    continue
                pair = (agents[i].id, agents[j].id)
                current.add(pair)
                a, b = agents[i], agents[j]
                if b.key < a.key:
                    a, b = b, a
                fresh = pair not in self._in_range_pairs
                if fresh:
                    ha, hb = a.hello(), b.hello()
                    self.audit.append((now, "meet", a.id, b.id, float(d[i, j])))
                    a.gossip(hb, now)
                    b.gossip(ha, now)
                settle = (a.neighbour(1) == b.id and b.neighbour(-1) == a.id
                          and ((a.heading == 1 and a.searching[1])
                               or (b.heading == -1 and b.searching[-1])
                               or (a.ready(1) and b.ready(-1))))
                if not (fresh or settle):
                    continue
                boundary = None
                if settle:
                    ha, hb = a.hello(), b.hello()
                    ba = a.rendezvous(hb, now)
                    bb = b.rendezvous(ha, now)
                    if ba != bb:
                        raise AssertionError(f"agents {a.id},{b.id} disagree on boundary: {ba} vs {bb}")
                    boundary = ba
                items = b.take_all()
                moved = sum(it.nbytes for it in items)
                for it in items:
                    self.handoffs.append((it.key, b.id, a.id))
                for it in a.receive(items):
                    self.ledger.release(it.key, "overflow", a.id)
                self.meetings.append(MeetingRecord(a.id, b.id, now, moved, boundary))
                self.sim.record("meet", a.id, peer=b.id, bytes=moved,
                                boundary=None if boundary is None else round(boundary, 6))
        self._in_range_pairs = current

    def _deliver(self, agents, xy, now):
        gd = np.hypot(xy[:, 0] - self.gs.pos.x, xy[:, 1] - self.gs.pos.y)
        for u in np.flatnonzero(gd <= self.cfg.range_m):
            agent = agents[u]
            if not agent.buffer:
                continue
            self.audit.append((now, "deliver", agent.id, "gs", float(gd[u])))
            for it in agent.take_all():
                self.ledger.record_delivery(it.key, now, "gs")
                self.ledger.release(it.key, "consumed", "gs")
                self.gs.delivered_items += 1

    # -- accounting -------------------------------------------------------
    def scan_in_flight(self) -> set:
        keys = {it.key for buf in self.poi_buffers for it in buf}
        for u in self.alive:
            keys.update(it.key for it in self.agents[u].buffer)
        return keys

    def check_conservation(self) -> None:
        summarize(self.ledger, self.scan_in_flight(), strict=True)

    def planning_ops_per_replan(self) -> float | None:
        if self.dadca:
            replans = sum(a.replans for a in self.agents.values())
            ops = sum(a.replan_counter.count for a in self.agents.values())
            return ops / replans if replans else None
        return float(np.mean(self.baseline_solves)) if self.baseline_solves else None

    def summarize(self, strict: bool = False, **meta) -> RunMetrics:
        m = summarize(self.ledger, self.scan_in_flight(), strict=strict, kind="air",
                      strategy=self.cfg.strategy, seed=self.sim.seed, **meta)
        if self.dadca:
            m.planning_ops = {u: a.planning_ops() for u, a in self.agents.items()}
        else:
            m.planning_ops = {"central": self.baseline_counter.count}
        m.planning_ops_per_replan = self.planning_ops_per_replan()
        m.events = self.sim.events_processed
        m.final_clock_ms = self.sim.now
        m.trace_hash = self.sim.trace_hash
        m.extra = {"meetings": len(self.meetings),
                   "replans": sum(getattr(a, "replans", 0) for a in self.agents.values()),
                   "replan_ops_baseline": (float(np.mean(self.baseline_solves))
                                           if self.baseline_solves else None)}
        return m

    # -- coverage audit ---------------------------------------------------
    def max_gap(self, t0: int, t1: int) -> float:
        """Largest inter-visit gap over all POIs within ``[t0, t1]``.

        The leading gap runs from the last visit before ``t0`` and the open gap
        up to ``t1`` counts too, so a POI nobody visits yields at least the
        whole window.
        """
        worst = 0
        for vs in self.visits:
            before = [t for t in vs if t < t0]
            inside = [t for t in vs if t0 <= t <= t1]
            marks = [before[-1] if before else t0, *inside, t1]
            worst = max(worst, max(b - a for a, b in zip(marks, marks[1:])))
        return worst

    def patrol_period_ms(self, n_alive: int | None = None) -> float:
        """Nominal out-and-back time of one DADCA segment."""
        n = n_alive or len(self.alive)
        length = next(iter(self.agents.values())).path.length
        return 2 * length / n / self.cfg.speed * 1000.0
