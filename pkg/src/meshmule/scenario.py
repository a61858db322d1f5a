"""Scenario files: flat ``key = value`` text.

Blank lines and ``#`` comments are ignored. Every key is typed and unknown
keys are rejected with their line number. ``node``, ``hub``, ``poi``,
``failure`` and ``reinforcement`` may repeat; any other key may appear once.
Units: metres, m/s, milliseconds, bytes. See ``KEYS`` for the full list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .des import substream
from .ground import GroundConfig, GroundNetwork, HubSpec, NodeSpec
from .mesh import NodeRole
from .mobility import (DENSITY_COUNTS, Circular, PlacementSpec, SegmentPatrol, Static,
                       generate_placement, is_connected, touches_trajectory)
from .radio import Position, RadioParams
from .routing import PolicyKind, RelayPolicy
from .uav import STRATEGIES, AirConfig, AirSim, FleetEvent

HUB_ID_BASE = 1000


class ScenarioError(ValueError):
    pass


def _floats(n: int) -> Callable[[str], tuple]:
    def parse(text: str) -> tuple:
        parts = text.split()
        if len(parts) != n:
            raise ValueError(f"expected {n} numbers, got {len(parts)}")
        vals = tuple(float(p) for p in parts)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("non-finite number")
        return vals
    return parse


def _choice(options) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


def _int(text: str) -> int:
    return int(text)


def _pos_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise ValueError("must be > 0")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise ValueError("must be >= 0")
    return v


def _pos_float(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise ValueError("must be a finite number > 0")
    return v


def _prob(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise ValueError("must be in [0, 1]")
    return v


def _node(text: str) -> tuple:
    parts = text.split()
    if len(parts) != 4:
        raise ValueError("expected: id x y role")
    role = NodeRole(parts[3])
    return (int(parts[0]), float(parts[1]), float(parts[2]), role)


def _hub(text: str) -> tuple:
    parts = text.split()
    kind, nums = parts[0], [float(p) for p in parts[1:]]
    want = {"circular": 5, "static": 2, "patrol": 5}
    if kind not in want:
        raise ValueError("hub kind must be circular, static or patrol")
    if len(nums) != want[kind]:
        raise ValueError(f"{kind} hub needs {want[kind]} numbers")
    return (kind, *nums)


def _fleet_event(text: str) -> tuple:
    parts = text.split()
    if len(parts) != 2:
        raise ValueError("expected: time_ms uav_id")
    t = int(parts[0])
    if t < 0:
        raise ValueError("time must be >= 0")
    return (t, int(parts[1]))


# key -> (parser, repeatable)
KEYS: dict[str, tuple[Callable[[str], Any], bool]] = {
    "kind": (_choice(("ground", "air")), False),
    "name": (str, False),
    "seed": (_int, False),
    "end_time_ms": (_pos_int, False),
    "density": (_choice(tuple(DENSITY_COUNTS)), False),
    # radio
    "radio_range_m": (_pos_float, False),
    "per_hop_latency_ms": (_nonneg_int, False),
    "loss_prob": (_prob, False),
    # ground network
    "policy": (_choice(tuple(p.value for p in PolicyKind)), False),
    "delta_ms": (_pos_int, False),
    "freshness_ms": (_pos_int, False),
    "ttl": (_pos_int, False),
    "dedup_capacity": (_pos_int, False),
    "tx_queue_cap": (_pos_int, False),
    "rx_proc_ms": (_nonneg_int, False),
    "rx_queue_cap": (_pos_int, False),
    "buffer_cap": (_pos_int, False),
    "sample_period_ms": (_pos_int, False),
    "payload_bytes": (_pos_int, False),
    "wake_interval_ms": (_pos_int, False),
    "wake_duration_ms": (_pos_int, False),
    "lpn_phases": (_choice(("random", "aligned")), False),
    "friend_queue_cap": (_pos_int, False),
    "flush_timeout_ms": (_pos_int, False),
    "discovery_period_ms": (_pos_int, False),
    "placement_area": (_floats(4), False),
    "node_count": (_pos_int, False),
    "friend_fraction": (_prob, False),
    "lpn_fraction": (_prob, False),
    "node": (_node, True),
    "hub": (_hub, True),
    "hub_range_m": (_pos_float, False),
    # air
    "gs": (_floats(2), False),
    "poi_area": (_floats(4), False),
    "poi_count": (_pos_int, False),
    "poi": (_floats(2), True),
    "strategy": (_choice(STRATEGIES), False),
    "n_uavs": (_pos_int, False),
    "uav_speed": (_pos_float, False),
    "uav_range_m": (_pos_float, False),
    "dt_ms": (_pos_int, False),
    "meet_wait_ms": (_nonneg_int, False),
    "miss_threshold": (_pos_int, False),
    "poi_buffer_cap": (_pos_int, False),
    "uav_buffer_cap": (_pos_int, False),
    "failure": (_fleet_event, True),
    "reinforcement": (_fleet_event, True),
}

GROUND_ONLY = {"policy", "delta_ms", "freshness_ms", "ttl", "dedup_capacity", "tx_queue_cap",
               "rx_proc_ms", "rx_queue_cap", "buffer_cap", "wake_interval_ms", "wake_duration_ms",
               "lpn_phases", "friend_queue_cap", "flush_timeout_ms", "discovery_period_ms",
               "placement_area", "node_count", "friend_fraction", "lpn_fraction", "node", "hub",
               "hub_range_m", "radio_range_m", "per_hop_latency_ms", "loss_prob"}
AIR_ONLY = {"gs", "poi_area", "poi_count", "poi", "strategy", "n_uavs", "uav_speed", "uav_range_m",
            "dt_ms", "meet_wait_ms", "miss_threshold", "poi_buffer_cap", "uav_buffer_cap",
            "failure", "reinforcement"}


@dataclass
class Scenario:
    values: dict[str, Any] = field(default_factory=dict)
    source: str = "<string>"

    @property
    def kind(self) -> str:
        return self.values["kind"]

    @property
    def name(self) -> str:
        return self.values.get("name") or Path(self.source).stem

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def with_overrides(self, **overrides) -> "Scenario":
        """Copy with ``overrides`` applied; None values are ignored."""
        vals = dict(self.values)
        for key, raw in overrides.items():
            if raw is None:
                continue
            if key not in KEYS:
                raise ScenarioError(f"unknown key {key!r}")
            parser, repeat = KEYS[key]
            try:
                val = parser(str(raw))
            except ValueError as e:
                raise ScenarioError(f"bad value for {key!r}: {e}") from None
            vals[key] = [val] if repeat else val
        scn = Scenario(vals, self.source)
        validate(scn)
        return scn


def parse_text(text: str, source: str = "<string>") -> Scenario:
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in KEYS:
            raise ScenarioError(f"{source}:{lineno}: unknown key {key!r}")
        parser, repeat = KEYS[key]
        try:
            parsed = parser(value)
        except ValueError as e:
            raise ScenarioError(f"{source}:{lineno}: bad value for {key!r}: {e}") from None
        if repeat:
            values.setdefault(key, []).append(parsed)
        elif key in values:
            raise ScenarioError(f"{source}:{lineno}: duplicate key {key!r}")
        else:
            values[key] = parsed
    scn = Scenario(values, source)
    validate(scn)
    return scn


def load(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ScenarioError(f"cannot read scenario {path}: {e}") from None
    return parse_text(text, str(path))


def bundled(name: str) -> Path:
    return Path(__file__).parent / "scenarios" / name


def validate(scn: Scenario) -> None:
    v = scn.values
    if "kind" not in v:
        raise ScenarioError(f"{scn.source}: missing required key 'kind'")
    wrong = (AIR_ONLY if scn.kind == "ground" else GROUND_ONLY) & set(v)
    if wrong:
        raise ScenarioError(f"{scn.source}: keys not valid for a {scn.kind} scenario: "
                            f"{', '.join(sorted(wrong))}")
    if scn.kind == "ground":
        if not v.get("hub"):
            raise ScenarioError(f"{scn.source}: a ground scenario needs at least one 'hub'")
        if not v.get("node") and "placement_area" not in v:
            raise ScenarioError(f"{scn.source}: give 'node' lines or a 'placement_area'")
        if v.get("policy", "mam1") == "mam1" and v.get("delta_ms", 1) <= 0:
            raise ScenarioError("delta_ms must be > 0")
        if v.get("friend_fraction", 0.2) + v.get("lpn_fraction", 0.2) > 1.0:
            raise ScenarioError("friend_fraction + lpn_fraction must be <= 1")
        wi, wd = v.get("wake_interval_ms", 1000), v.get("wake_duration_ms", 100)
        if not 0 < wd <= wi:
            raise ScenarioError("need 0 < wake_duration_ms <= wake_interval_ms")
        ids = [n[0] for n in v.get("node", [])]
        if len(ids) != len(set(ids)):
            raise ScenarioError("duplicate node ids")
    else:
        if not v.get("poi") and "poi_area" not in v:
            raise ScenarioError(f"{scn.source}: give 'poi' lines or a 'poi_area'")
        if "gs" not in v:
            raise ScenarioError(f"{scn.source}: an air scenario needs 'gs'")


# -- builders ---------------------------------------------------------------

def _trajectory(spec: tuple):
    kind, *n = spec
    if kind == "circular":
        return Circular(Position(n[0], n[1]), n[2], n[3], n[4])
    if kind == "static":
        return Static(Position(n[0], n[1]))
    return SegmentPatrol(Position(n[0], n[1]), Position(n[2], n[3]), n[4])


def _density_count(scn: Scenario, key: str, default: int) -> int:
    if scn.get("density"):
        return DENSITY_COUNTS[scn.get("density")]
    return scn.get(key, default)


def ground_nodes(scn: Scenario, seed: int, hubs: list[HubSpec], radio_range: float) -> list[NodeSpec]:
    if scn.get("node"):
        return [NodeSpec(i, Position(x, y), role) for i, x, y, role in scn.get("node")]
    count = _density_count(scn, "node_count", 50)
    hub_range = scn.get("hub_range_m", radio_range)

    def accept(pts):
        if not is_connected(pts, radio_range):
            return False
        return all(touches_trajectory(pts, h.trajectory, hub_range, _period(h.trajectory))
                   for h in hubs)

    pts = generate_placement(PlacementSpec(tuple(scn.get("placement_area")), count=count), seed, accept)
    n_friend = round(count * scn.get("friend_fraction", 0.2))
    n_lpn = round(count * scn.get("lpn_fraction", 0.2))
    roles = ([NodeRole.FRIEND] * n_friend + [NodeRole.LOW_POWER] * n_lpn
             + [NodeRole.RELAY] * (count - n_friend - n_lpn))
    substream(seed, "roles").shuffle(roles)
    return [NodeSpec(i, p, roles[i]) for i, p in enumerate(pts)]


def _period(traj) -> int:
    if isinstance(traj, Circular):
        return int(traj.period_ms)
    if isinstance(traj, SegmentPatrol):
        return int(2 * traj.a.distance_to(traj.b) / traj.speed * 1000)
    return 0


def build_ground(scn: Scenario, seed: int | None = None, keep_records: bool = False) -> GroundNetwork:
    seed = scn.get("seed", 0) if seed is None else seed
    radio = RadioParams(scn.get("radio_range_m", 50.0), scn.get("per_hop_latency_ms", 10),
                        scn.get("loss_prob", 0.0))
    policy = RelayPolicy(scn.get("policy", "mam1"), scn.get("delta_ms", 500),
                         scn.get("freshness_ms", 600_000))
    cfg = GroundConfig(
        radio=radio, policy=policy,
        end_time_ms=scn.get("end_time_ms", 540_000),
        sample_period_ms=scn.get("sample_period_ms", 5000),
        payload_bytes=scn.get("payload_bytes", 20),
        buffer_cap=scn.get("buffer_cap", 100),
        ttl=scn.get("ttl", 16),
        dedup_capacity=scn.get("dedup_capacity", 512),
        tx_queue_cap=scn.get("tx_queue_cap", 64),
        rx_proc_ms=scn.get("rx_proc_ms", 1),
        rx_queue_cap=scn.get("rx_queue_cap", 32),
        wake_interval_ms=scn.get("wake_interval_ms", 1000),
        wake_duration_ms=scn.get("wake_duration_ms", 100),
        lpn_aligned=scn.get("lpn_phases", "random") == "aligned",
        friend_queue_cap=scn.get("friend_queue_cap", 16),
        flush_timeout_ms=scn.get("flush_timeout_ms"),
        discovery_period_ms=scn.get("discovery_period_ms", 1000),
        hub_range_m=scn.get("hub_range_m"),
    )
    hubs = [HubSpec(HUB_ID_BASE + i, _trajectory(h)) for i, h in enumerate(scn.get("hub"))]
    nodes = ground_nodes(scn, seed, hubs, radio.range)
    return GroundNetwork(nodes, hubs, cfg, seed=seed, keep_records=keep_records)


def air_pois(scn: Scenario, seed: int) -> tuple[Position, ...]:
    if scn.get("poi"):
        return tuple(Position(x, y) for x, y in scn.get("poi"))
    count = _density_count(scn, "poi_count", 30)
    return tuple(generate_placement(PlacementSpec(tuple(scn.get("poi_area")), count=count), seed))


def build_air(scn: Scenario, seed: int | None = None, keep_records: bool = False) -> AirSim:
    seed = scn.get("seed", 0) if seed is None else seed
    events = tuple([FleetEvent(t, "failure", u) for t, u in scn.get("failure", [])]
                   + [FleetEvent(t, "reinforcement", u) for t, u in scn.get("reinforcement", [])])
    gx, gy = scn.get("gs")
    cfg = AirConfig(
        gs=Position(gx, gy), pois=air_pois(scn, seed),
        strategy=scn.get("strategy", "dadca-2opt"),
        n_uavs=scn.get("n_uavs", 8),
        speed=scn.get("uav_speed", 10.0),
        range_m=scn.get("uav_range_m", 50.0),
        dt_ms=scn.get("dt_ms", 100),
        end_time_ms=scn.get("end_time_ms", 3_600_000),
        sample_period_ms=scn.get("sample_period_ms", 10_000),
        payload_bytes=scn.get("payload_bytes", 20),
        poi_buffer_cap=scn.get("poi_buffer_cap", 100),
        uav_buffer_cap=scn.get("uav_buffer_cap", 10_000),
        meet_wait_ms=scn.get("meet_wait_ms", 30_000),
        miss_threshold=scn.get("miss_threshold", 2),
        events=events,
    )
    return AirSim(cfg, seed=seed, keep_records=keep_records)


def build(scn: Scenario, seed: int | None = None, keep_records: bool = False):
    if scn.kind == "ground":
        return build_ground(scn, seed, keep_records)
    return build_air(scn, seed, keep_records)
