"""Trajectories for mobile collectors and placement of static nodes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

from .des import substream
from .radio import Position

# Not from any published experiment: the artifact's own class -> count mapping.
DENSITY_COUNTS = {"sparse": 15, "dense": 30, "full": 50}


@dataclass(frozen=True)
class Static:
    pos: Position


@dataclass(frozen=True)
class Circular:
    center: Position
    radius: float
    speed: float
    phase: float = 0.0

    def __post_init__(self):
        if self.radius <= 0 or self.speed <= 0:
            raise ValueError("circular trajectory needs radius > 0 and speed > 0")

    @property
    def period_ms(self) -> float:
        return 2 * math.pi * self.radius / self.speed * 1000.0


@dataclass(frozen=True)
class SegmentPatrol:
    a: Position
    b: Position
    speed: float

    def __post_init__(self):
        if self.speed <= 0:
            raise ValueError("patrol speed must be > 0")


Trajectory = Union[Static, Circular, SegmentPatrol]


def position_at(traj: Trajectory, t: int) -> Position:
    """Position at ``t`` ms. Pure: the same ``(traj, t)`` always agrees."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if isinstance(traj, Static):
        return traj.pos
    if isinstance(traj, Circular):
        theta = traj.phase + traj.speed * (t / 1000.0) / traj.radius
        return Position(traj.center.x + traj.radius * math.cos(theta),
                        traj.center.y + traj.radius * math.sin(theta))
    if isinstance(traj, SegmentPatrol):
        length = traj.a.distance_to(traj.b)
        if length == 0:
            return traj.a
        travelled = traj.speed * t / 1000.0
        s = math.fmod(travelled, 2 * length)
        if s > length:
            s = 2 * length - s
        f = s / length
        return Position(traj.a.x + f * (traj.b.x - traj.a.x), traj.a.y + f * (traj.b.y - traj.a.y))
    raise TypeError(f"unknown trajectory {traj!r}")


@dataclass(frozen=True)
class PlacementSpec:
    """Uniform placement of ``count`` nodes inside ``area = (x0, y0, x1, y1)``.

    ``count`` defaults to the density class mapping when left at 0.
    """

    area: tuple[float, float, float, float]
    density_class: str = "full"
    count: int = 0

    def __post_init__(self):
        x0, y0, x1, y1 = self.area
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"degenerate placement area {self.area}")
        if self.density_class not in DENSITY_COUNTS:
            raise ValueError(f"unknown density class {self.density_class!r}")
        if self.resolved_count <= 0:
            raise ValueError("placement count must be > 0")

    @property
    def resolved_count(self) -> int:
        return self.count or DENSITY_COUNTS[self.density_class]


class PlacementError(RuntimeError):
    pass


def generate_placement(spec: PlacementSpec, seed: int,
                       accept: Callable[[list[Position]], bool] | None = None,
                       max_attempts: int = 1000) -> list[Position]:
    """Seeded uniform placement; redraws until ``accept(positions)`` holds."""
    x0, y0, x1, y1 = spec.area
    for attempt in range(max_attempts):
        rng = substream(seed, "placement", attempt)
        pts = [Position(rng.uniform(x0, x1), rng.uniform(y0, y1))
               for _ in range(spec.resolved_count)]
        if accept is None or accept(pts):
            return pts
    raise PlacementError(f"no acceptable placement in {max_attempts} attempts")


def is_connected(points: Sequence[Position], radio_range: float) -> bool:
    if not points:
        return True
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for j, p in enumerate(points):
            if j not in seen and points[i].distance_to(p) <= radio_range:
                seen.add(j)
                stack.append(j)
    return len(seen) == len(points)


def touches_trajectory(points: Sequence[Position], traj: Trajectory, radio_range: float,
                       period_ms: int, step_ms: int = 1000) -> bool:
    """True if some node is within range of the trajectory at a sampled instant."""
    for t in range(0, int(period_ms) + 1, step_ms):
        hub = position_at(traj, t)
        if any(hub.distance_to(p) <= radio_range for p in points):
            return True
    return False
