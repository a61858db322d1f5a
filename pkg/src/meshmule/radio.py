"""Unit-disk broadcast medium.

Reachability is symmetric and inclusive at exactly ``range`` metres. The
medium keeps no state about receivers: a sleeping node still gets a delivery
event and discards it itself.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Any, Callable, Mapping


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position ({self.x}, {self.y})")

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class RadioParams:
    range: float
    per_hop_latency: int = 10
    loss_prob: float = 0.0

    def __post_init__(self):
        if not self.range > 0:
            raise ValueError(f"radio range must be > 0, got {self.range}")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError(f"loss_prob must be in [0, 1], got {self.loss_prob}")
        if self.per_hop_latency < 0:
            raise ValueError("per_hop_latency must be >= 0")


def in_range(a: Position, b: Position, params: RadioParams) -> bool:
    return a.distance_to(b) <= params.range


def neighbors(node: Any, all_positions: Mapping[Any, Position], params: RadioParams) -> set:
    """Every other entity within ``params.range`` of ``node`` (inclusive)."""
    try:
        here = all_positions[node]
    except KeyError:
        raise KeyError(f"unknown node {node!r}") from None
    return {other for other, pos in all_positions.items()
            if other != node and here.distance_to(pos) <= params.range}


def broadcast(sender: Any, msg: Any, positions: Mapping[Any, Position],
              params: RadioParams, rng: random.Random,
              deliver: Callable[[Any, Any, Any, int], None], now: int) -> list:
    """Schedule one delivery per reachable neighbor that survives loss.

    Neighbors are visited in sorted id order and one uniform draw is taken per
    neighbor from ``rng`` whenever ``0 < loss_prob < 1``, so a replay of the
    same sub-stream reproduces the outcome. ``deliver(receiver, msg, sender,
    at)`` is called for every surviving receiver. Returns the receivers.
    """
    delivered = []
    at = now + params.per_hop_latency
    p = params.loss_prob
    for other in sorted(neighbors(sender, positions, params), key=_sort_key):
        if p >= 1.0:
            continue
        if p > 0.0 and rng.random() < p:
            continue
        delivered.append(other)
        deliver(other, msg, sender, at)
    return delivered


def _sort_key(entity):
    # ids are ints for ground nodes and hubs; fall back to str for anything else
    return (0, entity, "") if isinstance(entity, int) else (1, 0, str(entity))
