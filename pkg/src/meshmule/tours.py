"""Tour construction, improvement and partitioning over points of interest.

Points are addressed by their index in a ``points`` sequence of
:class:`~meshmule.radio.Position`. Every planner can take an
:class:`OpCounter`; the count is the number of point-to-point distance
evaluations, used as an onboard-processing proxy.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Sequence

from .radio import Position

_EPS = 1e-9


class OpCounter:
    def __init__(self):
        self.count = 0

    def __repr__(self):
        return f"OpCounter({self.count})"


def planning_ops_counter(counter: OpCounter | None) -> int:
    return 0 if counter is None else counter.count


class _Dist:
    __slots__ = ("points", "counter")

    def __init__(self, points: Sequence[Position], counter: OpCounter | None):
        self.points = points
        self.counter = counter

    def __call__(self, i: int, j: int) -> float:
        if self.counter is not None:
            self.counter.count += 1
        a, b = self.points[i], self.points[j]
        return ((a.x - b.x) ** 2 + (a.y - b.y) ** 2) ** 0.5


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]
    length: float
    closed: bool = True

    def __len__(self):
        return len(self.order)


def tour_length(order: Sequence[int], points: Sequence[Position], closed: bool = True,
                counter: OpCounter | None = None) -> float:
    d = _Dist(points, counter)
    total = sum(d(order[i], order[i + 1]) for i in range(len(order) - 1))
    if closed and len(order) > 1:
        total += d(order[-1], order[0])
    return total


def nearest_neighbor(points: Sequence[Position], start: int = 0, closed: bool = True,
                     ids: Sequence[int] | None = None,
                     counter: OpCounter | None = None) -> Tour:
    """Greedy nearest-unvisited tour from ``start``; ties go to the lower id.

    ``ids`` restricts the tour to a subset of point indices (``start`` must be
    one of them).
    """
    ids = sorted(range(len(points)) if ids is None else ids)
    if not ids:
        raise ValueError("nearest_neighbor needs at least one point")
    if start not in ids:
        raise ValueError(f"start {start} not among the tour points")
    d = _Dist(points, counter)
    unvisited = [i for i in ids if i != start]
    order = [start]
    cur = start
    while unvisited:
        best_k, best_d = 0, d(cur, unvisited[0])
        for k in range(1, len(unvisited)):
            dk = d(cur, unvisited[k])
            if dk < best_d:
                best_k, best_d = k, dk
        cur = unvisited.pop(best_k)
        order.append(cur)
    return Tour(tuple(order), tour_length(order, points, closed, counter), closed)


def two_opt(tour: Tour, points: Sequence[Position], counter: OpCounter | None = None) -> Tour:
    """First-improvement 2-opt until no improving reversal is left.

    Scan order is ``i`` ascending then ``j`` ascending, restarting after each
    accepted move. Closed tours may reverse any inner run; open tours keep the
    first point fixed and may also reverse a suffix (the tail end is free).
    """
    order = list(tour.order)
    n = len(order)
    d = _Dist(points, counter)
    if n < 4 and tour.closed or n < 3:
        return Tour(tuple(order), tour_length(order, points, tour.closed, counter), tour.closed)
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            a, b = order[i], order[i + 1]
            for j in range(i + 2, n):
                c = order[j]
                if tour.closed:
                    if i == 0 and j == n - 1:
                        continue
                    e = order[(j + 1) % n]
                    delta = d(a, c) + d(b, e) - d(a, b) - d(c, e)
                elif j == n - 1:
                    delta = d(a, c) - d(a, b)
                else:
                    e = order[j + 1]
                    delta = d(a, c) + d(b, e) - d(a, b) - d(c, e)
                if delta < -_EPS:
                    order[i + 1:j + 1] = reversed(order[i + 1:j + 1])
                    improved = True
                    break
            if improved:
                break
    return Tour(tuple(order), tour_length(order, points, tour.closed, counter), tour.closed)


class Polyline:
    """Arc-length parametrisation of a tour's visiting order."""

    def __init__(self, order: Sequence[int], points: Sequence[Position], closed: bool = False,
                 counter: OpCounter | None = None):
        self.vertices = list(order) + ([order[0]] if closed and len(order) > 1 else [])
        self.points = points
        d = _Dist(points, counter)
        cum = [0.0]
        for u, v in zip(self.vertices, self.vertices[1:]):
            cum.append(cum[-1] + d(u, v))
        self.cum = cum
        self.length = cum[-1]

    def position_at(self, s: float) -> Position:
        if s <= 0 or len(self.vertices) == 1:
            return self.points[self.vertices[0]]
        if s >= self.length:
            return self.points[self.vertices[-1]]
        k = bisect.bisect_right(self.cum, s) - 1
        seg = self.cum[k + 1] - self.cum[k]
        f = 0.0 if seg == 0 else (s - self.cum[k]) / seg
        a, b = self.points[self.vertices[k]], self.points[self.vertices[k + 1]]
        return Position(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))

    def legs(self) -> list[float]:
        return [b - a for a, b in zip(self.cum, self.cum[1:])]


@dataclass(frozen=True)
class Segment:
    """Arc interval ``[start, end]`` of a tour and the POIs lying on it.

    Adjacent segments share their boundary point; a POI sitting exactly on a
    boundary belongs to both.
    """

    index: int
    start: float
    end: float
    pois: tuple[int, ...]

    @property
    def length(self) -> float:
        return self.end - self.start


def partition_tour(tour: Tour, points: Sequence[Position], k: int,
                   weights: Sequence[float] | None = None,
                   counter: OpCounter | None = None) -> list[Segment]:
    """Cut a tour into ``k`` contiguous arc intervals.

    Interval lengths are proportional to ``weights`` (equal when omitted), so
    with per-UAV speeds as weights every segment takes the same time to fly.
    One scan over the legs: ``len(tour) - 1`` distance evaluations for an open
    tour, one more for a closed one.
    """
    n = len(tour.order)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"cannot split {n} POIs into {k} segments")
    if weights is None:
        weights = [1.0] * k
    if len(weights) != k or any(w <= 0 for w in weights):
        raise ValueError("need k positive weights")
    line = Polyline(tour.order, points, tour.closed, counter)
    total_w = float(sum(weights))
    bounds = [0.0]
    acc = 0.0
    for w in weights[:-1]:
        acc += w
        bounds.append(line.length * acc / total_w)
    bounds.append(line.length)
    arcs = line.cum[:n]  # arc position of each POI in visiting order
    segments = []
    for idx in range(k):
        lo, hi = bounds[idx], bounds[idx + 1]
        members = tuple(tour.order[p] for p in range(n)
                        if lo - _EPS <= arcs[p] <= hi + _EPS)
        segments.append(Segment(idx, lo, hi, members))
    return segments
