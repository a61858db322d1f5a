"""Route tables and next-hop selection policies.

A node keeps ``entries`` (one route per sink, i.e. per contact node that
originated a routing advertisement) and ``selected``, the route its own data
currently goes to. Both slots follow the same replacement rule:

* ``flooding``: tables are not used; data is flooded.
* ``mam0``: the newest candidate always wins (last node that relayed a
  discovery to us).
* ``mam1``: a route younger than ``delta`` ms is only beaten by strictly fewer
  hops; once it is ``delta`` ms old it is expired and any newer candidate
  replaces it. Re-advertisement of the same (sink, next hop) with no more hops
  refreshes ``learned_at``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Any, Iterable


class PolicyKind(str, enum.Enum):
    FLOODING = "flooding"
    MAM0 = "mam0"
    MAM1 = "mam1"


@dataclass(frozen=True)
class RelayPolicy:
    kind: PolicyKind = PolicyKind.MAM1
    delta: int = 500
    freshness_limit: int = 600_000

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if self.kind is PolicyKind.MAM1 and self.delta <= 0:
            raise ValueError("MAM1 needs delta > 0")
        if self.freshness_limit <= 0:
            raise ValueError("freshness_limit must be > 0")

    @property
    def routed(self) -> bool:
        return self.kind is not PolicyKind.FLOODING


@dataclass(frozen=True)
class RouteEntry:
    sink: Any
    next_hop: Any
    hop_count: int
    learned_at: int

    def __post_init__(self):
        if self.hop_count < 1:
            raise ValueError("hop_count must be >= 1")


@dataclass
class RouteTable:
    entries: dict = field(default_factory=dict)
    selected: RouteEntry | None = None

    def route_for(self, sink) -> RouteEntry | None:
        return self.entries.get(sink)


@dataclass(frozen=True)
class FlushTimer:
    owner: Any
    sink: Any
    expires_at: int


def _choose(current: RouteEntry | None, cand: RouteEntry, policy: RelayPolicy,
            now: int) -> RouteEntry:
    if current is None or policy.kind is PolicyKind.MAM0:
        return cand
    if now - current.learned_at >= policy.delta:
        return cand
    if cand.hop_count < current.hop_count:
        return cand
    if (cand.sink == current.sink and cand.next_hop == current.next_hop
            and cand.hop_count <= current.hop_count):
        return replace(current, learned_at=now)
    return current


def update_route(table: RouteTable, candidate: RouteEntry, policy: RelayPolicy,
                 now: int) -> RouteTable:
    if policy.kind is PolicyKind.FLOODING:
        return table
    if candidate.learned_at != now:
        raise ValueError("candidate must be learned now")
    table.entries[candidate.sink] = _choose(table.entries.get(candidate.sink), candidate, policy, now)
    table.selected = _choose(table.selected, candidate, policy, now)
    return table


def fewer_hops_selection(candidates: Iterable[RouteEntry]) -> RouteEntry | None:
    """Reference rule: keep the route with the fewest hops, incumbent on ties."""
    best = None
    for c in candidates:
        if best is None or c.hop_count < best.hop_count:
            best = c
    return best


def last_heard_selection(candidates: Iterable[RouteEntry]) -> RouteEntry | None:
    """Reference rule: the most recent candidate."""
    last = None
    for c in candidates:
        last = c
    return last
