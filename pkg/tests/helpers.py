"""Small hand-built ground networks shared by several test modules."""

from meshmule.ground import GroundConfig, GroundNetwork, HubSpec, NodeSpec
from meshmule.mesh import NodeRole
from meshmule.mobility import Static
from meshmule.radio import Position, RadioParams
from meshmule.routing import RelayPolicy

HUB = 1000


def chain(xs, roles=None, hub_at=None, policy=None, **cfg_kw):
    """Nodes on the x axis; an optional static hub."""
    roles = roles or [NodeRole.RELAY] * len(xs)
    nodes = [NodeSpec(i, Position(x, 0), r) for i, (x, r) in enumerate(zip(xs, roles))]
    hubs = [] if hub_at is None else [HubSpec(HUB, Static(Position(hub_at, 0)))]
    cfg = GroundConfig(radio=RadioParams(50.0), policy=policy or RelayPolicy("mam1", 500), **cfg_kw)
    return nodes, hubs, cfg


def network(xs, roles=None, hub_at=None, policy=None, seed=0, keep_records=True,
            force_awake=False, **cfg_kw):
    nodes, hubs, cfg = chain(xs, roles, hub_at, policy, **cfg_kw)
    return GroundNetwork(nodes, hubs, cfg, seed=seed, keep_records=keep_records,
                         force_awake=force_awake)


def records(net, type_):
    return [r for r in net.sim.records if r["type"] == type_]

ACCEPTANCE_LINES: list[str] = []


def report(criterion: str, ok: bool, detail: str) -> None:
    """One line per criterion, shown inline and again in the terminal summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
