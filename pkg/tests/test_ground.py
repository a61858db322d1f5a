import pytest

from helpers import HUB, network, records
from meshmule.ground import GroundConfig, GroundNetwork, HubSpec, NodeSpec
from meshmule.mesh import Message, MsgKind, NodeRole
from meshmule.mobility import Static
from meshmule.radio import Position
from meshmule.routing import RelayPolicy


def capture_data_sends(net):
    sends = []
    orig = net.enqueue_tx

    def spy(node, msg, dest=None):
        if msg.is_data:
            sends.append((net.sim.now, msg.origin, node.id, dest))
        orig(node, msg, dest)

    net.enqueue_tx = spy
    return sends


def test_hub_floods_from_each_node_in_range():
    # 3 sits at (90, 0) and 7 at (210, 0), both 60 m from the hub; the rest are 200 m up
    nodes = [NodeSpec(i, Position(30 * i, 0 if i in (3, 7) else 200)) for i in range(10)]
    hubs = [HubSpec(HUB, Static(Position(150, 0)))]
    cfg = GroundConfig(end_time_ms=1100, hub_range_m=70)
    net = GroundNetwork(nodes, hubs, cfg, keep_records=True)
    net.run()
    assert sorted(r["actor"] for r in records(net, "ra_origin")) == [3, 7]


def test_no_floods_with_hub_out_of_range():
    net = network([0, 40], hub_at=5000, end_time_ms=5000)
    net.run()
    assert records(net, "ra_origin") == []
    assert net.contact_floods == 0


def test_one_discovery_per_second():
    net = network([0], hub_at=5000, end_time_ms=180_000)
    net.run()
    assert net.hub_ticks == 180


def test_data_follows_learned_route_in_two_hops():
    # S=0 -- R=1 -- T1=2 -- hub; only T1 hears the hub
    net = network([0, 40, 80], hub_at=120, end_time_ms=5_500)
    sends = capture_data_sends(net)
    m = net.run()
    from_s = [(node, dest) for t, origin, node, dest in sends if origin == 0]
    assert from_s == [(0, 1), (1, 2), (2, HUB)]
    assert net.nodes[0].routes.selected.hop_count == 2
    assert m.valid


def test_data_without_route_waits_for_the_next_flood():
    net = network([0, 40, 80], hub_at=120, sample_period_ms=500, end_time_ms=1_500)
    net.run()
    delivered = {(r["origin"], r["seq"]): r for r in records(net, "deliver")}
    first = delivered[(0, 1)]  # sampled at 500 ms, before any route existed
    assert first["t"] >= 1000 and first["delay"] == first["t"] - 500


def test_stale_data_is_dropped():
    net = network([0, 40], policy=RelayPolicy("mam1", 500, freshness_limit=60_000))
    node = net.nodes[0]
    msg = Message(MsgKind.SENSOR_DATA, 0, 99, 16, created_at=0, payload_bytes=20)
    net.ledger.generate(msg.key, 20, 0, 0)
    net.sim.schedule(61_000, net.forward_data, node, msg)
    net.sim.run_until(62_000)
    assert net.ledger.drop_counts["stale"] == 1
    assert net.ledger.drop_bytes["stale"] == 20


def test_friend_sends_its_buffer_on_advertisement():
    net = network([0, 40], roles=[NodeRole.RELAY, NodeRole.FRIEND], hub_at=5000)
    friend = net.nodes[1]
    for s in range(5):
        msg = Message(MsgKind.SENSOR_DATA, 1, 100 + s, 16, created_at=0, payload_bytes=20)
        net.ledger.generate(msg.key, 20, 0, 1)
        friend.buffer.append(msg)
    sends = capture_data_sends(net)
    net.sim.schedule(0, net.advertise, 0, HUB)
    net.sim.run_until(50)
    mine = [s for s in sends if s[2] == 1 and s[1] == 1]
    assert len(mine) == 5
    assert {s[0] for s in mine} == {10}


def lpn_setup(**kw):
    # sink T=0, friend F=1, LPN L=2 hears only F
    return network([0, 40, 80], roles=[NodeRole.RELAY, NodeRole.FRIEND, NodeRole.LOW_POWER],
                   hub_at=5000, lpn_aligned=True, sample_period_ms=10**9, flush_timeout_ms=1200, **kw)


def test_friend_flush_batches_lpn_data():
    net = lpn_setup()
    lpn = net.nodes[2]
    for s in range(2):
        msg = Message(MsgKind.SENSOR_DATA, 2, 100 + s, 16, created_at=0, payload_bytes=20)
        net.ledger.generate(msg.key, 20, 0, 2)
        lpn.buffer.append(msg)
    net.start()
    net.sim.schedule(200, net.advertise, 0, HUB)  # friend arms its flush at 210
    net.sim.run_until(3_000)
    flushes = records(net, "flush")
    assert [(f["t"], f["items"]) for f in flushes] == [(1410, 2)]


def test_empty_flush_sends_nothing():
    net = lpn_setup()
    net.start()
    net.sim.schedule(200, net.advertise, 0, HUB)
    net.sim.run_until(3_000)
    assert records(net, "flush") == []
    assert net.nodes[1].flush_timers == {}


def test_sampling_schedule_and_bytes():
    net = network([0], end_time_ms=50_000)
    m = net.run()
    times = [r["t"] for r in records(net, "generate")]
    assert times == list(range(5000, 50_001, 5000))
    assert m.generated_bytes == 200


def test_buffer_cap_overflow_without_offload():
    net = network([0], sample_period_ms=1000, end_time_ms=150_000)
    m = net.run()
    assert net.ledger.drop_counts["overflow"] == 50
    assert m.in_flight_bytes == 100 * 20 and m.valid


@pytest.mark.parametrize("policy", ["flooding", "mam0", "mam1"])
def test_conservation_on_a_small_mixed_network(policy):
    roles = [NodeRole.RELAY, NodeRole.FRIEND, NodeRole.LOW_POWER, NodeRole.RELAY,
             NodeRole.SENSOR_ONLY, NodeRole.FRIEND, NodeRole.LOW_POWER]
    net = network([0, 30, 55, 80, 110, 140, 170], roles=roles, hub_at=60,
                  policy=RelayPolicy(policy, 500), end_time_ms=60_000, keep_records=False)
    net.start()
    net.sim.run_until(60_000)
    m = net.summarize(strict=True)
    assert m.valid and m.unique_collected_bytes > 0
    assert m.generated_bytes == m.unique_collected_bytes + m.in_flight_bytes + sum(m.drops.values())


def test_lpn_duty_fraction_is_small():
    net = network([0, 30, 55], roles=[NodeRole.RELAY, NodeRole.FRIEND, NodeRole.LOW_POWER],
                  hub_at=5000, end_time_ms=20_000)
    m = net.run()
    assert 0.05 <= m.lpn_duty_fraction <= 0.2


def test_hub_id_clash_rejected():
    with pytest.raises(ValueError):
        GroundNetwork([NodeSpec(HUB, Position(0, 0))], [HubSpec(HUB, Static(Position(0, 0)))],
                      GroundConfig())
