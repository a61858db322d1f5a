import pytest

from meshmule.ground import GroundNetwork
from meshmule.scenario import (KEYS, ScenarioError, build, bundled, load, parse_text)
from meshmule.uav import AirSim

GROUND = """
kind = ground
placement_area = 0 0 100 100
node_count = 8
hub = static 50 50
"""


def test_bundled_files_parse_and_build():
    g = load(bundled("ground_circular_50.scn"))
    a = load(bundled("air_dadca_30.scn"))
    assert g.kind == "ground" and g.get("hub") == [("circular", 0, 0, 400, 14, 0)]
    assert a.kind == "air" and a.get("failure") == [(1_800_000, 3)]
    net = build(g, seed=2)
    assert isinstance(net, GroundNetwork) and len(net.nodes) == 50
    assert isinstance(build(a, seed=2), AirSim)


def test_unknown_key_names_key_and_line():
    with pytest.raises(ScenarioError, match=r"<string>:3: unknown key 'speeed'"):
        parse_text("kind = air\ngs = 0 0\nspeeed = 3\n")


def test_bad_value_and_duplicate():
    with pytest.raises(ScenarioError, match="delta_ms"):
        parse_text(GROUND + "delta_ms = -5\n")
    with pytest.raises(ScenarioError, match="duplicate key 'ttl'"):
        parse_text(GROUND + "ttl = 4\nttl = 5\n")
    with pytest.raises(ScenarioError, match="expected 'key = value'"):
        parse_text(GROUND + "just words\n")


def test_kind_specific_keys_are_rejected():
    with pytest.raises(ScenarioError, match="strategy"):
        parse_text(GROUND + "strategy = tsp-ferry\n")
    with pytest.raises(ScenarioError, match="policy"):
        parse_text("kind = air\ngs = 0 0\npoi = 1 1\npolicy = mam0\n")


def test_required_keys():
    with pytest.raises(ScenarioError, match="kind"):
        parse_text("seed = 1\n")
    with pytest.raises(ScenarioError, match="hub"):
        parse_text("kind = ground\nplacement_area = 0 0 1 1\n")
    with pytest.raises(ScenarioError, match="gs"):
        parse_text("kind = air\npoi = 1 1\n")


def test_comments_and_repeats():
    s = parse_text(GROUND + "# note\nhub = patrol 0 0 100 0 5   # second hub\n")
    assert len(s.get("hub")) == 2


def test_overrides_win_and_revalidate():
    s = parse_text(GROUND)
    o = s.with_overrides(policy="mam0", seed=None, density="sparse")
    assert o.get("policy") == "mam0" and o.get("density") == "sparse" and s.get("policy") is None
    with pytest.raises(ScenarioError):
        s.with_overrides(strategy="dadca-2opt")
    with pytest.raises(ScenarioError):
        s.with_overrides(bogus=1)


def test_density_sets_the_count():
    s = parse_text(GROUND.replace("node_count = 8\n", "")).with_overrides(density="sparse")
    assert len(build(s, seed=1).nodes) == 15


def test_explicit_nodes_and_pois():
    g = parse_text("kind = ground\nhub = static 0 0\nnode = 1 10 0 relay\nnode = 2 40 0 lpn\n")
    net = build(g)
    assert sorted(net.nodes) == [1, 2] and net.nodes[2].role.value == "lpn"
    a = parse_text("kind = air\ngs = 0 0\npoi = 10 0\npoi = 20 0\nn_uavs = 1\n")
    assert len(build(a).cfg.pois) == 2


def test_same_seed_same_placement():
    s = load(bundled("ground_circular_50.scn"))
    assert build(s, 4).positions == build(s, 4).positions


def test_every_key_has_a_parser():
    assert all(callable(p) for p, _ in KEYS.values())
