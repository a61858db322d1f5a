import pytest

from meshmule.routing import (RelayPolicy, RouteEntry, RouteTable, fewer_hops_selection,
                              last_heard_selection, update_route)

T1 = "T1"


def table_with(entry):
    t = RouteTable()
    t.entries[entry.sink] = entry
    t.selected = entry
    return t


def test_first_advertisement_inserts():
    t = update_route(RouteTable(), RouteEntry(T1, "A", 2, 100), RelayPolicy("mam1", 500), 100)
    assert t.entries[T1] == RouteEntry(T1, "A", 2, 100) == t.selected


def test_fewer_hops_replace_within_delta():
    t = table_with(RouteEntry(T1, "A", 3, 100))
    update_route(t, RouteEntry(T1, "B", 2, 110), RelayPolicy("mam1", 500), 110)
    assert t.selected.next_hop == "B"


def test_more_hops_kept_within_delta():
    t = table_with(RouteEntry(T1, "A", 2, 100))
    update_route(t, RouteEntry(T1, "B", 3, 110), RelayPolicy("mam1", 500), 110)
    assert t.selected.next_hop == "A"


def test_mam0_takes_the_last_heard():
    t = table_with(RouteEntry(T1, "A", 1, 100))
    update_route(t, RouteEntry(T1, "B", 9, 101), RelayPolicy("mam0"), 101)
    assert t.selected.next_hop == "B"


@pytest.mark.parametrize("delta,expected", [(500, "A"), (100, "B")])
def test_mam1_expiry(delta, expected):
    t = table_with(RouteEntry(T1, "A", 2, 1000))
    update_route(t, RouteEntry(T1, "B", 3, 1200), RelayPolicy("mam1", delta), 1200)
    assert t.selected.next_hop == expected


def test_expiry_is_reached_at_exactly_delta():
    t = table_with(RouteEntry(T1, "A", 2, 1000))
    update_route(t, RouteEntry(T1, "B", 3, 1001), RelayPolicy("mam1", 1), 1001)
    assert t.selected.next_hop == "B"


def test_same_route_refreshes_age():
    t = table_with(RouteEntry(T1, "A", 2, 1000))
    update_route(t, RouteEntry(T1, "A", 2, 1400), RelayPolicy("mam1", 500), 1400)
    assert t.selected.learned_at == 1400
    update_route(t, RouteEntry(T1, "B", 3, 1600), RelayPolicy("mam1", 500), 1600)
    assert t.selected.next_hop == "A"


def test_selected_spans_sinks():
    t = table_with(RouteEntry("T1", "A", 2, 0))
    update_route(t, RouteEntry("T2", "C", 1, 10), RelayPolicy("mam1", 500), 10)
    assert t.selected.sink == "T2" and set(t.entries) == {"T1", "T2"}


def test_flooding_leaves_tables_alone():
    t = update_route(RouteTable(), RouteEntry(T1, "A", 2, 0), RelayPolicy("flooding"), 0)
    assert t.selected is None and not t.entries


def test_reference_selections():
    c = [RouteEntry(T1, "A", 3, 0), RouteEntry(T1, "B", 2, 1), RouteEntry(T1, "C", 2, 2)]
    assert fewer_hops_selection(c).next_hop == "B"
    assert last_heard_selection(c).next_hop == "C"
    assert fewer_hops_selection([]) is None


def test_validation():
    with pytest.raises(ValueError):
        RelayPolicy("mam1", 0)
    with pytest.raises(ValueError):
        RouteEntry(T1, "A", 0, 0)
    with pytest.raises(ValueError):
        update_route(RouteTable(), RouteEntry(T1, "A", 1, 5), RelayPolicy("mam1"), 6)
