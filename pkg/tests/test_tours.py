import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meshmule.radio import Position
from meshmule.tours import (OpCounter, Polyline, Tour, nearest_neighbor, partition_tour,
                            tour_length, two_opt)

SQUARE = [Position(0, 0), Position(1, 0), Position(1, 1), Position(0, 1)]


def brute_force_closed(points):
    """Exhaustive optimum with vertex 0 fixed first."""
    rest = range(1, len(points))
    return min(tour_length((0, *perm), points, True) for perm in itertools.permutations(rest))


def test_single_poi():
    t = nearest_neighbor([Position(5, 5)])
    assert t.order == (0,) and t.length == 0


def test_square_from_corner():
    open_t = nearest_neighbor(SQUARE, 0, closed=False)
    closed_t = nearest_neighbor(SQUARE, 0, closed=True)
    assert open_t.order == (0, 1, 2, 3)  # tie at step one goes to the lower id
    assert open_t.length == pytest.approx(3)
    assert closed_t.length == pytest.approx(4)


def test_tie_goes_to_lower_id():
    pts = [Position(0, 0), Position(0, 5), Position(5, 0)]
    assert nearest_neighbor(pts, 0, closed=False).order[1] == 1


def test_two_opt_fixed_point_on_perimeter():
    t = nearest_neighbor(SQUARE, 0)
    assert two_opt(t, SQUARE).order == t.order


def test_two_opt_uncrosses():
    crossed = Tour((0, 2, 1, 3), tour_length((0, 2, 1, 3), SQUARE), True)
    better = two_opt(crossed, SQUARE)
    assert better.length < crossed.length
    assert better.length == pytest.approx(4)
    assert better.length == pytest.approx(brute_force_closed(SQUARE))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_two_opt_between_optimum_and_greedy(seed):
    r = random.Random(seed)
    pts = [Position(r.uniform(0, 100), r.uniform(0, 100)) for _ in range(8)]
    nn = nearest_neighbor(pts, 0)
    opt = two_opt(nn, pts)
    assert opt.length <= nn.length + 1e-9
    assert opt.length >= brute_force_closed(pts) - 1e-9
    assert sorted(opt.order) == list(range(8))
    assert opt.length == pytest.approx(tour_length(opt.order, pts, True))


def test_open_two_opt_keeps_start():
    r = random.Random(3)
    pts = [Position(r.uniform(0, 100), r.uniform(0, 100)) for _ in range(12)]
    t = two_opt(nearest_neighbor(pts, 0, closed=False), pts)
    assert t.order[0] == 0 and not t.closed
    assert t.length == pytest.approx(tour_length(t.order, pts, False))


def test_nearest_neighbor_op_bound():
    r = random.Random(1)
    for n in (2, 5, 17, 30):
        pts = [Position(r.uniform(0, 100), r.uniform(0, 100)) for _ in range(n)]
        c = OpCounter()
        nearest_neighbor(pts, 0, closed=True, counter=c)
        assert c.count <= n * (n - 1) // 2 + n


def test_two_opt_counter_is_deterministic():
    r = random.Random(9)
    pts = [Position(r.uniform(0, 100), r.uniform(0, 100)) for _ in range(20)]
    t = nearest_neighbor(pts, 0)
    a, b = OpCounter(), OpCounter()
    two_opt(t, pts, a)
    two_opt(t, pts, b)
    assert a.count == b.count > 0


def test_partition_whole_tour():
    pts = [Position(x, 0) for x in range(10)]
    t = nearest_neighbor(pts, 0, closed=False)
    (seg,) = partition_tour(t, pts, 1)
    assert (seg.start, seg.end, seg.pois) == (0, 9, tuple(range(10)))


def test_partition_collinear_halves():
    pts = [Position(x, 0) for x in range(10)]
    t = nearest_neighbor(pts, 0, closed=False)
    c = OpCounter()
    a, b = partition_tour(t, pts, 2, counter=c)
    assert a.end == b.start == pytest.approx(4.5)
    assert a.pois == (0, 1, 2, 3, 4) and b.pois == (5, 6, 7, 8, 9)
    assert c.count <= len(pts)
    assert partition_tour(t, pts, 2) == [a, b]


def test_partition_weights_equalize_time():
    pts = [Position(x, 0) for x in range(11)]
    t = nearest_neighbor(pts, 0, closed=False)
    segs = partition_tour(t, pts, 2, weights=[1.0, 3.0])
    assert segs[0].length == pytest.approx(2.5) and segs[1].length == pytest.approx(7.5)
    with pytest.raises(ValueError):
        partition_tour(t, pts, 20)


def test_polyline_arc_positions():
    line = Polyline((0, 1, 2, 3), SQUARE, closed=True)
    assert line.length == pytest.approx(4)
    p = line.position_at(2.5)
    assert (p.x, p.y) == pytest.approx((0.5, 1))
    assert line.position_at(10) == SQUARE[0]
