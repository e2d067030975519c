import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import cKDTree

from esakit.sets import (NET_SEPARATION, CantorDust, FinitePoints, Product, Segment, Sphere,
                         box_dimension, dimension_thresholds, from_spec)

SETS = {
    "points": FinitePoints([[0.0, 0.0], [1.0, 0.5]]),
    "segment": Segment([0.0, 0.0], [1.0, 0.0]),
    "circle": Sphere([0.0, 0.0], 1.0),
    "sphere3": Sphere([0.0, 0.0, 0.0], 0.5),
    "cantor1": CantorDust(1),
    "cantor2": CantorDust(2, ratio=0.25),
    "product": Product(Segment([0.0], [1.0]), FinitePoints([[0.0]])),
}


def test_distance_examples():
    assert Segment([0, 0], [1, 0]).distance([0.5, 1.0]) == pytest.approx(1.0)
    assert Sphere([0, 0], 1.0).distance([3.0, 0.0]) == pytest.approx(2.0)
    x = np.array([0.3, -0.4, 1.2])
    assert FinitePoints([[0.0, 0.0, 0.0]]).distance(x) == pytest.approx(np.linalg.norm(x))


def test_distance_beyond_segment_end_uses_endpoint():
    assert Segment([0, 0], [1, 0]).distance([2.0, 0.0]) == pytest.approx(1.0)


def test_distance_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        Segment([0, 0], [1, 0]).distance([1.0, 2.0, 3.0])


def test_distance_zero_on_the_set():
    for name, cset in SETS.items():
        # Cantor cell midpoints sit in removed gaps; cell corners belong to the set
        pts = cset.cells(3) if name.startswith("cantor") else cset.discretize(3).points
        assert np.all(cset.distance(pts) <= 1e-12)


def test_cantor_distance_matches_cell_brute_force():
    cset = CantorDust(1)
    depth = 8
    corners = cset.cells(depth)[:, 0]
    side = cset.ratio ** depth
    x = np.random.default_rng(0).uniform(-0.5, 1.5, size=(200, 1))
    gap = np.maximum(np.maximum(corners[None, :] - x, x - corners[None, :] - side), 0.0)
    assert np.allclose(cset.distance(x, depth=depth), gap.min(axis=1), atol=1e-15)


def test_cantor_limit_distance_error_radius():
    cset = CantorDust(1)
    x = np.array([[0.5], [0.2], [1.3]])
    deep = cset.distance(x, depth=20)
    for k in (3, 6, 9):
        shallow = cset.distance(x, depth=k)
        assert np.all(shallow <= deep + 1e-15)
        assert np.all(deep - shallow <= cset.error_radius(k) + 1e-15)


@pytest.mark.parametrize("name", sorted(SETS))
@given(data=st.data())
@settings(max_examples=20, deadline=None)
def test_distance_is_one_lipschitz(name, data):
    cset = SETS[name]
    coords = st.floats(-2.0, 2.0, allow_nan=False)
    x = np.array(data.draw(st.lists(coords, min_size=cset.dim, max_size=cset.dim)))
    y = np.array(data.draw(st.lists(coords, min_size=cset.dim, max_size=cset.dim)))
    assert abs(cset.distance(x) - cset.distance(y)) <= np.linalg.norm(x - y) + 1e-12


def test_cantor_level_two_midpoints():
    net = CantorDust(1).discretize(2)
    expected = np.array([1, 5, 13, 17]) / 18
    assert np.allclose(np.sort(net.points[:, 0]), expected)
    assert net.h == pytest.approx(1 / 18)


@pytest.mark.parametrize("k", [0, 3, 6])
def test_segment_level_net(k):
    net = Segment([0.0], [1.0]).discretize(k)
    assert len(net) == 2 ** k + 1
    assert net.h == pytest.approx(2.0 ** -k)
    assert np.allclose(np.diff(net.points[:, 0]), 2.0 ** -k)


def test_finite_points_discretize_to_themselves():
    pts = [[0.0, 1.0], [2.0, 3.0]]
    net = FinitePoints(pts).discretize(5)
    assert np.array_equal(net.points, pts) and net.h == 0.0


def test_discretize_rejects_negative_level():
    with pytest.raises(ValueError):
        Segment([0.0], [1.0]).discretize(-1)


@pytest.mark.parametrize("name", sorted(set(SETS) - {"points"}))
@pytest.mark.parametrize("level", [1, 2, 3])
def test_nets_cover_and_are_separated(name, level):
    cset = SETS[name]
    net = cset.discretize(level)
    # every point of a much finer net (a proxy for the set) is within h of the level net
    fine = cset.discretize(level + 2).points
    gaps = cKDTree(net.points).query(fine)[0]
    assert gaps.max() <= net.h * (1 + 1e-9)
    assert net.spacing >= NET_SEPARATION * net.h * (1 - 1e-9)


@pytest.mark.parametrize("name", sorted(set(SETS) - {"points"}))
def test_nets_refine(name):
    cset = SETS[name]
    for k in range(3):
        a, b = cset.discretize(k), cset.discretize(k + 1)
        gaps = np.min(np.linalg.norm(a.points[:, None, :] - b.points[None, :, :], axis=2), axis=1)
        assert gaps.max() <= a.h * (1 + 1e-9)


def test_box_dimension_of_point_is_zero():
    assert box_dimension(FinitePoints([[0.0]]), [0.1, 0.01, 0.001]).estimate == 0.0


def test_box_dimension_of_segment_triadic_scales():
    est = box_dimension(Segment([0.0], [1.0]), 3.0 ** -np.arange(2, 8))
    assert est.estimate == pytest.approx(1.0, abs=0.02)


def test_box_dimension_of_middle_thirds_cantor():
    est = box_dimension(CantorDust(1), 3.0 ** -np.arange(2, 8))
    assert est.estimate == pytest.approx(math.log(2) / math.log(3), abs=0.02)
    assert est.r_squared > 0.999


def test_box_dimension_product_dominates_factors():
    scales = 2.0 ** -np.arange(2, 7)
    seg = box_dimension(Segment([0.0], [1.0]), scales).estimate
    pt = box_dimension(FinitePoints([[0.0]]), scales).estimate
    prod = box_dimension(SETS["product"], scales).estimate
    assert prod >= max(seg, pt) - 1e-12


def test_box_dimension_validation():
    with pytest.raises(ValueError):
        box_dimension(Segment([0.0], [1.0]), [0.1, 0.01])
    with pytest.raises(ValueError):
        box_dimension(Segment([0.0], [1.0]), [0.1, 0.1, 0.1])


@pytest.mark.parametrize("alpha, d, expected", [(2, 5, (3, 1)), (1, 1, (0, -1)), (0.5, 3, (2.5, 2))])
def test_dimension_thresholds(alpha, d, expected):
    assert dimension_thresholds(alpha, d) == pytest.approx(expected)


@pytest.mark.parametrize("name", sorted(SETS))
def test_spec_round_trip(name):
    cset = SETS[name]
    clone = from_spec(cset.spec())
    assert clone.spec() == cset.spec()
    assert np.array_equal(clone.discretize(2).points, cset.discretize(2).points)


def test_similarity_dimensions():
    assert CantorDust(2, ratio=0.25).similarity_dimension == pytest.approx(1.0)
    assert SETS["product"].similarity_dimension == 1.0
    assert SETS["sphere3"].similarity_dimension == 2.0


def test_constructor_validation():
    with pytest.raises(ValueError):
        CantorDust(1, ratio=0.6)
    with pytest.raises(ValueError):
        CantorDust(1, template=[[0.0], [0.1]])
    with pytest.raises(ValueError):
        Segment([0.0], [0.0])
    with pytest.raises(ValueError):
        Sphere([0.0, 0.0], -1.0)
    with pytest.raises(ValueError):
        FinitePoints([])


def test_empty_set_is_infinitely_far():
    empty = FinitePoints([], dim=2)
    assert math.isinf(empty.distance([0.0, 0.0]))
    assert len(empty.discretize(0)) == 0
