"""Unit tests for poses, trajectories and the trajectory distances in geometry.py."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from errors import InvalidInputError
from geometry import (Pose, Trajectory, euclidean, discrete_frechet, brute_force_frechet,
                      path_length, resample_uniform, point_polyline_distance)

coordinates = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False, allow_infinity=False)
points = st.tuples(coordinates, coordinates, coordinates)
polylines = st.lists(points, min_size=1, max_size=6)
long_polylines = st.lists(points, min_size=1, max_size=20)


def test_pose_normalizes_quaternion():
    pose = Pose((0.0, 0.0, 0.0), (0.0, 0.0, 0.0, 2.0))
    assert pose.orientation == (0.0, 0.0, 0.0, 1.0)


@pytest.mark.parametrize("position, orientation", [
    ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0, 0.0)),
    ((math.nan, 0.0, 0.0), (0.0, 0.0, 0.0, 1.0)),
    ((0.0, 0.0), (0.0, 0.0, 0.0, 1.0)),
])
def test_pose_rejects_bad_input(position, orientation):
    with pytest.raises(InvalidInputError):
        Pose(position, orientation)


def test_trajectory_invariants():
    with pytest.raises(InvalidInputError):
        Trajectory(np.zeros((0, 3)))
    with pytest.raises(InvalidInputError):
        Trajectory([(0, 0, 0), (1, 0, 0)], steps=[0, 0])
    t = Trajectory([(0, 0, 0), (1, 0, 0)], steps=[3, 7])
    assert t.steps == (3, 7)
    assert [s for s, _ in t.samples] == [3, 7]


def test_trajectory_from_poses():
    poses = [Pose((0, 0, 0.3)), Pose((0.1, 0, 0.3), (1, 0, 0, 0))]
    t = Trajectory.from_poses(poses, steps=[0, 4])
    assert t.pose(1) == poses[1]
    assert t.last.tolist() == [0.1, 0.0, 0.3]
    with pytest.raises(InvalidInputError):
        Trajectory.from_poses([])


@pytest.mark.parametrize("p, q, expected", [
    ((0, 0, 0), (3, 4, 0), 5.0),
    ((1, 2, 3), (1, 2, 3), 0.0),
    ((1, 2, 3), (4, 6, 3), 5.0),
])
def test_euclidean(p, q, expected):
    assert euclidean(p, q) == pytest.approx(expected)


@pytest.mark.parametrize("a, b, expected", [
    ([(0, 0, 0)], [(3, 4, 0)], 5.0),
    ([(0, 0, 0), (1, 0, 0), (2, 0, 0)], [(0, 1, 0), (1, 1, 0), (2, 1, 0)], 1.0),
    ([(0, 0, 0), (2, 0, 0)], [(0, 0, 0), (1, 1, 0), (2, 0, 0)], math.sqrt(2.0)),
])
def test_discrete_frechet_examples(a, b, expected):
    assert discrete_frechet(Trajectory(a), Trajectory(b)) == pytest.approx(expected, abs=1e-8)
    assert brute_force_frechet(Trajectory(a), Trajectory(b)) == pytest.approx(expected, abs=1e-8)


def test_discrete_frechet_rejects_empty():
    with pytest.raises(InvalidInputError):
        discrete_frechet(np.zeros((0, 3)), [(0, 0, 0)])


def test_discrete_frechet_matches_brute_force_on_random_pairs():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        a = rng.uniform(-1.0, 1.0, size=(rng.integers(1, 7), 3))
        b = rng.uniform(-1.0, 1.0, size=(rng.integers(1, 7), 3))
        assert abs(discrete_frechet(a, b) - brute_force_frechet(a, b)) <= 1e-12


def test_brute_force_size_limit():
    long = np.zeros((9, 3))
    with pytest.raises(InvalidInputError):
        brute_force_frechet(long, long)


@given(polylines, polylines)
@settings(max_examples=100, deadline=None)
def test_frechet_symmetric_and_bounded_by_endpoints(a, b):
    d = discrete_frechet(a, b)
    assert d == pytest.approx(discrete_frechet(b, a), abs=1e-12)
    assert d >= euclidean(a[0], b[0]) - 1e-12
    assert d >= euclidean(a[-1], b[-1]) - 1e-12


@given(polylines)
@settings(max_examples=100, deadline=None)
def test_frechet_identity(a):
    assert discrete_frechet(a, a) == 0.0


@given(long_polylines, long_polylines, long_polylines)
@settings(max_examples=100, deadline=None)
def test_frechet_triangle_inequality(a, b, c):
    assert discrete_frechet(a, c) <= discrete_frechet(a, b) + discrete_frechet(b, c) + 1e-9


@given(polylines, points)
@settings(max_examples=60, deadline=None)
def test_frechet_of_a_translated_copy_is_the_offset(a, offset):
    shifted = Trajectory(a).translated(offset)
    assert discrete_frechet(a, shifted) == pytest.approx(euclidean(offset, (0, 0, 0)), abs=1e-9)


def test_path_length():
    assert path_length(Trajectory([(0, 0, 0)])) == 0.0
    assert path_length(Trajectory([(0, 0, 0), (1, 0, 0), (1, 1, 0)])) == pytest.approx(2.0)
    square = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0), (0, 0, 0)]
    assert path_length(Trajectory(square)) == pytest.approx(4.0)


def test_resample_uniform_segment_midpoint():
    t = resample_uniform(Trajectory([(0, 0, 0), (1, 0, 0)]), 3)
    np.testing.assert_allclose(t.positions, [(0, 0, 0), (0.5, 0, 0), (1, 0, 0)], atol=1e-12)


def test_resample_uniform_corner():
    t = resample_uniform(Trajectory([(0, 0, 0), (1, 0, 0), (1, 1, 0)]), 3)
    np.testing.assert_allclose(t.positions[1], (1, 0, 0), atol=1e-12)


def test_resample_uniform_degenerate():
    t = resample_uniform(Trajectory([(0.3, 0.2, 0.1)] * 4), 5)
    assert len(t) == 5
    assert np.all(t.positions == np.array((0.3, 0.2, 0.1)))


def test_resample_uniform_rejects_small_n():
    with pytest.raises(InvalidInputError):
        resample_uniform(Trajectory([(0, 0, 0), (1, 0, 0)]), 1)


@given(st.lists(points, min_size=2, max_size=6), st.integers(min_value=2, max_value=20))
@settings(max_examples=50, deadline=None)
def test_resample_keeps_endpoints(vertices, n):
    t = Trajectory(vertices)
    r = resample_uniform(t, n)
    assert len(r) == n
    assert np.array_equal(r.first, t.first)
    assert np.array_equal(r.last, t.last)


def test_point_polyline_distance():
    assert point_polyline_distance((0.5, 1.0, 0.0), [(0, 0, 0), (1, 0, 0)]) == pytest.approx(1.0)
    assert point_polyline_distance((2.0, 0.0, 0.0), [(0, 0, 0), (1, 0, 0)]) == pytest.approx(1.0)
    assert point_polyline_distance((0.0, 3.0, 4.0), [(0, 0, 0)]) == pytest.approx(5.0)
