import math

import numpy as np
import pytest

from rssiloc.scenario import (
    TRAJECTORY_KINDS,
    Arena,
    ConfigurationError,
    Trajectory,
    make_trajectory,
    sample_ground_truth,
)


def test_default_arena_geometry(arena):
    assert arena.wap == pytest.approx((4.23, 3.49))
    assert len(arena.fixed_nodes) == 4
    x0, y0, x1, y1 = arena.bounds
    assert (x1 - x0, y1 - y0) == pytest.approx((4.14, 2.86))


def test_arena_rejects_inner_larger_than_room():
    with pytest.raises(ConfigurationError):
        Arena(room=(3.0, 3.0), inner=(4.0, 2.0))


def test_arena_rejects_wap_outside():
    with pytest.raises(ConfigurationError):
        Arena(wap=(0.1, 0.1))


def test_lissajous_sample_count(arena):
    assert len(make_trajectory(arena, "lissajous", 60.0)) == 1200


@pytest.mark.parametrize("kind", TRAJECTORY_KINDS)
@pytest.mark.parametrize("seed", [0, 1, 7])
def test_trajectory_invariants(arena, kind, seed):
    traj = make_trajectory(arena, kind, 120.0, seed=seed)
    assert arena.contains(traj.positions).all()
    dt = np.diff(traj.timestamps_ms)
    assert (dt == 50).all()
    assert traj.speeds().max() <= 1.0 + 1e-9
    assert arena.distance_to_wap(traj.positions).min() >= 0.1 - 1e-9


def test_waypoint_loop_max_distance(arena):
    traj = make_trajectory(arena, "waypoint-loop", 60.0)
    # half diagonal of the 4.14 x 2.86 arena
    expected = math.hypot(2.07, 1.43)
    assert arena.distance_to_wap(traj.positions).max() == pytest.approx(expected, abs=1e-9)
    assert expected == pytest.approx(2.516, abs=5e-4)


def test_trajectory_errors(arena):
    with pytest.raises(ConfigurationError):
        make_trajectory(arena, "lissajous", 0.0)
    with pytest.raises(ConfigurationError):
        make_trajectory(arena, "spiral", 10.0)
    with pytest.raises(ConfigurationError):
        make_trajectory(arena, "lissajous", 10.0, margin=2.0)
    with pytest.raises(ConfigurationError):
        make_trajectory(arena, "waypoint-loop", 10.0, speed=5.0)


def test_lissajous_through_wap_violates_keep_out(arena):
    with pytest.raises(ConfigurationError):
        make_trajectory(arena, "lissajous", 120.0, phase=0.0)


def _static(arena, pos):
    return Trajectory(np.array([0], dtype=np.int64), np.array([pos], dtype=float))


def test_ground_truth_at_wap_is_zero(arena):
    gt = sample_ground_truth(_static(arena, arena.wap), arena, noise_mm=0)
    assert gt.distances[0] == 0.0


def test_ground_truth_axis_aligned(arena):
    gt = sample_ground_truth(_static(arena, (arena.wap[0] + 3, arena.wap[1])), arena, noise_mm=0)
    assert gt.distances[0] == 3.0


def test_ground_truth_noise_bound(arena):
    traj = make_trajectory(arena, "random-walk", 5000.0, seed=2)  # 10^5 ticks
    assert len(traj) == 100_000
    exact = arena.distance_to_wap(traj.positions)
    gt = sample_ground_truth(traj, arena, noise_mm=4.0, seed=9)
    err = np.abs(gt.distances - exact)
    assert err.max() <= 0.004
    assert err.max() > 0.003  # the noise is actually applied
    np.testing.assert_array_equal(gt.timestamps_ms, traj.timestamps_ms)


def test_ground_truth_noise_free_matches_euclid(arena):
    traj = make_trajectory(arena, "lissajous", 30.0)
    gt = sample_ground_truth(traj, arena, noise_mm=0)
    np.testing.assert_array_equal(gt.distances, arena.distance_to_wap(traj.positions))
    assert len(gt) == len(traj)


def test_lissajous_coverage(arena):
    d = arena.distance_to_wap(make_trajectory(arena, "lissajous", 120.0).positions)
    assert d.min() < 0.3 and d.max() > 2.3
