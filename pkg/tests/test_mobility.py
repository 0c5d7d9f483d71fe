import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hapsim.mobility import (
    Action,
    AreaConfig,
    actions_to_array,
    init_world,
    sample_disc,
    step_haps,
    step_hotspots,
    ue_positions,
)


@pytest.fixture
def area():
    return AreaConfig()


def rng(seed=0):
    return np.random.default_rng(seed)


def test_scenario_one_haps_coordinates(area):
    w = init_world(area, 1, rng())
    assert np.array_equal(w.haps_xy, [[-250.0, -450.0], [450.0, 0.0], [-250.0, 450.0]])


def test_scenario_four_all_at_origin(area):
    w = init_world(area, 4, rng())
    assert np.array_equal(w.haps_xy, np.zeros((3, 2)))


def test_hotspot_launch_points_and_headings(area):
    w = init_world(area, 1, rng())
    assert np.array_equal(w.hotspot_xy, [[-550.0, -550.0], [550.0, 0.0], [-550.0, 550.0]])
    # left-to-right for the two west starts, right-to-left for the east one
    assert np.array_equal(w.hotspot_vel, [[10.0, 0.0], [-10.0, 0.0], [10.0, 0.0]])


def test_explicit_scenario_coordinates(area):
    xy = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    w = init_world(area, xy, rng())
    assert np.array_equal(w.haps_xy, xy)


def test_bad_scenarios_rejected(area):
    with pytest.raises(ValueError):
        init_world(area, 5, rng())
    with pytest.raises(ValueError):
        init_world(area, "sideways", rng())
    with pytest.raises(ValueError):
        init_world(area, np.zeros((2, 2)), rng())


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_ue_offsets_inside_disc(seed):
    area = AreaConfig()
    w = init_world(area, "random", np.random.default_rng(seed))
    norms = np.linalg.norm(w.ue_offsets, axis=-1)
    assert norms.shape == (3, 10)
    assert np.all(norms <= area.hotspot_radius)


def test_disc_sampling_covers_radii():
    pts = sample_disc(rng(1), 50.0, 4000)
    r = np.linalg.norm(pts, axis=-1)
    assert r.max() > 45.0 and r.min() < 10.0  # not stuck on a ring


def test_hotspot_free_motion(area):
    w = init_world(area, 1, rng())
    w.hotspot_xy[0] = [0.0, 0.0]
    w.hotspot_vel[0] = [10.0, 0.0]
    out = step_hotspots(w, area, dt=2.0)
    assert np.allclose(out.hotspot_xy[0], [20.0, 0.0])


def test_hotspot_reflection_arithmetic(area):
    w = init_world(area, 1, rng())
    w.hotspot_xy[0] = [740.0, 0.0]
    w.hotspot_vel[0] = [10.0, 0.0]
    out = step_hotspots(w, area, dt=2.0)
    # 760 reflects at 750 to 2*750 - 760 = 740; velocity flips
    assert np.allclose(out.hotspot_xy[0], [740.0, 0.0])
    assert np.allclose(out.hotspot_vel[0], [-10.0, 0.0])


def test_double_reflection_returns_to_track(area):
    w = init_world(area, 1, rng())
    w.hotspot_xy[0] = [745.0, 100.0]
    w.hotspot_vel[0] = [10.0, 0.0]
    one = step_hotspots(w, area, dt=2.0)       # 765 -> 735, heading west
    two = step_hotspots(one, area, dt=2.0)     # 715, still west
    assert np.allclose(two.hotspot_xy[0], [715.0, 100.0])
    assert np.allclose(two.hotspot_vel[0], [-10.0, 0.0])


def test_hotspots_stay_inside_over_long_run(area):
    w = init_world(area, "random", rng(9))
    w.hotspot_vel[:] = [[10.0, 7.0], [-10.0, -3.0], [6.0, 10.0]]
    for _ in range(2000):
        w = step_hotspots(w, area, dt=2.0)
        assert np.all(np.abs(w.hotspot_xy) <= area.half_extent)


def test_ue_rigid_body_property(area):
    w = init_world(area, 1, rng(4))
    offsets = w.ue_offsets.copy()
    for _ in range(50):
        w = step_hotspots(w, area, dt=2.0)
        assert np.array_equal(ue_positions(w), w.hotspot_xy[:, None, :] + offsets)


def test_step_haps_pure_wind_drift(area):
    w = init_world(area, 4, rng())
    out = step_haps(w, np.zeros((3, 2)), np.array([4.0, 0.0]), area, dt=2.0, r_max=50.0)
    assert np.allclose(out.haps_xy - w.haps_xy, [[8.0, 0.0]] * 3)


def test_step_haps_pure_command_north(area):
    w = init_world(area, 4, rng())
    acts = [Action(np.pi / 2, 10.0)] * 3
    out = step_haps(w, acts, np.zeros(2), area, dt=2.0, r_max=50.0)
    assert np.allclose(out.haps_xy - w.haps_xy, [[0.0, 10.0]] * 3, atol=1e-9)


def test_step_haps_action_cancels_wind(area):
    w = init_world(area, 4, rng())
    acts = np.array([[-np.pi, 8.0]] * 3)  # west, 8 m
    out = step_haps(w, acts, np.array([4.0, 0.0]), area, dt=2.0, r_max=50.0)
    assert np.allclose(out.haps_xy, w.haps_xy, atol=1e-9)


def test_step_haps_zero_everything_is_fixed_point(area):
    w = init_world(area, 2, rng())
    out = step_haps(w, np.zeros((3, 2)), np.zeros(2), area, dt=2.0, r_max=50.0)
    assert np.array_equal(out.haps_xy, w.haps_xy)


def test_step_haps_clamped_to_area(area):
    w = init_world(area, np.array([[749.0, 0.0], [0.0, 0.0], [0.0, -749.0]]), rng())
    acts = np.array([[0.0, 50.0], [0.0, 0.0], [-np.pi / 2, 50.0]])
    out = step_haps(w, acts, np.zeros(2), area, dt=2.0, r_max=50.0)
    assert np.all(np.abs(out.haps_xy) <= area.half_extent)
    assert out.haps_xy[0, 0] == area.half_extent
    assert out.haps_xy[2, 1] == -area.half_extent


def test_step_haps_per_haps_wind(area):
    w = init_world(area, 4, rng())
    wind = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    out = step_haps(w, np.zeros((3, 2)), wind, area, dt=2.0, r_max=50.0)
    assert np.allclose(out.haps_xy - w.haps_xy, 2.0 * wind)


@pytest.mark.parametrize("bad", [
    np.array([[np.pi, 10.0], [0, 0], [0, 0]]),      # angle == pi excluded
    np.array([[-3.2, 10.0], [0, 0], [0, 0]]),       # angle below -pi
    np.array([[0.0, -1.0], [0, 0], [0, 0]]),        # negative distance
    np.array([[0.0, 50.001], [0, 0], [0, 0]]),      # beyond r_max
])
def test_out_of_bounds_actions_rejected(bad, area):
    w = init_world(area, 4, rng())
    with pytest.raises(ValueError):
        step_haps(w, bad, np.zeros(2), area, dt=2.0, r_max=50.0)


def test_actions_to_array_accepts_action_objects():
    arr = actions_to_array([Action(0.1, 2.0), Action(-0.5, 3.0), Action(1.0, 0.0)], 3, 50.0)
    assert arr.shape == (3, 2)
    assert arr[1, 0] == -0.5
