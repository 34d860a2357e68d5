import numpy as np
import pytest

from distix.imaging import Frame, FlowField
from distix.indexing import uniform_map
from distix.interpolator import interpolate
from distix.iterative import (
    IterSchedule,
    RefState,
    iterative_interpolate,
    iterative_interpolate_map,
    make_schedule,
    step,
)
from distix.lab import render_scene
from distix.metrics import psnr

from conftest import CURVED_SUITE, curved_fixture, make_scene, scene_pair


# ---------------------------------------------------------------------------
# make_schedule
# ---------------------------------------------------------------------------

def test_schedule_full_range_two_steps_exact():
    sched = make_schedule(1.0, 2)
    assert sched.steps == ((0.5, 0.0), (1.0, 0.5))


def test_schedule_single_step():
    sched = make_schedule(0.6, 1)
    assert sched.steps == ((0.6, 0.0),)


def test_schedule_thirds():
    sched = make_schedule(0.9, 3)
    expect = [(0.3, 0.0), (0.6, 0.3), (0.9, 0.6)]
    for (t_a, r_a), (t_e, r_e) in zip(sched.steps, expect):
        assert abs(t_a - t_e) < 1e-12
        assert abs(r_a - r_e) < 1e-12


def test_schedule_chaining_exact():
    for t in (0.31, 0.5, 0.77, 1.0):
        for n in (1, 2, 3, 5, 8):
            sched = make_schedule(t, n)
            assert sched.steps[0][1] == 0.0
            assert sched.steps[-1][0] == t or abs(sched.steps[-1][0] - t) == 0.0
            for (t_a, _), (_, r_b) in zip(sched.steps, sched.steps[1:]):
                assert t_a == r_b  # bitwise


def test_schedule_validation():
    with pytest.raises(ValueError):
        make_schedule(0.5, 0)
    with pytest.raises(ValueError):
        make_schedule(0.0, 2)
    with pytest.raises(ValueError):
        make_schedule(1.5, 2)
    with pytest.raises(ValueError):
        IterSchedule(steps=((0.5, 0.1),), n=1)  # first ref must be 0


# ---------------------------------------------------------------------------
# step
# ---------------------------------------------------------------------------

def test_step_with_start_reference_equals_interpolate():
    scene = make_scene()
    i0, i1, v01, v10 = scene_pair(scene)
    h, w = i0.height, i0.width
    ref = RefState(i0, uniform_map(0.0, h, w))
    for t in (0.3, 0.5, 0.8):
        out = step(i0, i1, v01, v10, uniform_map(t, h, w), ref)
        direct = interpolate(i0, i1, v01, v10, uniform_map(t, h, w))
        assert np.array_equal(out.data, direct.data)


def test_step_zero_increment_returns_reference():
    scene = make_scene()
    i0, i1, v01, v10 = scene_pair(scene)
    h, w = i0.height, i0.width
    truth, _, _ = render_scene(scene, 0.5)
    ref = RefState(truth, uniform_map(0.5, h, w))
    out = step(i0, i1, v01, v10, uniform_map(0.5, h, w), ref)
    assert np.abs(out.data - truth.data).max() <= 0.1


def test_step_uninformative_reference_keeps_endpoint_consistency():
    scene = make_scene()
    i0, i1, v01, v10 = scene_pair(scene)
    h, w = i0.height, i0.width
    gray = Frame(np.full((h, w, 1), 0.5))
    out = step(i0, i1, v01, v10, uniform_map(1.0, h, w),
               RefState(gray, uniform_map(0.5, h, w)))
    assert psnr(out, i1) >= 45.0


def test_step_schedule_violation():
    scene = make_scene()
    i0, i1, v01, v10 = scene_pair(scene)
    h, w = i0.height, i0.width
    ref = RefState(i0, uniform_map(0.8, h, w))
    with pytest.raises(ValueError):
        step(i0, i1, v01, v10, uniform_map(0.5, h, w), ref)


# ---------------------------------------------------------------------------
# iterative_interpolate
# ---------------------------------------------------------------------------

def test_single_iteration_bit_equals_direct():
    scene = make_scene()
    i0, i1, v01, v10 = scene_pair(scene)
    h, w = i0.height, i0.width
    for t in (0.25, 0.5, 0.9):
        iterated = iterative_interpolate(i0, i1, v01, v10, t, 1)
        direct = interpolate(i0, i1, v01, v10, uniform_map(t, h, w))
        assert np.array_equal(iterated.data, direct.data)


def test_single_iteration_map_version_bit_equals_direct():
    scene = make_scene()
    i0, i1, v01, v10 = scene_pair(scene)
    d = uniform_map(0.4, i0.height, i0.width)
    iterated = iterative_interpolate_map(i0, i1, v01, v10, d, 1)
    direct = interpolate(i0, i1, v01, v10, d)
    assert np.array_equal(iterated.data, direct.data)


def test_two_iterations_close_to_one_on_linear_motion():
    scene = make_scene()
    i0, i1, v01, v10 = scene_pair(scene)
    truth, _, _ = render_scene(scene, 0.5)
    p1 = psnr(iterative_interpolate(i0, i1, v01, v10, 0.5, 1), truth)
    p2 = psnr(iterative_interpolate(i0, i1, v01, v10, 0.5, 2), truth)
    assert p2 >= p1 - 0.5


def test_three_vs_two_iterations_no_collapse_on_curved_motion():
    scene, t = curved_fixture(*CURVED_SUITE[3])
    i0, i1, v01, v10 = scene_pair(scene)
    truth, _, _ = render_scene(scene, t)
    p2 = psnr(iterative_interpolate(i0, i1, v01, v10, t, 2), truth)
    p3 = psnr(iterative_interpolate(i0, i1, v01, v10, t, 3), truth)
    assert p3 >= p2 - 0.5


def test_double_resample_cost_bounded_on_translation():
    rng = np.random.default_rng(3)
    for k in range(4):
        chord = float(rng.uniform(15.3, 21.7))
        scene = make_scene(start=(14.3, 23.6), end=(14.3 + chord, 23.6), size=11.0,
                           shape=("disk", "square")[k % 2])
        i0, i1, v01, v10 = scene_pair(scene)
        truth, _, _ = render_scene(scene, 0.5)
        ps = [psnr(iterative_interpolate(i0, i1, v01, v10, 0.5, n), truth)
              for n in (1, 2, 3)]
        assert ps[1] >= ps[0] - 1.0
        assert ps[2] >= ps[1] - 1.0


def test_two_iterations_beat_one_on_curved_suite():
    wins = 0
    for params in CURVED_SUITE:
        scene, t = curved_fixture(*params)
        i0, i1, v01, v10 = scene_pair(scene)
        truth, _, _ = render_scene(scene, t)
        p1 = psnr(iterative_interpolate(i0, i1, v01, v10, t, 1), truth)
        p2 = psnr(iterative_interpolate(i0, i1, v01, v10, t, 2), truth)
        assert p2 >= p1
        wins += p2 > p1
    assert wins >= 7
