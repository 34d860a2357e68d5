"""Shared synthetic-scene helpers for the test suite.

Scenes come from the lab generator so their flows and distance maps
are analytic; the reversed-scene trick yields the end-to-start flow
field anchored on the end frame's pixel grid.
"""

import numpy as np
import pytest

from distix.lab import SceneSpec, ShapeSpec, VelocityProfile, render_scene


def make_scene(kind="constant", strength=1.0, curvature=0.0, canvas=(48, 64),
               start=(18.5, 24.5), end=(38.5, 24.5), size=14.0, shape="square",
               color=1.0, background=0.0):
    """Default square sits on pixel boundaries, so its rasterization has
    no partially covered pixels and the analytic flow owns every object
    pixel exactly; pass fractional start/end for anti-aliased variants."""
    profile = VelocityProfile(kind=kind, strength=strength, curvature=curvature)
    spec = ShapeSpec(shape=shape, size=size, start=start, end=end,
                     profile=profile, color=color)
    return SceneSpec(canvas=canvas, shapes=(spec,), background=background)


def scene_pair(scene: SceneSpec):
    """Render (i0, i1, v01, v10) for a scene.

    v10 comes from the endpoint-swapped scene evaluated at t = 1, which
    anchors the full backward motion on the end frame's pixel grid.
    """
    from dataclasses import replace

    i0, _, _ = render_scene(scene, 0.0)
    i1, v01, _ = render_scene(scene, 1.0)
    reversed_shapes = tuple(
        replace(s, start=s.end, end=s.start, profile=VelocityProfile(kind="constant"))
        for s in scene.shapes)
    rev = replace(scene, shapes=reversed_shapes)
    _, v10, _ = render_scene(rev, 1.0)
    return i0, i1, v01, v10


def luma_centroid(frame, background=0.0):
    """Intensity-weighted centroid of |frame - background| (x, y)."""
    weight = np.abs(frame.data.mean(axis=2) - background)
    total = weight.sum()
    ys, xs = np.mgrid[0 : frame.height, 0 : frame.width]
    return np.array([float((xs * weight).sum() / total),
                     float((ys * weight).sum() / total)])


# Curved-motion fixture suite for the iteration ablation: disks whose
# paths bow off the chord, scored at the listed time.  Geometry picked
# from a deterministic parameter grid (shape, curvature, chord, size).
CURVED_SUITE = (
    (0.60, 2.0, 15, 12), (0.60, 2.0, 15, 9), (0.60, 2.5, 15, 12),
    (0.60, 3.0, 15, 12), (0.60, 2.5, 15, 9), (0.60, 3.5, 15, 12),
    (0.60, 2.0, 18, 12), (0.60, 3.0, 15, 9), (0.75, 2.5, 15, 12),
    (0.75, 3.0, 18, 12),
)


def curved_fixture(t, curvature, chord, size):
    scene = make_scene(kind="curved", curvature=curvature, start=(14.5, 23.5),
                       end=(14.5 + chord, 23.5), size=float(size), shape="disk")
    return scene, t


def make_multiframe(kind="accelerate", strength=0.3, chord=14.0, size=11.0,
                    shape="disk", canvas=(48, 80), start_x=16.5, y=23.5, color=1.0):
    """Four-frame fixture: frames at times (-1, 0, 1, 2) with flows
    anchored on the time-0 footprint.

    Shape motion follows the profile's position fraction s(tau) along a
    horizontal chord.  strength must keep s monotone over the whole
    outer span (<= 1/3 for accelerate/decelerate), or the early/late
    frames would double back.
    """
    from distix.imaging import Frame, FlowField
    from distix.lab import ShapeSpec, VelocityProfile, _coverage
    from distix.trajectory import MultiFrameSet

    profile = VelocityProfile(kind=kind, strength=strength)
    spec = ShapeSpec(shape=shape, size=size, start=(start_x, y),
                     end=(start_x + chord, y), profile=profile, color=color)
    h, w = canvas
    taus = (-1.0, 0.0, 1.0, 2.0)
    positions = {}
    for tau in taus + (0.5,):
        s = profile.s(tau)
        pos = np.array([start_x + s * chord, y])
        r = size / 2.0
        assert -0.5 <= pos[0] - r and pos[0] + r <= w - 0.5, f"shape leaves canvas at tau={tau}"
        positions[tau] = pos

    channels = len(spec.color)
    bg = np.zeros((h, w, channels))

    def render_at(tau):
        s = profile.s(tau)
        pos = np.array([start_x + s * chord, y])
        cov = _coverage(spec, pos, h, w)
        img = bg * (1.0 - cov[:, :, None]) + np.asarray(spec.color) * cov[:, :, None]
        return Frame(np.clip(img, 0.0, 1.0))

    frames = {tau: render_at(tau) for tau in taus}
    footprint = _coverage(spec, positions[0.0], h, w) >= 0.5

    def flow_to(tau):
        disp = positions[tau] - positions[0.0]
        data = np.zeros((h, w, 2))
        data[footprint] = disp
        return FlowField(data)

    mfset = MultiFrameSet(i_minus1=frames[-1.0], i0=frames[0.0], i1=frames[1.0],
                          i2=frames[2.0], v0_minus1=flow_to(-1.0),
                          v01=flow_to(1.0), v02=flow_to(2.0))
    return mfset, profile, render_at


@pytest.fixture
def translation_scene():
    return make_scene()


@pytest.fixture
def small_rng():
    return np.random.default_rng(1234)
