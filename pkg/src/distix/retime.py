"""Per-object re-timing: distance curves over masks compile to maps.

Each layer pairs a binary object mask with a curve d(t) giving the
object's traveled-distance fraction at playback time t.  Curves need
not be monotone, so objects can freeze or backtrack while the rest of
the scene plays forward.  Composing the layers over a background curve
yields one distance map per timestep, which the interpolation engine
renders directly.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .imaging import Frame, FlowField, MaskImage, load_frame, require_same_size
from .indexing import DistanceMap
from .interpolator import InterpConfig, interpolate
from .iterative import iterative_interpolate_map

CURVE_KINDS = ("linear", "piecewise_linear", "cubic_bezier")
OVERLAP_RULES = ("last_wins", "priority")
MASK_THRESHOLD = 0.5
FEATHER_RADIUS = 3.0
BEZIER_TOL = 1e-6


@dataclass(frozen=True)
class DistanceCurve:
    """d(t) mapping playback time to traveled-distance fraction.

    Control points are (t, d) pairs with t strictly increasing and
    covering [0, 1]; d stays in [0, 1] but is free to decrease
    (backtracking is a feature, not an error).
    """

    kind: str
    points: tuple

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise ValueError(f"curve kind must be one of {CURVE_KINDS}, got {self.kind!r}")
        pts = tuple((float(t), float(d)) for t, d in self.points)
        if len(pts) < 2:
            raise ValueError("curve needs at least two control points")
        if self.kind == "linear" and len(pts) != 2:
            raise ValueError("linear curve takes exactly two control points")
        if self.kind == "cubic_bezier" and len(pts) != 4:
            raise ValueError("cubic Bezier curve takes exactly four control points")
        ts = [p[0] for p in pts]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError(f"curve t values must be strictly increasing, got {ts}")
        if ts[0] != 0.0 or ts[-1] != 1.0:
            raise ValueError(f"curve domain must cover [0, 1], got [{ts[0]}, {ts[-1]}]")
        for t, d in pts:
            if not 0.0 <= d <= 1.0:
                raise ValueError(f"curve d values must lie in [0, 1], got {d} at t={t}")
        object.__setattr__(self, "points", pts)


def identity_curve() -> DistanceCurve:
    return DistanceCurve(kind="linear", points=((0.0, 0.0), (1.0, 1.0)))


def eval_curve(curve: DistanceCurve, t: float) -> float:
    """Evaluate d(t) for t in [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    pts = curve.points
    if curve.kind == "linear":
        (t0, d0), (t1, d1) = pts
        return d0 + (d1 - d0) * (t - t0) / (t1 - t0)
    if curve.kind == "piecewise_linear":
        ts = [p[0] for p in pts]
        i = min(max(bisect_right(ts, t) - 1, 0), len(pts) - 2)
        (t0, d0), (t1, d1) = pts[i], pts[i + 1]
        return d0 + (d1 - d0) * (t - t0) / (t1 - t0)
    # Cubic Bezier on (t, d) control points: the t component is monotone
    # in the curve parameter because control t values increase, so the
    # parameter for a given t is found by bisection.
    txs = np.array([p[0] for p in pts])
    tds = np.array([p[1] for p in pts])

    def bezier(coeffs, u):
        mu = 1.0 - u
        return (mu**3 * coeffs[0] + 3 * mu**2 * u * coeffs[1]
                + 3 * mu * u**2 * coeffs[2] + u**3 * coeffs[3])

    lo, hi = 0.0, 1.0
    while hi - lo > BEZIER_TOL:
        mid = 0.5 * (lo + hi)
        if bezier(txs, mid) < t:
            lo = mid
        else:
            hi = mid
    u = 0.5 * (lo + hi)
    return float(np.clip(bezier(tds, u), 0.0, 1.0))


@dataclass(frozen=True)
class RetimeLayer:
    mask: MaskImage
    curve: DistanceCurve
    name: str = ""


@dataclass(frozen=True)
class RetimeScript:
    """Ordered layers over a background curve.

    Masks are binarized at 0.5 when painting.  overlap "last_wins"
    lets later layers overwrite earlier ones; "priority" keeps the
    first listed layer on overlapping pixels.  feather blends each
    layer's value over a 3-pixel linear ramp at the mask border to hide
    seams where re-timed and normal regions shear apart.
    """

    layers: tuple = ()
    background: DistanceCurve = field(default_factory=identity_curve)
    overlap: str = "last_wins"
    feather: bool = False

    def __post_init__(self):
        if self.overlap not in OVERLAP_RULES:
            raise ValueError(f"overlap must be one of {OVERLAP_RULES}, got {self.overlap!r}")
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.layers:
            require_same_size(*(layer.mask for layer in self.layers))


def _feather_weights(binary: np.ndarray) -> np.ndarray:
    """Linear 3 px ramp from 0 at the outside to 1 deep inside the mask."""
    from scipy.ndimage import distance_transform_edt

    if not binary.any():
        return np.zeros(binary.shape)
    dist_inside = distance_transform_edt(binary)
    return np.clip(dist_inside / FEATHER_RADIUS, 0.0, 1.0)


def compose_maps(script: RetimeScript, t: float, height: int, width: int) -> DistanceMap:
    """Evaluate every curve at t and paint layer values over the
    background value inside each mask."""
    base = eval_curve(script.background, t)
    out = np.full((height, width), base)
    layers = script.layers if script.overlap == "last_wins" else tuple(reversed(script.layers))
    for layer in layers:
        if layer.mask.height != height or layer.mask.width != width:
            raise ValueError(
                f"mask size {layer.mask.height}x{layer.mask.width} does not match "
                f"canvas {height}x{width}")
        value = eval_curve(layer.curve, t)
        binary = layer.mask.data >= MASK_THRESHOLD
        if script.feather:
            w = _feather_weights(binary)
            out = out * (1.0 - w) + value * w
        else:
            out[binary] = value
    return DistanceMap(np.clip(out, 0.0, 1.0))


@dataclass(frozen=True)
class RenderJob:
    """Everything needed to render a re-timed sequence."""

    i0: Frame
    i1: Frame
    v01: FlowField
    v10: FlowField
    script: RetimeScript
    timesteps: tuple
    iters: int = 1
    config: InterpConfig = field(default_factory=InterpConfig)

    def __post_init__(self):
        require_same_size(self.i0, self.i1, self.v01, self.v10)
        ts = tuple(float(t) for t in self.timesteps)
        if any(not 0.0 <= t <= 1.0 for t in ts):
            raise ValueError("timesteps must lie in [0, 1]")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        object.__setattr__(self, "timesteps", ts)


def render_frame(job: RenderJob, t: float) -> Frame:
    d = compose_maps(job.script, t, job.i0.height, job.i0.width)
    if job.iters == 1:
        return interpolate(job.i0, job.i1, job.v01, job.v10, d, job.config)
    return iterative_interpolate_map(job.i0, job.i1, job.v01, job.v10, d, job.iters, job.config)


def render_retimed(job: RenderJob):
    """Render every timestep in order (each render is independent)."""
    return [render_frame(job, t) for t in job.timesteps]


# ---------------------------------------------------------------------------
# Script JSON
# ---------------------------------------------------------------------------

def curve_from_dict(obj: dict) -> DistanceCurve:
    try:
        kind = obj["kind"]
        points = tuple((float(t), float(d)) for t, d in obj["points"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad curve object: {exc}") from exc
    return DistanceCurve(kind=kind, points=points)


def curve_to_dict(curve: DistanceCurve) -> dict:
    return {"kind": curve.kind, "points": [list(p) for p in curve.points]}


def load_script(path, mask_loader=None) -> RetimeScript:
    """Load a retime script from JSON.

    Schema: {"layers": [{"mask": "path.png", "curve": {...}}, ...],
    "background": {curve...}, "overlap": "last_wins", "feather": false}.
    Mask paths resolve relative to the script file; mask_loader may
    override how mask names are resolved (used by the HTTP service).
    """
    path = Path(path)
    spec = json.loads(path.read_text())
    if mask_loader is None:
        def mask_loader(name):
            frame = load_frame(path.parent / name)
            return MaskImage(frame.data.mean(axis=2))
    layers = []
    for entry in spec.get("layers", []):
        mask = mask_loader(entry["mask"])
        layers.append(RetimeLayer(mask=mask, curve=curve_from_dict(entry["curve"]),
                                  name=str(entry["mask"])))
    background = curve_from_dict(spec["background"]) if "background" in spec else identity_curve()
    return RetimeScript(layers=tuple(layers), background=background,
                        overlap=spec.get("overlap", "last_wins"),
                        feather=bool(spec.get("feather", False)))
