"""Two-frame distance-driven interpolation.

The pipeline scales each endpoint's flow by the per-pixel distance map,
push-warps both endpoints to the target position, resolves occlusions
with a one-channel blending mask, and takes the convex combination:

    out = M * warp(I0) + (1 - M) * warp(I1)

Intermediate flows are forward-splatted from source-anchored scaled
flows (not backward-approximated) so that per-pixel distance values act
at the pixels they describe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imaging import (
    SPLAT_EPS,
    Frame,
    FlowField,
    MaskImage,
    occlusion_splat,
    require_same_size,
)
from .indexing import DistanceMap

MASK_MODES = ("splat_weight", "photometric", "fixed")


@dataclass(frozen=True)
class InterpConfig:
    """Tuning knobs for the classical interpolation engine.

    eps guards blend denominators; mask_mode selects how the blending
    mask is formed (splat_weight favors the temporally nearer,
    successfully-splatted source; photometric additionally sharpens the
    blend where the two warped candidates disagree; fixed uses a
    constant alpha).
    """

    eps: float = 1e-8
    mask_mode: str = "splat_weight"
    photometric_sigma: float = 0.1
    fixed_alpha: float = 0.5

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.mask_mode not in MASK_MODES:
            raise ValueError(f"mask_mode must be one of {MASK_MODES}, got {self.mask_mode!r}")
        if self.photometric_sigma <= 0:
            raise ValueError(f"photometric_sigma must be positive, got {self.photometric_sigma}")
        if not 0.0 <= self.fixed_alpha <= 1.0:
            raise ValueError(f"fixed_alpha must lie in [0, 1], got {self.fixed_alpha}")


@dataclass(frozen=True)
class WarpPair:
    """Both endpoints warped to the target position, with splat weights."""

    i_plus: Frame
    i_minus: Frame
    w_plus: MaskImage
    w_minus: MaskImage

    def __post_init__(self):
        require_same_size(self.i_plus, self.i_minus, self.w_plus, self.w_minus)


def scaled_flows(v01: FlowField, v10: FlowField, d: DistanceMap):
    """Scale endpoint flows by the distance map.

    f0t moves start-frame content d of the way along its full motion;
    f1t moves end-frame content the remaining (1 - d) backward.
    """
    require_same_size(v01, v10, d)
    dd = d.data[:, :, None]
    return FlowField(dd * v01.data), FlowField((1.0 - dd) * v10.data)


def warp_endpoints(i0: Frame, i1: Frame, f0t: FlowField, f1t: FlowField) -> WarpPair:
    """Push-warp both endpoint frames to the target position.

    Uses the occlusion-resolving splat (importance = flow magnitude) so
    content moving onto static regions covers them instead of averaging
    with them; plain linear splatting would ghost every leading edge.
    """
    require_same_size(i0, i1, f0t, f1t)
    i_plus, w_plus = occlusion_splat(i0, f0t)
    i_minus, w_minus = occlusion_splat(i1, f1t)
    return WarpPair(i_plus, i_minus, w_plus, w_minus)


def occlusion_mask(pair: WarpPair, config: InterpConfig, d: DistanceMap) -> MaskImage:
    """One-channel blending mask resolving which warped source to trust.

    splat_weight: m = w+ (1-d) / (w+ (1-d) + w- d + eps), favoring the
    temporally nearer source that actually received splatted content.
    photometric: per-side weights additionally gated by agreement with
    the preliminary blend, which sharpens the mask toward the dominant
    side wherever the two candidates disagree.
    fixed: constant fixed_alpha.
    """
    require_same_size(pair.i_plus, d)
    if config.mask_mode == "fixed":
        return MaskImage(np.full((d.height, d.width), config.fixed_alpha))

    dd = d.data
    a = pair.w_plus.data * (1.0 - dd)
    b = pair.w_minus.data * dd
    if config.mask_mode == "photometric":
        diff = pair.i_plus.data - pair.i_minus.data
        sq = np.mean(diff * diff, axis=2)
        denom = a + b
        safe = np.maximum(denom, config.eps)
        # Residual of each candidate against the preliminary blend is the
        # other side's share of the disagreement.
        r_plus = (b / safe) ** 2 * sq
        r_minus = (a / safe) ** 2 * sq
        two_sigma_sq = 2.0 * config.photometric_sigma**2
        a = a * np.exp(-r_plus / two_sigma_sq)
        b = b * np.exp(-r_minus / two_sigma_sq)
    m = a / (a + b + config.eps)
    return MaskImage(np.clip(m, 0.0, 1.0))


def _fill_holes(values: np.ndarray, hole: np.ndarray, passes: int = 2):
    """Fill hole pixels with the average of valid 4-neighbors.

    Runs a fixed number of passes; returns (filled values, mask of
    pixels still unfilled).
    """
    out = values.copy()
    remaining = hole.copy()
    for _ in range(passes):
        if not remaining.any():
            break
        valid = ~remaining
        vf = valid.astype(np.float64)
        acc = np.zeros_like(out)
        cnt = np.zeros_like(vf)
        for shift, axis in (((1), 0), ((-1), 0), ((1), 1), ((-1), 1)):
            v_s = np.roll(vf, shift, axis=axis)
            o_s = np.roll(out, shift, axis=axis)
            # roll wraps around; zero out the wrapped border line
            if axis == 0:
                row = 0 if shift == 1 else -1
                v_s[row, :] = 0.0
                o_s[row, :, :] = 0.0
            else:
                col = 0 if shift == 1 else -1
                v_s[:, col] = 0.0
                o_s[:, col, :] = 0.0
            acc += o_s * v_s[:, :, None]
            cnt += v_s
        fillable = remaining & (cnt > 0)
        out[fillable] = acc[fillable] / cnt[fillable][:, None]
        remaining = remaining & ~fillable
    return out, remaining


def blend_two(pair: WarpPair, m: MaskImage) -> Frame:
    """Convex per-pixel blend of the warped endpoints.

    Pixels where one side is a splat hole take the valid side outright;
    pixels where both sides are holes are filled by two passes of
    4-neighbor averaging (any survivors keep their hole value).
    """
    require_same_size(pair.i_plus, m)
    mm = m.data[:, :, None]
    out = mm * pair.i_plus.data + (1.0 - mm) * pair.i_minus.data
    hole_p = pair.w_plus.data < SPLAT_EPS
    hole_m = pair.w_minus.data < SPLAT_EPS
    only_p = hole_p & ~hole_m
    only_m = hole_m & ~hole_p
    out[only_p] = pair.i_minus.data[only_p]
    out[only_m] = pair.i_plus.data[only_m]
    both = hole_p & hole_m
    if both.any():
        out, _ = _fill_holes(out, both)
    return Frame(np.clip(out, 0.0, 1.0))


def interpolate(i0: Frame, i1: Frame, v01: FlowField, v10: FlowField,
                d: DistanceMap, config: InterpConfig = InterpConfig()) -> Frame:
    """Distance-driven two-frame interpolation at the position given by d.

    Composition of scaled_flows -> warp_endpoints -> occlusion_mask ->
    blend_two; residual holes that survive neighbor filling take the
    temporally nearer endpoint's pixel.
    """
    require_same_size(i0, i1, v01, v10, d)
    f0t, f1t = scaled_flows(v01, v10, d)
    pair = warp_endpoints(i0, i1, f0t, f1t)
    m = occlusion_mask(pair, config, d)
    out = blend_two(pair, m).data.copy()

    both = (pair.w_plus.data < SPLAT_EPS) & (pair.w_minus.data < SPLAT_EPS)
    if both.any():
        # Redo the fill bookkeeping to find survivors of blend_two's passes.
        _, remaining = _fill_holes(out, both)
        if remaining.any():
            nearer0 = d.data < 0.5
            take0 = remaining & nearer0
            take1 = remaining & ~nearer0
            out[take0] = i0.data[take0]
            out[take1] = i1.data[take1]
    return Frame(np.clip(out, 0.0, 1.0))
