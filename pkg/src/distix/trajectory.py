"""Per-pixel cubic B-spline motion trajectories from four frames.

Given frames at normalized times (-1, 0, 1, 2) and the flows from the
anchor frame I0 to each neighbor, the per-pixel displacement curve

    V_0t = sum_i B_i3(t) * P_i

is fitted in closed form: with four control points and four observation
times the collocation system is square, solved via ridge-stabilized
normal equations with the t = 0 row heavily weighted so trajectories
stay anchored (zero displacement) at the start frame.  Evaluating the
curve at any t yields a dense flow, and projecting it onto the
end-to-end flow yields a spatially varying distance map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .imaging import (
    Frame,
    FlowField,
    MaskImage,
    advect_flow,
    occlusion_splat,
    require_same_size,
)
from .indexing import DEFAULT_EPS, DistanceMap, distance_map_from_flows
from .interpolator import InterpConfig

OBSERVATION_TIMES = (-1.0, 0.0, 1.0, 2.0)
ANCHOR_WEIGHT = 100.0
RIDGE_LAMBDA = 1e-8
# Baseline fusion weight of the inner two-frame estimate in refine_multiframe.
INNER_BASELINE_WEIGHT = 0.5


@dataclass(frozen=True)
class SplineBasis:
    """Clamped-uniform cubic B-spline basis over a time interval.

    With n_ctrl control points and degree 3, the knot vector repeats
    each end knot four times; interior knots (if any) are uniform.  The
    basis functions are nonnegative and partition unity on the domain.
    """

    n_ctrl: int = 4
    t_min: float = -1.0
    t_max: float = 2.0
    degree: int = field(default=3, init=False)

    def __post_init__(self):
        if self.n_ctrl < self.degree + 1:
            raise ValueError(f"need at least {self.degree + 1} control points")
        if not self.t_max > self.t_min:
            raise ValueError("empty time domain")

    @property
    def knots(self) -> np.ndarray:
        k = self.degree
        n_interior = self.n_ctrl - k - 1
        interior = np.linspace(self.t_min, self.t_max, n_interior + 2)[1:-1]
        return np.concatenate([
            np.full(k + 1, self.t_min), interior, np.full(k + 1, self.t_max),
        ])


def basis_eval(basis: SplineBasis, t: float) -> np.ndarray:
    """Evaluate all basis functions at t via the Cox-de Boor recursion.

    Returns nonnegative weights of length n_ctrl summing to 1.
    """
    if not basis.t_min <= t <= basis.t_max:
        raise ValueError(f"t={t} outside spline domain [{basis.t_min}, {basis.t_max}]")
    knots = basis.knots
    k = basis.degree
    n = basis.n_ctrl
    # Degree-0 seeds: indicator of the half-open knot span, with the last
    # span closed so the right domain end evaluates to the final control.
    b = np.zeros(len(knots) - 1)
    for i in range(len(b)):
        if knots[i] <= t < knots[i + 1]:
            b[i] = 1.0
    if t == basis.t_max:
        for i in range(len(b) - 1, -1, -1):
            if knots[i] < knots[i + 1]:
                b[i] = 1.0
                break
    for d in range(1, k + 1):
        nb = np.zeros(len(knots) - 1 - d)
        for i in range(len(nb)):
            left_den = knots[i + d] - knots[i]
            right_den = knots[i + d + 1] - knots[i + 1]
            left = (t - knots[i]) / left_den * b[i] if left_den > 0 else 0.0
            right = (knots[i + d + 1] - t) / right_den * b[i + 1] if right_den > 0 else 0.0
            nb[i] = left + right
        b = nb
    return b[:n]


@dataclass(frozen=True)
class SplineTrajectory:
    """Per-pixel control points of a cubic displacement curve.

    controls has shape (n_ctrl, H, W, 2) in pixel units; the evaluated
    displacement at t = 0 is zero (trajectories are anchored at the
    start frame).  fallback marks pixels where the fit was degenerate
    and a linear-motion trajectory was substituted.
    """

    basis: SplineBasis
    controls: np.ndarray
    fallback: np.ndarray

    def __post_init__(self):
        ctrl = np.asarray(self.controls, dtype=np.float64)
        if ctrl.ndim != 4 or ctrl.shape[0] != self.basis.n_ctrl or ctrl.shape[3] != 2:
            raise ValueError(f"controls must be (n_ctrl, H, W, 2), got {ctrl.shape}")
        object.__setattr__(self, "controls", ctrl)

    @property
    def height(self) -> int:
        return self.controls.shape[1]

    @property
    def width(self) -> int:
        return self.controls.shape[2]


@dataclass(frozen=True)
class MultiFrameSet:
    """Four consecutive frames plus flows from I0 to each neighbor."""

    i_minus1: Frame
    i0: Frame
    i1: Frame
    i2: Frame
    v0_minus1: FlowField
    v01: FlowField
    v02: FlowField

    def __post_init__(self):
        require_same_size(self.i_minus1, self.i0, self.i1, self.i2,
                          self.v0_minus1, self.v01, self.v02)


@dataclass(frozen=True)
class ThreeWayMask:
    """Convex three-channel blending mask: m1 + m2 + m3 = 1 per pixel."""

    m1: MaskImage
    m2: MaskImage
    m3: MaskImage

    def __post_init__(self):
        require_same_size(self.m1, self.m2, self.m3)
        total = self.m1.data + self.m2.data + self.m3.data
        if np.abs(total - 1.0).max() > 1e-6:
            raise ValueError("three-way mask channels must sum to 1 per pixel")


def _collocation_matrix(basis: SplineBasis) -> np.ndarray:
    return np.stack([basis_eval(basis, t) for t in OBSERVATION_TIMES])


def _solve_operator(basis: SplineBasis) -> np.ndarray:
    """Ridge-stabilized weighted normal-equation solve operator.

    Returns M such that controls = M @ observations; shared by every
    pixel because the observation times are fixed.
    """
    a = _collocation_matrix(basis)
    w_sq = np.ones(len(OBSERVATION_TIMES))
    w_sq[OBSERVATION_TIMES.index(0.0)] = ANCHOR_WEIGHT**2
    atw = a.T * w_sq
    lhs = atw @ a + RIDGE_LAMBDA * np.eye(basis.n_ctrl)
    return np.linalg.solve(lhs, atw)


def fit_trajectory(mfset: MultiFrameSet) -> SplineTrajectory:
    """Fit per-pixel cubic trajectories to the three observed flows.

    Observations are the displacements at t in (-1, 0, 1, 2): the flows
    to the neighbors plus the implicit zero at t = 0, whose row is
    weighted x100 to enforce anchoring.  Pixels with non-finite
    observations fall back to a linear-motion trajectory (reproducing
    t * v01) and are flagged.
    """
    basis = SplineBasis()
    m = _solve_operator(basis)
    h, w = mfset.i0.height, mfset.i0.width
    obs = np.stack([
        mfset.v0_minus1.data,
        np.zeros((h, w, 2)),
        mfset.v01.data,
        mfset.v02.data,
    ])  # (4, H, W, 2)

    bad = ~np.all(np.isfinite(obs), axis=(0, 3))
    if bad.any():
        obs = np.where(np.isfinite(obs), obs, 0.0)
    controls = np.tensordot(m, obs, axes=1)  # (n_ctrl, H, W, 2)

    if bad.any():
        # Linear fallback: controls reproducing t * v01 at the bad pixels.
        times = np.asarray(OBSERVATION_TIMES)
        lin_coeff = m @ times  # (n_ctrl,)
        lin = lin_coeff[:, None, None, None] * mfset.v01.data[None]
        controls[:, bad, :] = lin[:, bad, :]
    return SplineTrajectory(basis=basis, controls=controls, fallback=bad)


def eval_flow(traj: SplineTrajectory, t: float) -> FlowField:
    """Evaluate the per-pixel displacement curve at time t."""
    weights = basis_eval(traj.basis, t)
    return FlowField(np.tensordot(weights, traj.controls, axes=1))


def dense_distance_map(traj: SplineTrajectory, t: float, v01: FlowField,
                       eps: float = DEFAULT_EPS) -> DistanceMap:
    """Spatially varying distance map from the fitted trajectory.

    Projects the evaluated displacement at t onto the end-to-end flow
    and clamps to [0, 1].
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return distance_map_from_flows(eval_flow(traj, t), v01, eps=eps, clamp=True)


def remap_distance_to_outer(d: DistanceMap) -> DistanceMap:
    """Re-express an inner-span map relative to the outer frame pair.

    Under constant speed with frames at times (-1, 0, 1, 2), a position
    d within [I0, I1] sits at (d + 1) / 3 within [I-1, I2].
    """
    return DistanceMap((d.data + 1.0) / 3.0)


def outer_distance_map(traj: SplineTrajectory, t: float,
                       eps: float = DEFAULT_EPS) -> DistanceMap:
    """Trajectory-derived position of time t within the outer span.

    Projects the displacement accumulated since the first frame onto
    the full first-to-last motion; more faithful than the constant
    speed remap when motion accelerates.
    """
    v_first_to_t = eval_flow(traj, t).data - eval_flow(traj, -1.0).data
    v_first_to_last = eval_flow(traj, 2.0).data - eval_flow(traj, -1.0).data
    return distance_map_from_flows(FlowField(v_first_to_t), FlowField(v_first_to_last),
                                   eps=eps, clamp=True)


def blend_three(i_plus: Frame, i_inner: Frame, i_minus: Frame,
                mask: ThreeWayMask) -> Frame:
    """Convex three-way blend: m1*plus + m2*inner + m3*minus."""
    require_same_size(i_plus, i_inner, i_minus, mask.m1)
    out = (mask.m1.data[:, :, None] * i_plus.data
           + mask.m2.data[:, :, None] * i_inner.data
           + mask.m3.data[:, :, None] * i_minus.data)
    return Frame(np.clip(out, 0.0, 1.0))


def three_way_mask(w_outer_plus: MaskImage, w_outer_minus: MaskImage,
                   d_prime: DistanceMap) -> ThreeWayMask:
    """Fusion mask over (outer-plus warp, inner estimate, outer-minus warp).

    Outer candidates weigh in by splat weight x temporal proximity; the
    inner estimate keeps a constant baseline weight so refinement can
    never fully discard it.
    """
    dd = d_prime.data
    w1 = w_outer_plus.data * (1.0 - dd)
    w2 = np.full_like(dd, INNER_BASELINE_WEIGHT)
    w3 = w_outer_minus.data * dd
    total = w1 + w2 + w3
    return ThreeWayMask(MaskImage(w1 / total), MaskImage(w2 / total), MaskImage(w3 / total))


def refine_multiframe(mfset: MultiFrameSet, d_prime: DistanceMap, i_t: Frame,
                      v_m1_to_2: FlowField | None = None,
                      config: InterpConfig = InterpConfig()) -> Frame:
    """Refine an inner two-frame estimate with the outer frame pair.

    Warps the first frame forward by d' of the first-to-last motion and
    the last frame backward by the remainder, then blends the three
    candidates with a convex three-way mask.  d_prime expresses the
    target's position within the [I-1, I2] span.  When the
    first-to-last flow is not supplied it is derived from the fitted
    trajectory (difference of endpoint displacements, expressed on the
    anchor grid).
    """
    require_same_size(mfset.i0, d_prime, i_t)
    if v_m1_to_2 is None:
        traj = fit_trajectory(mfset)
        v_m1_to_2 = FlowField(eval_flow(traj, 2.0).data - eval_flow(traj, -1.0).data)
    require_same_size(mfset.i0, v_m1_to_2)

    dd = d_prime.data[:, :, None]
    # Flows are expressed on the anchor (I0) grid; re-anchor each onto
    # the geometry of the outer frame it will warp.
    plus_flow, _ = advect_flow(FlowField(dd * v_m1_to_2.data), mfset.v0_minus1)
    minus_flow, _ = advect_flow(FlowField(-(1.0 - dd) * v_m1_to_2.data), mfset.v02)
    i_plus, w_plus = occlusion_splat(mfset.i_minus1, plus_flow)
    i_minus, w_minus = occlusion_splat(mfset.i2, minus_flow)

    mask = three_way_mask(w_plus, w_minus, d_prime)
    return blend_three(i_plus, i_t, i_minus, mask)
