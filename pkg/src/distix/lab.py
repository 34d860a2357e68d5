"""Synthetic verification of velocity ambiguity and mode averaging.

Scenes with controlled velocity profiles share their start and end
frames, so a regressor conditioned on a scalar timestep sees identical
inputs with conflicting targets and is forced toward their mean (blur),
while one conditioned on per-pixel traveled distance can tell the
samples apart.  Everything here is analytic and seeded: positions,
flows, and distance maps come from closed-form motion profiles, and the
regressor is a hand-backpropagated two-layer perceptron so training is
bit-deterministic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .imaging import Frame, FlowField
from .indexing import DistanceMap, STATIONARY_FALLBACK

PROFILE_KINDS = ("constant", "accelerate", "decelerate", "curved")
PATCH_RADIUS = 2
SUPERSAMPLE = 4
CONFLICT_SPREAD = 0.2


# ---------------------------------------------------------------------------
# Motion profiles and scenes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VelocityProfile:
    """Position fraction s(t) along a path, with optional perpendicular bow.

    s(0) = 0 and s(1) = 1 exactly for every kind; s is monotone for the
    non-curved kinds.  strength in [0, 1] sets how hard the profile
    accelerates or decelerates; curvature (pixels) bows the path
    perpendicular to the chord, peaking mid-way.
    """

    kind: str
    strength: float = 1.0
    curvature: float = 0.0

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"kind must be one of {PROFILE_KINDS}, got {self.kind!r}")
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError(f"strength must lie in [0, 1], got {self.strength}")

    def s(self, t: float) -> float:
        t = float(t)
        if self.kind == "accelerate":
            return t + self.strength * t * (t - 1.0)
        if self.kind == "decelerate":
            return t + self.strength * t * (1.0 - t)
        return t

    def bow(self, t: float) -> float:
        if self.kind != "curved" or t <= 0.0 or t >= 1.0:
            return 0.0
        return self.curvature * float(np.sin(np.pi * t))


@dataclass(frozen=True)
class ShapeSpec:
    shape: str  # "disk" or "square"
    size: float  # diameter / side length in pixels
    start: tuple
    end: tuple
    profile: VelocityProfile
    color: tuple

    def __post_init__(self):
        if self.shape not in ("disk", "square"):
            raise ValueError(f"shape must be disk or square, got {self.shape!r}")
        color = self.color if isinstance(self.color, tuple) else (float(self.color),)
        object.__setattr__(self, "color", tuple(float(c) for c in color))

    def position(self, t: float) -> np.ndarray:
        start = np.asarray(self.start, dtype=np.float64)
        chord = np.asarray(self.end, dtype=np.float64) - start
        pos = start + self.profile.s(t) * chord
        bow = self.profile.bow(t)
        if bow != 0.0:
            norm = np.hypot(*chord)
            if norm > 0:
                pos = pos + bow * np.array([-chord[1], chord[0]]) / norm
        return pos


@dataclass(frozen=True)
class SceneSpec:
    """Canvas, moving shapes, and background for a synthetic scene."""

    canvas: tuple  # (height, width)
    shapes: tuple
    background: tuple = (0.0,)
    seed: int = 0

    def __post_init__(self):
        bg = self.background if isinstance(self.background, tuple) else (float(self.background),)
        object.__setattr__(self, "background", tuple(float(c) for c in bg))
        object.__setattr__(self, "shapes", tuple(self.shapes))
        channels = {len(s.color) for s in self.shapes} | {len(self.background)}
        if len(channels) > 1 or channels - {1, 3}:
            raise ValueError("shape colors and background must all be 1- or 3-channel")
        for t in np.linspace(0.0, 1.0, 65):
            self._check_inside(float(t))

    @property
    def channels(self) -> int:
        return len(self.background)

    def _check_inside(self, t: float) -> None:
        h, w = self.canvas
        for s in self.shapes:
            cx, cy = s.position(t)
            r = s.size / 2.0
            if cx - r < -0.5 or cx + r > w - 0.5 or cy - r < -0.5 or cy + r > h - 0.5:
                raise ValueError(f"shape leaves canvas at t={t:.4f} (center {cx:.2f},{cy:.2f})")


def _coverage(shape: ShapeSpec, center: np.ndarray, h: int, w: int) -> np.ndarray:
    """Anti-aliased coverage in [0, 1] via 4x4 subsampling per pixel."""
    sub = (np.arange(SUPERSAMPLE) + 0.5) / SUPERSAMPLE - 0.5
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    sx = xs[:, :, None, None] + sub[None, None, :, None]
    sy = ys[:, :, None, None] + sub[None, None, None, :]
    r = shape.size / 2.0
    if shape.shape == "disk":
        inside = (sx - center[0]) ** 2 + (sy - center[1]) ** 2 <= r * r
    else:
        inside = (np.abs(sx - center[0]) <= r) & (np.abs(sy - center[1]) <= r)
    return inside.mean(axis=(2, 3))


def render_scene(spec: SceneSpec, t: float):
    """Rasterize the scene at time t.

    Returns (frame, analytic flow from time 0 to t, analytic distance
    map).  The flow holds each shape's displacement on its time-0
    footprint and zero on the static background; the distance map holds
    the projection ratio of that displacement onto the full motion
    (s(t) for these paths) on the footprint and the stationary fallback
    elsewhere.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    spec._check_inside(t)
    h, w = spec.canvas
    c = spec.channels
    img = np.tile(np.asarray(spec.background, dtype=np.float64), (h, w, 1))
    flow = np.zeros((h, w, 2))
    dmap = np.full((h, w), STATIONARY_FALLBACK)
    for shape in spec.shapes:
        cov = _coverage(shape, shape.position(t), h, w)
        color = np.asarray(shape.color, dtype=np.float64)
        img = img * (1.0 - cov[:, :, None]) + color * cov[:, :, None]

        footprint = _coverage(shape, shape.position(0.0), h, w) >= 0.5
        disp = shape.position(t) - shape.position(0.0)
        chord = shape.position(1.0) - shape.position(0.0)
        flow[footprint] = disp
        norm_sq = float(chord @ chord)
        ratio = STATIONARY_FALLBACK if norm_sq == 0.0 else float(disp @ chord) / norm_sq
        dmap[footprint] = np.clip(ratio, 0.0, 1.0)
    return Frame(np.clip(img, 0.0, 1.0)[:, :, :c]), FlowField(flow), DistanceMap(dmap)


@dataclass(frozen=True)
class TripletSample:
    """One training triplet with its analytic motion ground truth."""

    i0: Frame
    i1: Frame
    it: Frame
    t: float
    d_true: DistanceMap
    v01: FlowField
    v0t: FlowField


def sample_profiles(n: int, rng: np.random.Generator):
    """Deterministically varied profiles, cycling through the ambiguous
    kinds first (accelerate vs decelerate is the canonical conflict).
    A single profile is the constant-speed baseline (no ambiguity)."""
    if n < 1:
        raise ValueError("need at least one profile")
    if n == 1:
        return [VelocityProfile(kind="constant")]
    kinds = ("accelerate", "decelerate", "curved", "constant")
    profiles = []
    for i in range(n):
        kind = kinds[i % len(kinds)]
        strength = float(rng.uniform(0.7, 1.0))
        curvature = float(rng.uniform(1.0, 1.8)) if kind == "curved" else 0.0
        profiles.append(VelocityProfile(kind=kind, strength=strength, curvature=curvature))
    return profiles


def make_dataset(base: SceneSpec, n_profiles: int, timesteps, seed: int = 0):
    """Render triplets for n profiles over the given timesteps.

    Every sample shares the same start and end frames (profiles agree
    at t = 0 and t = 1), so time indexing sees conflicting targets for
    identical inputs while the per-sample distance maps disagree.
    """
    if n_profiles < 1:
        raise ValueError("need at least one profile")
    rng = np.random.default_rng(seed)
    profiles = sample_profiles(n_profiles, rng)
    samples = []
    for profile in profiles:
        scene = replace(base, shapes=tuple(replace(s, profile=profile) for s in base.shapes))
        i0, _, _ = render_scene(scene, 0.0)
        i1, v01, _ = render_scene(scene, 1.0)
        for t in timesteps:
            it, v0t, d_true = render_scene(scene, float(t))
            samples.append(TripletSample(i0=i0, i1=i1, it=it, t=float(t),
                                         d_true=d_true, v01=v01, v0t=v0t))
    return samples


# ---------------------------------------------------------------------------
# Tiny per-pixel regressor with hand-derived backpropagation
# ---------------------------------------------------------------------------

@dataclass
class TinyModel:
    """Two-layer per-pixel perceptron: features -> hidden -> output.

    Weights are seeded and training is full-batch, so runs are
    bit-deterministic.  activation is "tanh" or "identity".
    """

    in_dim: int
    hidden: int = 16
    out_dim: int = 1
    activation: str = "tanh"
    seed: int = 0
    w1: np.ndarray = field(init=False)
    b1: np.ndarray = field(init=False)
    w2: np.ndarray = field(init=False)
    b2: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.activation not in ("tanh", "identity"):
            raise ValueError(f"unknown activation {self.activation!r}")
        rng = np.random.default_rng(self.seed)
        self.w1 = rng.normal(0.0, 1.0 / np.sqrt(self.in_dim), size=(self.hidden, self.in_dim))
        self.b1 = np.zeros(self.hidden)
        self.w2 = rng.normal(0.0, 1.0 / np.sqrt(self.hidden), size=(self.out_dim, self.hidden))
        self.b2 = np.zeros(self.out_dim)

    def _act(self, z: np.ndarray) -> np.ndarray:
        return np.tanh(z) if self.activation == "tanh" else z

    def _act_grad(self, h: np.ndarray) -> np.ndarray:
        return 1.0 - h * h if self.activation == "tanh" else np.ones_like(h)

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        h = self._act(x @ self.w1.T + self.b1)
        return h @ self.w2.T + self.b2

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray):
        """L2 loss (mean over all outputs) and its weight gradients."""
        x = np.atleast_2d(x)
        y = np.atleast_2d(y)
        h = self._act(x @ self.w1.T + self.b1)
        pred = h @ self.w2.T + self.b2
        diff = pred - y
        loss = float(np.mean(diff * diff))
        dpred = 2.0 * diff / diff.size
        g_w2 = dpred.T @ h
        g_b2 = dpred.sum(axis=0)
        dh = dpred @ self.w2
        dz = dh * self._act_grad(h)
        g_w1 = dz.T @ x
        g_b1 = dz.sum(axis=0)
        return loss, (g_w1, g_b1, g_w2, g_b2)

    def apply_grads(self, grads, lr: float) -> None:
        g_w1, g_b1, g_w2, g_b2 = grads
        self.w1 -= lr * g_w1
        self.b1 -= lr * g_b1
        self.w2 -= lr * g_w2
        self.b2 -= lr * g_b2


def _patch_rows(data: np.ndarray) -> np.ndarray:
    """Edge-padded 5x5 patches around every pixel, one row per pixel."""
    if data.ndim == 2:
        data = data[:, :, None]
    h, w, c = data.shape
    r = PATCH_RADIUS
    pad = np.pad(data, ((r, r), (r, r), (0, 0)), mode="edge")
    win = np.lib.stride_tricks.sliding_window_view(pad, (2 * r + 1, 2 * r + 1), axis=(0, 1))
    return win.reshape(h * w, -1)


def build_features(sample: TripletSample, indexing: str):
    """Feature rows (patches of I0, I1, and the index map) and targets.

    indexing "time" uses a uniform timestep map; "distance" uses the
    per-pixel traveled-distance map.
    """
    if indexing not in ("time", "distance"):
        raise ValueError(f"indexing must be 'time' or 'distance', got {indexing!r}")
    h, w = sample.i0.height, sample.i0.width
    if indexing == "time":
        idx_map = np.full((h, w), sample.t)
    else:
        idx_map = sample.d_true.data
    x = np.concatenate([
        _patch_rows(sample.i0.data),
        _patch_rows(sample.i1.data),
        _patch_rows(idx_map),
    ], axis=1)
    y = sample.it.data.reshape(h * w, -1)
    return x, y


def build_training_set(dataset, indexing: str):
    """Stack feature rows for every sample; also returns (sample index,
    pixel index) metadata aligned with the rows."""
    xs, ys, meta = [], [], []
    for si, sample in enumerate(dataset):
        x, y = build_features(sample, indexing)
        xs.append(x)
        ys.append(y)
        meta.extend((si, pi) for pi in range(x.shape[0]))
    return np.concatenate(xs), np.concatenate(ys), meta


def feature_dim(dataset) -> int:
    sample = dataset[0]
    return 25 * (2 * sample.i0.channels + 1)


def train(model: TinyModel, data, indexing: str, epochs: int = 2000, lr: float = 0.05):
    """Full-batch gradient descent on the L2 objective.

    `data` is a list of TripletSample or a prebuilt (X, Y) pair.
    Returns the per-epoch loss curve; raises if the loss diverges.
    """
    if isinstance(data, tuple):
        x, y = data
    else:
        if len(data) == 0:
            raise ValueError("empty dataset")
        x, y, _ = build_training_set(data, indexing)
    losses = np.zeros(epochs)
    for epoch in range(epochs):
        loss, grads = model.loss_and_grads(x, y)
        if not np.isfinite(loss):
            raise RuntimeError(f"training diverged (loss not finite) at epoch {epoch}")
        model.apply_grads(grads, lr)
        losses[epoch] = loss
    return losses


def gradient_check(model: TinyModel, sample, eps: float = 1e-5,
                   indexing: str = "distance") -> float:
    """Central finite differences vs analytic gradients over all weights.

    `sample` is a TripletSample or a prebuilt (X, Y) pair.  Returns the
    maximum relative error.
    """
    if isinstance(sample, tuple):
        x, y = sample
    else:
        x, y = build_features(sample, indexing)
    _, grads = model.loss_and_grads(x, y)
    params = (model.w1, model.b1, model.w2, model.b2)
    max_err = 0.0
    for p, g in zip(params, grads):
        flat = p.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            lo_p, _ = model.loss_and_grads(x, y)
            flat[i] = orig - eps
            lo_m, _ = model.loss_and_grads(x, y)
            flat[i] = orig
            numeric = (lo_p - lo_m) / (2.0 * eps)
            denom = max(1e-12, abs(numeric) + abs(gflat[i]))
            max_err = max(max_err, abs(numeric - gflat[i]) / denom)
    return max_err


# ---------------------------------------------------------------------------
# Mode-averaging report
# ---------------------------------------------------------------------------

# Tolerance at which the report marks a conflicting pixel as verified.
MODE_AVERAGE_TOL = 2e-2


@dataclass(frozen=True)
class ModeAverageReport:
    """Per-conflict verification that time indexing collapses to the
    target mean while distance indexing tracks each sample's target."""

    rows: tuple  # (y, x, t, n, spread, err_time_vs_mean, max_err_dist)
    n_conflicts: int
    n_time_ok: int
    n_dist_ok: int
    max_time_err: float
    max_dist_err: float

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["pixel_y", "pixel_x", "t", "n_targets",
                             "target_spread", "err_time_vs_mean", "max_err_dist"])
            writer.writerows(self.rows)


def mode_average_report(dataset, model_time: TinyModel, model_dist: TinyModel,
                        spread_threshold: float = CONFLICT_SPREAD,
                        tolerance: float = MODE_AVERAGE_TOL) -> ModeAverageReport:
    """Check the mode-averaging prediction on conflicting pixels.

    Pixels whose targets disagree across profiles (spread above the
    threshold) should be predicted near the empirical target mean by
    the time-indexed model, while the distance-indexed model should
    match each sample's own target.  Each conflict is marked verified
    when the respective error is within `tolerance`.
    """
    x_t, y_t, meta = build_training_set(dataset, "time")
    x_d, y_d, _ = build_training_set(dataset, "distance")
    pred_t = model_time.forward(x_t)
    pred_d = model_dist.forward(x_d)

    w = dataset[0].i0.width
    groups = {}
    for row, (si, pi) in enumerate(meta):
        groups.setdefault((dataset[si].t, pi), []).append(row)

    rows = []
    n_time_ok = 0
    n_dist_ok = 0
    max_time_err = 0.0
    max_dist_err = 0.0
    for (t, pi), idxs in sorted(groups.items()):
        targets = y_t[idxs]
        spread = float(np.max(targets.max(axis=0) - targets.min(axis=0)))
        if spread <= spread_threshold:
            continue
        mean_target = targets.mean(axis=0)
        err_time = float(np.max(np.abs(pred_t[idxs[0]] - mean_target)))
        err_dist = float(np.max(np.abs(pred_d[idxs] - y_d[idxs])))
        n_time_ok += err_time <= tolerance
        n_dist_ok += err_dist <= tolerance
        max_time_err = max(max_time_err, err_time)
        max_dist_err = max(max_dist_err, err_dist)
        rows.append((pi // w, pi % w, t, len(idxs), spread, err_time, err_dist))
    return ModeAverageReport(rows=tuple(rows), n_conflicts=len(rows),
                             n_time_ok=n_time_ok, n_dist_ok=n_dist_ok,
                             max_time_err=max_time_err, max_dist_err=max_dist_err)
