"""Distance-ratio maps: per-pixel indexing of traveled motion.

A distance map stores, for each pixel of the start frame, the fraction
of its total start-to-end motion already traveled at the query time.
It is computed by projecting the partial flow onto the full flow:

    D(p) = (V_0t(p) . V_01(p)) / max(||V_01(p)||^2, eps^2)

which equals ||V_0t|| cos(theta) / ||V_01|| but avoids evaluating the
angle explicitly.  Pixels with negligible end-to-end motion fall back
to 0.5: any value yields the same (identity) warp for zero flow, and
0.5 keeps maps visually neutral.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imaging import DimensionMismatchError, FileFormatError, FlowField, _as_locked, require_same_size

DEFAULT_EPS = 1e-3  # pixel-units guard for negligible end-to-end motion
STATIONARY_FALLBACK = 0.5


@dataclass(frozen=True)
class DistanceMap:
    """H x W map of dimensionless traveled-distance ratios.

    Values are finite; they lie in [0, 1] only after a clamping stage
    (unclamped maps may overshoot for decelerating or reversing motion).
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"distance map must be HxW, got shape {arr.shape}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("distance map dimensions must be positive")
        if not np.all(np.isfinite(arr)):
            raise ValueError("distance map values must be finite")
        object.__setattr__(self, "data", _as_locked(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class TwoChannelDistance:
    """Per-axis distance ratios (dx, dy), each clamped to [0, 1]."""

    dx: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        dx = np.asarray(self.dx, dtype=np.float64)
        dy = np.asarray(self.dy, dtype=np.float64)
        if dx.ndim != 2 or dx.shape != dy.shape:
            raise ValueError("dx/dy must be equal-shape HxW arrays")
        for arr in (dx, dy):
            if not np.all(np.isfinite(arr)):
                raise ValueError("two-channel distances must be finite")
            if arr.min() < 0.0 or arr.max() > 1.0:
                raise ValueError("two-channel distances must lie in [0, 1]")
        object.__setattr__(self, "dx", _as_locked(dx))
        object.__setattr__(self, "dy", _as_locked(dy))

    @property
    def height(self) -> int:
        return self.dx.shape[0]

    @property
    def width(self) -> int:
        return self.dx.shape[1]


def distance_map_from_flows(v0t: FlowField, v01: FlowField, eps: float = DEFAULT_EPS,
                            clamp: bool = True) -> DistanceMap:
    """Project partial motion onto full motion to get per-pixel ratios.

    Where the end-to-end flow magnitude is below `eps` the pixel is
    treated as stationary and assigned 0.5.  With `clamp` the result is
    clipped to [0, 1] (the default; disable for diagnostics of
    overshooting motion).
    """
    require_same_size(v0t, v01)
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    dot = v0t.u * v01.u + v0t.v * v01.v
    norm_sq = v01.u * v01.u + v01.v * v01.v
    d = dot / np.maximum(norm_sq, eps * eps)
    stationary = norm_sq < eps * eps
    d = np.where(stationary, STATIONARY_FALLBACK, d)
    if clamp:
        d = np.clip(d, 0.0, 1.0)
    return DistanceMap(d)


def uniform_map(t: float, height: int, width: int) -> DistanceMap:
    """Constant-speed indexing map: every pixel equals t."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return DistanceMap(np.full((height, width), float(t)))


def two_channel_distance(v0t: FlowField, v01: FlowField, eps: float = DEFAULT_EPS) -> TwoChannelDistance:
    """Per-axis distance ratios dx = u_0t/u_01 and dy = v_0t/v_01.

    An axis whose end-to-end component is below `eps` falls back to the
    scalar projection ratio for that pixel; both channels are clamped
    to [0, 1].
    """
    require_same_size(v0t, v01)
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    scalar = distance_map_from_flows(v0t, v01, eps=eps, clamp=True).data

    def axis_ratio(num, den):
        degenerate = np.abs(den) < eps
        ratio = num / np.where(degenerate, 1.0, den)
        ratio = np.where(degenerate, scalar, ratio)
        return np.clip(ratio, 0.0, 1.0)

    return TwoChannelDistance(axis_ratio(v0t.u, v01.u), axis_ratio(v0t.v, v01.v))


# ---------------------------------------------------------------------------
# Grayscale PFM I/O (scale -1.0, little-endian, bottom-up rows)
# ---------------------------------------------------------------------------

def write_pfm(dmap: DistanceMap, path) -> None:
    """Write a distance map as grayscale PFM (header "Pf", scale -1.0)."""
    path = Path(path)
    header = f"Pf\n{dmap.width} {dmap.height}\n-1.0\n".encode("ascii")
    # PFM scanlines run bottom-to-top.
    payload = dmap.data[::-1].astype("<f4").tobytes()
    path.write_bytes(header + payload)


def read_pfm(path) -> DistanceMap:
    """Read a grayscale little-endian PFM file as a DistanceMap."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such PFM file: {path}")
    raw = path.read_bytes()
    parts = raw.split(b"\n", 3)
    if len(parts) < 4:
        raise FileFormatError(f"truncated PFM header in {path}")
    magic, dims, scale_s, payload = parts
    if magic == b"PF":
        raise FileFormatError(f"color PFM unsupported (grayscale 'Pf' only) in {path}")
    if magic != b"Pf":
        raise FileFormatError(f"bad PFM magic {magic!r} in {path}")
    try:
        width, height = (int(x) for x in dims.split())
        scale = float(scale_s)
    except ValueError as exc:
        raise FileFormatError(f"bad PFM header in {path}") from exc
    if width <= 0 or height <= 0:
        raise FileFormatError(f"nonpositive PFM dimensions in {path}")
    if scale >= 0:
        raise FileFormatError(f"big-endian PFM (scale {scale}) unsupported in {path}")
    need = width * height * 4
    if len(payload) < need:
        raise FileFormatError(f"truncated PFM payload in {path}")
    arr = np.frombuffer(payload[:need], dtype="<f4").reshape(height, width)
    return DistanceMap(arr[::-1].astype(np.float64))
