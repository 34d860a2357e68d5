"""Core raster types, bilinear sampling, warping, and image/flow file I/O.

Every other module consumes these primitives.  All types are immutable
after construction and all operations are pure functions, so instances
can be shared freely across threads.

Conventions
-----------
* Pixel centers sit at integer coordinates; (x, y) = (column, row).
* Flow components (u, v) are (dx, dy) displacements in pixel units,
  x growing rightward and y growing downward (Middlebury convention).
* Out-of-bounds samples replicate the border pixel (clamp, not zero
  fill), which avoids dark halos on warped edges.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

# Splat weights below this threshold mark a pixel as a hole.
SPLAT_EPS = 1e-4

FLO_MAGIC = 202021.25  # encodes to the bytes "PIEH" in little-endian float32


class DimensionMismatchError(ValueError):
    """Raised when paired rasters do not share the same height/width."""


class FileFormatError(ValueError):
    """Raised for unreadable, truncated, or unsupported file contents."""


def _as_locked(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Frame:
    """H x W x C image with channel values in [0, 1]; C is 1 or 3."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ValueError(f"frame data must be HxWxC, got shape {arr.shape}")
        h, w, c = arr.shape
        if h == 0 or w == 0:
            raise ValueError("frame dimensions must be positive")
        if c not in (1, 3):
            raise ValueError(f"frame must have 1 or 3 channels, got {c}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("frame values must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("frame values must lie in [0, 1]")
        object.__setattr__(self, "data", _as_locked(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class FlowField:
    """H x W x 2 displacement field (u, v) in pixel units."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise ValueError(f"flow data must be HxWx2, got shape {arr.shape}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("flow dimensions must be positive")
        if not np.all(np.isfinite(arr)):
            raise ValueError("flow components must be finite")
        object.__setattr__(self, "data", _as_locked(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def u(self) -> np.ndarray:
        return self.data[:, :, 0]

    @property
    def v(self) -> np.ndarray:
        return self.data[:, :, 1]


@dataclass(frozen=True)
class MaskImage:
    """H x W per-pixel weight in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"mask data must be HxW, got shape {arr.shape}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("mask dimensions must be positive")
        if not np.all(np.isfinite(arr)):
            raise ValueError("mask values must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("mask values must lie in [0, 1]")
        object.__setattr__(self, "data", _as_locked(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def require_same_size(*rasters) -> None:
    """Raise DimensionMismatchError unless all rasters share height/width."""
    sizes = {(r.height, r.width) for r in rasters}
    if len(sizes) > 1:
        raise DimensionMismatchError(f"raster sizes differ: {sorted(sizes)}")


# ---------------------------------------------------------------------------
# Image file I/O (8-bit PNG, binary PPM/PGM)
# ---------------------------------------------------------------------------

def _quantize(arr: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)


def encode_png(frame: Frame) -> bytes:
    """Encode a frame as deterministic 8-bit PNG bytes."""
    import io

    arr = _quantize(frame.data)
    if frame.channels == 1:
        img = Image.fromarray(arr[:, :, 0], mode="L")
    else:
        img = Image.fromarray(arr, mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> Frame:
    """Decode PNG bytes into a Frame, mapping [0, 255] linearly to [0, 1]."""
    import io

    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise FileFormatError(f"unreadable image: {exc}") from exc
    return _frame_from_pil(img)


def _frame_from_pil(img: Image.Image) -> Frame:
    if img.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
        raise FileFormatError(f"unsupported bit depth (mode {img.mode}); only 8-bit supported")
    if img.mode not in ("L", "RGB"):
        img = img.convert("RGB" if ("A" in img.mode or img.mode == "P") else "L")
    arr = np.asarray(img, dtype=np.float64) / 255.0
    return Frame(arr)


def load_frame(path) -> Frame:
    """Load an 8-bit PNG or binary PPM/PGM file as a Frame."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such image file: {path}")
    raw = path.read_bytes()
    if raw[:2] in (b"P5", b"P6"):
        return _read_pnm(raw, path)
    try:
        import io

        img = Image.open(io.BytesIO(raw))
        img.load()
    except Exception as exc:
        raise FileFormatError(f"unreadable image file {path}: {exc}") from exc
    return _frame_from_pil(img)


def save_frame(frame: Frame, path) -> None:
    """Save a frame as 8-bit PNG or binary PPM/PGM, chosen by extension.

    Values map linearly [0, 1] -> [0, 255] with rounding, so a
    save/load round trip changes each channel by at most 1/510.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".ppm", ".pgm", ".pnm"):
        path.write_bytes(_encode_pnm(frame))
    else:
        path.write_bytes(encode_png(frame))


def _encode_pnm(frame: Frame) -> bytes:
    arr = _quantize(frame.data)
    if frame.channels == 1:
        header = f"P5\n{frame.width} {frame.height}\n255\n"
        return header.encode("ascii") + arr[:, :, 0].tobytes()
    header = f"P6\n{frame.width} {frame.height}\n255\n"
    return header.encode("ascii") + arr.tobytes()


def _read_pnm(raw: bytes, path) -> Frame:
    # Minimal P5/P6 parser: whitespace-separated header tokens, '#' comments.
    magic = raw[:2]
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FileFormatError(f"truncated PNM header in {path}")
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise FileFormatError(f"bad PNM header in {path}") from exc
    if width <= 0 or height <= 0:
        raise FileFormatError(f"nonpositive PNM dimensions in {path}")
    if maxval != 255:
        raise FileFormatError(f"unsupported bit depth (maxval {maxval}) in {path}")
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    payload = raw[pos : pos + need]
    if len(payload) < need:
        raise FileFormatError(f"truncated PNM payload in {path}")
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)
    return Frame(arr.astype(np.float64) / 255.0)


# ---------------------------------------------------------------------------
# Middlebury .flo I/O
# ---------------------------------------------------------------------------

def read_flo(path) -> FlowField:
    """Read a Middlebury .flo optical flow file.

    Layout: float32 magic 202021.25, int32 width, int32 height, then
    row-major interleaved (u, v) float32 pairs, all little-endian.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such flow file: {path}")
    raw = path.read_bytes()
    if len(raw) < 12:
        raise FileFormatError(f"truncated .flo header in {path}")
    magic = struct.unpack("<f", raw[:4])[0]
    if magic != np.float32(FLO_MAGIC):
        raise FileFormatError(f"bad .flo magic {magic!r} in {path}")
    width, height = struct.unpack("<ii", raw[4:12])
    if width <= 0 or height <= 0:
        raise FileFormatError(f"nonpositive .flo dimensions {width}x{height} in {path}")
    need = width * height * 2 * 4
    payload = raw[12 : 12 + need]
    if len(payload) < need:
        raise FileFormatError(f"truncated .flo payload in {path}")
    arr = np.frombuffer(payload, dtype="<f4").reshape(height, width, 2)
    return FlowField(arr.astype(np.float64))


def write_flo(flow: FlowField, path) -> None:
    """Write a FlowField as a Middlebury .flo file (float32, little-endian)."""
    path = Path(path)
    header = struct.pack("<fii", FLO_MAGIC, flow.width, flow.height)
    payload = flow.data.astype("<f4").tobytes()
    path.write_bytes(header + payload)


# ---------------------------------------------------------------------------
# Sampling and warping
# ---------------------------------------------------------------------------

def bilinear_sample(frame: Frame, x: float, y: float) -> np.ndarray:
    """Sample a frame at a subpixel location with border replication.

    Returns the per-channel color vector.  Total function: coordinates
    are clamped to the image rectangle, so any (x, y) is valid.
    """
    h, w = frame.height, frame.width
    x = min(max(float(x), 0.0), w - 1.0)
    y = min(max(float(y), 0.0), h - 1.0)
    x0 = int(np.floor(x))
    y0 = int(np.floor(y))
    x1 = min(x0 + 1, w - 1)
    y1 = min(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    d = frame.data
    top = (1.0 - fx) * d[y0, x0] + fx * d[y0, x1]
    bot = (1.0 - fx) * d[y1, x0] + fx * d[y1, x1]
    return (1.0 - fy) * top + fy * bot


def _sample_grid(data: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized bilinear gather at (xs, ys) with border clamp."""
    h, w = data.shape[:2]
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[..., None]
    fy = (ys - y0)[..., None]
    top = (1.0 - fx) * data[y0, x0] + fx * data[y0, x1]
    bot = (1.0 - fx) * data[y1, x0] + fx * data[y1, x1]
    return (1.0 - fy) * top + fy * bot


def backward_warp(frame: Frame, flow: FlowField) -> Frame:
    """Pull-warp: output(p) = bilinear_sample(frame, p + flow(p))."""
    require_same_size(frame, flow)
    ys, xs = np.mgrid[0 : frame.height, 0 : frame.width].astype(np.float64)
    out = _sample_grid(frame.data, xs + flow.u, ys + flow.v)
    return Frame(out)


def _splat_values(values: np.ndarray, flow_data: np.ndarray):
    """Forward-splat per-pixel values along a flow field.

    Each source pixel distributes its value to the four integer
    neighbors of its landing point with bilinear weights; out-of-bounds
    corners are dropped.  Returns (accumulated values, accumulated
    weights) without normalization.
    """
    h, w = values.shape[:2]
    c = values.shape[2]
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    tx = (xs + flow_data[:, :, 0]).ravel()
    ty = (ys + flow_data[:, :, 1]).ravel()
    vals = values.reshape(-1, c)

    x0 = np.floor(tx).astype(np.int64)
    y0 = np.floor(ty).astype(np.int64)
    fx = tx - x0
    fy = ty - y0

    acc_v = np.zeros((h * w, c), dtype=np.float64)
    acc_w = np.zeros(h * w, dtype=np.float64)
    corners = (
        (x0, y0, (1.0 - fx) * (1.0 - fy)),
        (x0 + 1, y0, fx * (1.0 - fy)),
        (x0, y0 + 1, (1.0 - fx) * fy),
        (x0 + 1, y0 + 1, fx * fy),
    )
    for cx, cy, cw in corners:
        ok = (cx >= 0) & (cx < w) & (cy >= 0) & (cy < h)
        if not ok.any():
            continue
        idx = cy[ok] * w + cx[ok]
        np.add.at(acc_w, idx, cw[ok])
        np.add.at(acc_v, idx, vals[ok] * cw[ok][:, None])
    return acc_v.reshape(h, w, c), acc_w.reshape(h, w)


def forward_warp_splat(frame: Frame, flow: FlowField):
    """Push-warp with linear splatting.

    Each source pixel splats its color to the four integer neighbors of
    p + flow(p) with bilinear weights.  Output pixels divide the
    accumulated color by the accumulated weight; pixels whose weight
    stays below SPLAT_EPS are declared holes and set to 0.  Returns
    (warped frame, weight map).  The weight map is clipped to [0, 1]
    for mask semantics (weights above 1 mean several sources folded
    onto one pixel); raw accounting is available via splat_weight_sum.
    """
    require_same_size(frame, flow)
    acc_v, acc_w = _splat_values(frame.data, flow.data)
    valid = acc_w > SPLAT_EPS
    out = np.zeros_like(acc_v)
    out[valid] = acc_v[valid] / acc_w[valid][:, None]
    out = np.clip(out, 0.0, 1.0)
    return Frame(out), MaskImage(np.clip(acc_w, 0.0, 1.0))


def splat_weight_sum(frame: Frame, flow: FlowField) -> float:
    """Total accumulated splat weight (for conservation accounting)."""
    _, acc_w = _splat_values(frame.data, flow.data)
    return float(acc_w.sum())


# How much smaller a contribution's importance may be than the largest
# importance landing on the same cell before it is treated as occluded.
OCCLUSION_TAU = 0.5


def _occlusion_splat_values(values: np.ndarray, flow_data: np.ndarray,
                            importance: np.ndarray, tau: float = OCCLUSION_TAU,
                            composite_losers: bool = True):
    """Forward splat where high-importance content occludes low.

    Plain linear splatting averages everything that lands on a cell, so
    a moving object blends 50/50 with the static background it covers.
    Here each cell first records the maximum importance among its
    incoming contributions (scatter-max); contributions within `tau` of
    that maximum accumulate at full bilinear weight, while occluded
    contributions may only fill the lobe capacity the winners left
    unused (front-to-back compositing with two depth classes).  A cell
    half-covered by arriving content thus blends correctly with the
    background revealed behind it, but fully covered cells are owned
    outright.

    With composite_losers=False occluded contributions are dropped
    entirely; use this when the splatted values are labels (flow
    vectors) whose mixtures are meaningless.
    """
    h, w = values.shape[:2]
    c = values.shape[2]
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    tx = (xs + flow_data[:, :, 0]).ravel()
    ty = (ys + flow_data[:, :, 1]).ravel()
    vals = values.reshape(-1, c)
    imp = importance.ravel()

    x0 = np.floor(tx).astype(np.int64)
    y0 = np.floor(ty).astype(np.int64)
    fx = tx - x0
    fy = ty - y0
    corners = (
        (x0, y0, (1.0 - fx) * (1.0 - fy)),
        (x0 + 1, y0, fx * (1.0 - fy)),
        (x0, y0 + 1, (1.0 - fx) * fy),
        (x0 + 1, y0 + 1, fx * fy),
    )

    cellmax = np.full(h * w, -np.inf)
    masks = []
    for cx, cy, cw in corners:
        ok = (cx >= 0) & (cx < w) & (cy >= 0) & (cy < h) & (cw > 0)
        masks.append(ok)
        if ok.any():
            np.maximum.at(cellmax, cy[ok] * w + cx[ok], imp[ok])

    win_v = np.zeros((h * w, c), dtype=np.float64)
    win_w = np.zeros(h * w, dtype=np.float64)
    lose_v = np.zeros((h * w, c), dtype=np.float64)
    lose_w = np.zeros(h * w, dtype=np.float64)
    for (cx, cy, cw), ok in zip(corners, masks):
        if not ok.any():
            continue
        idx = cy[ok] * w + cx[ok]
        winner = imp[ok] >= cellmax[idx] - tau
        for sel, acc_v, acc_w in ((winner, win_v, win_w), (~winner, lose_v, lose_w)):
            if sel.any():
                np.add.at(acc_w, idx[sel], cw[ok][sel])
                np.add.at(acc_v, idx[sel], vals[ok][sel] * cw[ok][sel][:, None])

    if not composite_losers:
        return win_v.reshape(h, w, c), win_w.reshape(h, w)
    # Occluded content fills only the capacity the winners left free.
    scale = np.zeros(h * w)
    has_losers = lose_w > 0
    scale[has_losers] = np.clip((1.0 - win_w[has_losers]) / lose_w[has_losers], 0.0, 1.0)
    acc_v = win_v + scale[:, None] * lose_v
    acc_w = win_w + scale * lose_w
    return acc_v.reshape(h, w, c), acc_w.reshape(h, w)


def occlusion_splat(frame: Frame, flow: FlowField, importance: np.ndarray | None = None):
    """Push-warp where faster-moving content covers what it lands on.

    Importance defaults to the flow magnitude, so a moving object
    occludes the static background at the cells it reaches instead of
    averaging with it.  Ties (within OCCLUSION_TAU pixels) still blend,
    which keeps zero-flow warps exactly identity.  Returns (warped
    frame, weight map clipped to [0, 1]).
    """
    require_same_size(frame, flow)
    if importance is None:
        importance = np.hypot(flow.u, flow.v)
    acc_v, acc_w = _occlusion_splat_values(frame.data, flow.data, importance)
    valid = acc_w > SPLAT_EPS
    out = np.zeros_like(acc_v)
    out[valid] = acc_v[valid] / acc_w[valid][:, None]
    out = np.clip(out, 0.0, 1.0)
    return Frame(out), MaskImage(np.clip(acc_w, 0.0, 1.0))


def advect_flow(flow: FlowField, carrier: FlowField):
    """Re-anchor a flow field onto the geometry its carrier points at.

    Forward-splats the (u, v) values of `flow` along `carrier`, with
    carrier magnitude as occlusion importance and occluded
    contributions dropped outright: flow vectors are labels, so a
    partial mixture of two motions would be a motion nobody has.
    Constant-flow regions advect exactly (bilinear mixing of equal
    values is a no-op).  Holes (no landing) get zero flow.  Returns
    (advected flow, weight map).
    """
    require_same_size(flow, carrier)
    importance = np.hypot(carrier.u, carrier.v)
    acc_v, acc_w = _occlusion_splat_values(flow.data, carrier.data, importance,
                                           composite_losers=False)
    valid = acc_w > SPLAT_EPS
    out = np.zeros_like(acc_v)
    out[valid] = acc_v[valid] / acc_w[valid][:, None]
    return FlowField(out), MaskImage(np.clip(acc_w, 0.0, 1.0))
