"""HTTP session API backing the interactive re-timing editor.

Sessions hold uploaded frames, flows, and masks in memory, accept
script edits, and render previews on demand.  The engine is pure, so
identical session state and request parameters produce byte-identical
PNG responses.  Sessions expire after 30 minutes idle; the store is
capped (503 beyond capacity).
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .blockflow import block_matching_flow
from .imaging import FLO_MAGIC, FileFormatError, Frame, FlowField, MaskImage, decode_png, encode_png
from .indexing import DistanceMap
from .interpolator import InterpConfig, interpolate
from .iterative import iterative_interpolate_map
from .retime import (
    CURVE_KINDS,
    OVERLAP_RULES,
    RetimeLayer,
    RetimeScript,
    compose_maps,
    curve_from_dict,
    identity_curve,
)

DEFAULT_SESSION_CAP = 64
DEFAULT_TTL_SECONDS = 30 * 60
MAX_CANVAS = 1024
PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

FRAME_NAMES = ("i0", "i1")
FLOW_NAMES = ("v01", "v10")


def validate_script_json(spec) -> list:
    """Validate a retime-script JSON object against the shared schema.

    Returns a list of error strings (empty when valid).  These rules
    are mirrored by the browser editor's client-side validation; keep
    the two in sync via the shared fixture suite.
    """
    errors = []
    if not isinstance(spec, dict):
        return ["script must be a JSON object"]

    def check_curve(obj, where):
        if not isinstance(obj, dict):
            errors.append(f"{where}: curve must be an object")
            return
        kind = obj.get("kind")
        if kind not in CURVE_KINDS:
            errors.append(f"{where}: unknown curve kind {kind!r}")
            return
        points = obj.get("points")
        if not isinstance(points, list) or any(
                not isinstance(p, (list, tuple)) or len(p) != 2 for p in points or []):
            errors.append(f"{where}: points must be a list of [t, d] pairs")
            return
        if len(points) < 2:
            errors.append(f"{where}: need at least two control points")
            return
        if kind == "linear" and len(points) != 2:
            errors.append(f"{where}: linear curve takes exactly two control points")
        if kind == "cubic_bezier" and len(points) != 4:
            errors.append(f"{where}: cubic_bezier curve takes exactly four control points")
        for i, (t, d) in enumerate(points):
            if not isinstance(t, (int, float)) or not isinstance(d, (int, float)):
                errors.append(f"{where}: point {i} is not numeric")
                return
            if not 0.0 <= d <= 1.0:
                errors.append(f"{where}: point {i} ({t}, {d}): d outside [0, 1]")
        ts = [p[0] for p in points]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            errors.append(f"{where}: t values must be strictly increasing, got {ts}")
        if ts and (ts[0] != 0.0 or ts[-1] != 1.0):
            errors.append(f"{where}: domain must cover [0, 1], got [{ts[0]}, {ts[-1]}]")

    layers = spec.get("layers", [])
    if not isinstance(layers, list):
        errors.append("layers must be a list")
        layers = []
    for i, layer in enumerate(layers):
        if not isinstance(layer, dict) or "mask" not in layer or "curve" not in layer:
            errors.append(f"layer {i}: needs mask and curve fields")
            continue
        check_curve(layer["curve"], f"layer {i} ({layer.get('mask')})")
    if "background" in spec:
        check_curve(spec["background"], "background")
    overlap = spec.get("overlap", "last_wins")
    if overlap not in OVERLAP_RULES:
        errors.append(f"overlap must be one of {list(OVERLAP_RULES)}, got {overlap!r}")
    return errors


@dataclass
class Session:
    id: str
    created: float
    last_used: float
    frames: dict = field(default_factory=dict)
    flows: dict = field(default_factory=dict)
    masks: dict = field(default_factory=dict)
    script: RetimeScript = field(default_factory=RetimeScript)
    script_json: dict = field(default_factory=dict)
    renders: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def canvas(self):
        for obj in (*self.frames.values(), *self.flows.values(), *self.masks.values()):
            return obj.height, obj.width
        return None


class SessionStore:
    def __init__(self, cap: int, ttl: float):
        self.cap = cap
        self.ttl = ttl
        self._sessions = {}
        self._lock = threading.Lock()

    def sweep(self, now: float) -> None:
        with self._lock:
            dead = [sid for sid, s in self._sessions.items() if now - s.last_used > self.ttl]
            for sid in dead:
                del self._sessions[sid]

    def create(self) -> Session | None:
        now = time.monotonic()
        self.sweep(now)
        with self._lock:
            if len(self._sessions) >= self.cap:
                return None
            sid = uuid.uuid4().hex
            session = Session(id=sid, created=now, last_used=now)
            self._sessions[sid] = session
            return session

    def get(self, sid: str) -> Session | None:
        with self._lock:
            session = self._sessions.get(sid)
            if session is not None:
                session.last_used = time.monotonic()
            return session


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": message})


def create_app(session_cap: int = DEFAULT_SESSION_CAP,
               ttl_seconds: float = DEFAULT_TTL_SECONDS,
               demo_flow: bool = False) -> FastAPI:
    app = FastAPI(title="distix re-timing service")
    store = SessionStore(cap=session_cap, ttl=ttl_seconds)
    app.state.store = store

    @app.post("/sessions", status_code=201)
    def create_session():
        session = store.create()
        if session is None:
            return _error(503, f"session capacity ({session_cap}) reached")
        return {"id": session.id}

    @app.put("/sessions/{sid}/assets/{name}")
    async def put_asset(sid: str, name: str, request: Request):
        session = store.get(sid)
        if session is None:
            return _error(404, f"unknown session {sid}")
        body = await request.body()
        if body.startswith(PNG_MAGIC):
            try:
                frame = decode_png(body)
            except FileFormatError as exc:
                return _error(415, str(exc))
            with session.lock:
                canvas = session.canvas()
                if canvas is not None and canvas != (frame.height, frame.width):
                    return _error(409, f"asset {name} is {frame.height}x{frame.width}, "
                                       f"session canvas is {canvas[0]}x{canvas[1]}")
                if name in FRAME_NAMES:
                    session.frames[name] = frame
                else:
                    session.masks[name] = MaskImage(frame.data.mean(axis=2))
            return {"stored": name}
        if len(body) >= 12:
            magic = np.frombuffer(body[:4], dtype="<f4")[0]
            if magic == np.float32(FLO_MAGIC):
                width, height = np.frombuffer(body[4:12], dtype="<i4")
                need = 12 + int(width) * int(height) * 8
                if width <= 0 or height <= 0 or len(body) < need:
                    return _error(415, f"truncated or malformed .flo body for {name}")
                arr = np.frombuffer(body[12:need], dtype="<f4").reshape(int(height), int(width), 2)
                flow = FlowField(arr.astype(np.float64))
                with session.lock:
                    canvas = session.canvas()
                    if canvas is not None and canvas != (flow.height, flow.width):
                        return _error(409, f"asset {name} is {flow.height}x{flow.width}, "
                                           f"session canvas is {canvas[0]}x{canvas[1]}")
                    session.flows[name] = flow
                return {"stored": name}
        return _error(415, f"unrecognized asset format for {name} (PNG or .flo)")

    @app.put("/sessions/{sid}/script")
    async def put_script(sid: str, request: Request):
        session = store.get(sid)
        if session is None:
            return _error(404, f"unknown session {sid}")
        try:
            spec = await request.json()
        except Exception:
            return _error(422, "script body is not valid JSON")
        errors = validate_script_json(spec)
        if errors:
            return _error(422, "; ".join(errors))
        missing = [layer["mask"] for layer in spec.get("layers", [])
                   if layer["mask"] not in session.masks]
        if missing:
            return _error(404, f"masks not uploaded: {missing}")

        layers = tuple(
            RetimeLayer(mask=session.masks[layer["mask"]],
                        curve=curve_from_dict(layer["curve"]),
                        name=layer["mask"])
            for layer in spec.get("layers", []))
        background = (curve_from_dict(spec["background"]) if "background" in spec
                      else identity_curve())
        script = RetimeScript(layers=layers, background=background,
                              overlap=spec.get("overlap", "last_wins"),
                              feather=bool(spec.get("feather", False)))
        with session.lock:
            session.script = script
            session.script_json = spec
        report = {"layers": [{"mask": layer.name, "kind": layer.curve.kind,
                              "t_domain": [layer.curve.points[0][0], layer.curve.points[-1][0]]}
                             for layer in layers],
                  "background_kind": background.kind}
        return report

    def _session_engine_inputs(session: Session):
        with session.lock:
            frames = dict(session.frames)
            flows = dict(session.flows)
            script = session.script
        missing = [n for n in FRAME_NAMES if n not in frames]
        if missing:
            return None, _error(409, f"incomplete session: missing frames {missing}")
        if any(n not in flows for n in FLOW_NAMES):
            if demo_flow:
                v01 = block_matching_flow(frames["i0"], frames["i1"])
                v10 = block_matching_flow(frames["i1"], frames["i0"])
                with session.lock:
                    session.flows.setdefault("v01", v01)
                    session.flows.setdefault("v10", v10)
                    flows = dict(session.flows)
            else:
                missing = [n for n in FLOW_NAMES if n not in flows]
                return None, _error(409, f"incomplete session: missing flows {missing}")
        i0 = frames["i0"]
        if max(i0.height, i0.width) > MAX_CANVAS:
            return None, _error(413, f"canvas {i0.height}x{i0.width} exceeds "
                                     f"{MAX_CANVAS}x{MAX_CANVAS}")
        return (i0, frames["i1"], flows["v01"], flows["v10"], script), None

    def _render_at(inputs, t: float, iters: int) -> bytes:
        i0, i1, v01, v10, script = inputs
        d = compose_maps(script, t, i0.height, i0.width)
        if iters == 1:
            frame = interpolate(i0, i1, v01, v10, d)
        else:
            frame = iterative_interpolate_map(i0, i1, v01, v10, d, iters)
        return encode_png(frame)

    @app.get("/sessions/{sid}/preview")
    def preview(sid: str, t: float, iters: int = 1):
        session = store.get(sid)
        if session is None:
            return _error(404, f"unknown session {sid}")
        if not 0.0 <= t <= 1.0:
            return _error(400, f"t must lie in [0, 1], got {t}")
        if iters < 1:
            return _error(400, f"iters must be >= 1, got {iters}")
        inputs, err = _session_engine_inputs(session)
        if err is not None:
            return err
        return Response(content=_render_at(inputs, t, iters), media_type="image/png")

    @app.post("/sessions/{sid}/render")
    async def render(sid: str, request: Request):
        session = store.get(sid)
        if session is None:
            return _error(404, f"unknown session {sid}")
        try:
            body = await request.json()
        except Exception:
            return _error(400, "render body is not valid JSON")
        timesteps = body.get("timesteps")
        iters = int(body.get("iters", 1))
        if not isinstance(timesteps, list) or not timesteps:
            return _error(400, "timesteps must be a non-empty list")
        if any(not isinstance(t, (int, float)) or not 0.0 <= t <= 1.0 for t in timesteps):
            return _error(400, "timesteps must lie in [0, 1]")
        if iters < 1:
            return _error(400, f"iters must be >= 1, got {iters}")
        inputs, err = _session_engine_inputs(session)
        if err is not None:
            return err
        pngs = [_render_at(inputs, float(t), iters) for t in timesteps]
        with session.lock:
            start = len(session.renders)
            session.renders.extend(pngs)
        urls = [f"/sessions/{sid}/renders/{start + k}.png" for k in range(len(pngs))]
        return {"frames": urls}

    @app.get("/sessions/{sid}/renders/{index}.png")
    def get_render(sid: str, index: int):
        session = store.get(sid)
        if session is None:
            return _error(404, f"unknown session {sid}")
        with session.lock:
            if not 0 <= index < len(session.renders):
                return _error(404, f"no render {index} in session")
            data = session.renders[index]
        return Response(content=data, media_type="image/png")

    return app
