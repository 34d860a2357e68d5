"""Command-line surface: distmap, interp, retime, lab, metrics, serve.

Exit codes are a stable contract for scripts: 0 success, 2 usage
errors, 3 I/O failures, 4 data/dimension mismatches.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import indexing, lab, metrics, retime
from .blockflow import block_matching_flow
from .imaging import (
    DimensionMismatchError,
    FileFormatError,
    Frame,
    load_frame,
    read_flo,
    save_frame,
    write_flo,
)
from .indexing import DistanceMap, read_pfm, uniform_map, write_pfm
from .interpolator import InterpConfig, interpolate
from .iterative import iterative_interpolate_map, make_schedule
from .trajectory import MultiFrameSet, dense_distance_map, fit_trajectory

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4

# Viridis-like ramp anchors for distance-map visualization PNGs.
_RAMP = np.array([
    (0.267, 0.005, 0.329),
    (0.283, 0.141, 0.458),
    (0.254, 0.265, 0.530),
    (0.207, 0.372, 0.553),
    (0.164, 0.471, 0.558),
    (0.128, 0.567, 0.551),
    (0.135, 0.659, 0.518),
    (0.267, 0.749, 0.441),
    (0.478, 0.821, 0.318),
    (0.741, 0.873, 0.150),
    (0.993, 0.906, 0.144),
])


def ramp_visualize(dmap: DistanceMap) -> Frame:
    """Render a distance map as a color-ramp PNG-ready frame."""
    d = np.clip(dmap.data, 0.0, 1.0)
    pos = d * (len(_RAMP) - 1)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, len(_RAMP) - 1)
    frac = (pos - lo)[:, :, None]
    rgb = _RAMP[lo] * (1.0 - frac) + _RAMP[hi] * frac
    return Frame(np.clip(rgb, 0.0, 1.0))


def _interp_config(args) -> InterpConfig:
    return InterpConfig(mask_mode=args.mask_mode)


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("DISTIX_THREADS")
    return max(1, int(env)) if env else 1


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_distmap(args) -> int:
    if args.multi:
        if len(args.frame or []) != 4 or len(args.flow or []) != 3:
            print("distmap --multi needs four --frame and three --flow inputs", file=sys.stderr)
            return EXIT_USAGE
        frames = [load_frame(p) for p in args.frame]
        flows = [read_flo(p) for p in args.flow]
        mfset = MultiFrameSet(i_minus1=frames[0], i0=frames[1], i1=frames[2], i2=frames[3],
                              v0_minus1=flows[0], v01=flows[1], v02=flows[2])
        traj = fit_trajectory(mfset)
        dmap = dense_distance_map(traj, args.t, mfset.v01, eps=args.eps)
    else:
        if not args.v0t or not args.v01:
            print("distmap needs --v0t and --v01 flow files (or --multi)", file=sys.stderr)
            return EXIT_USAGE
        v0t = read_flo(args.v0t)
        v01 = read_flo(args.v01)
        dmap = indexing.distance_map_from_flows(v0t, v01, eps=args.eps, clamp=not args.no_clamp)
    write_pfm(dmap, args.output)
    if args.png:
        save_frame(ramp_visualize(dmap), args.png)
    return EXIT_OK


def _load_pair(args):
    i0 = load_frame(args.i0)
    i1 = load_frame(args.i1)
    if args.v01 and args.v10:
        v01 = read_flo(args.v01)
        v10 = read_flo(args.v10)
    elif args.block_flow:
        v01 = block_matching_flow(i0, i1)
        v10 = block_matching_flow(i1, i0)
    else:
        print("need --v01 and --v10 flow files (or --block-flow for a demo estimate)",
              file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    return i0, i1, v01, v10


def cmd_interp(args) -> int:
    if args.debug_schedule:
        if args.t is None:
            print("--debug-schedule needs --t", file=sys.stderr)
            return EXIT_USAGE
        schedules = [list(step) for step in make_schedule(args.t[0], args.iters).steps]
        print(json.dumps(schedules))
        return EXIT_OK
    if (args.t is None) == (args.map is None):
        print("give exactly one of --t or --map", file=sys.stderr)
        return EXIT_USAGE
    i0, i1, v01, v10 = _load_pair(args)
    config = _interp_config(args)

    if args.map:
        d = read_pfm(args.map)
        out = (interpolate(i0, i1, v01, v10, d, config) if args.iters == 1
               else iterative_interpolate_map(i0, i1, v01, v10, d, args.iters, config))
        save_frame(out, args.output or "out.png")
        return EXIT_OK

    def render(t):
        d = uniform_map(t, i0.height, i0.width)
        if args.iters == 1:
            return interpolate(i0, i1, v01, v10, d, config)
        return iterative_interpolate_map(i0, i1, v01, v10, d, args.iters, config)

    ts = args.t
    if len(ts) == 1 and args.output:
        save_frame(render(ts[0]), args.output)
        return EXIT_OK
    out_dir = Path(args.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = _threads(args)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            frames = list(pool.map(render, ts))
    else:
        frames = [render(t) for t in ts]
    for k, frame in enumerate(frames):
        save_frame(frame, out_dir / f"frame_{k:04d}.png")
    return EXIT_OK


def cmd_retime(args) -> int:
    i0, i1, v01, v10 = _load_pair(args)
    script = retime.load_script(args.script)
    job = retime.RenderJob(i0=i0, i1=i1, v01=v01, v10=v10, script=script,
                           timesteps=tuple(args.t), iters=args.iters,
                           config=_interp_config(args))
    out_dir = Path(args.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = _threads(args)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            frames = list(pool.map(lambda t: retime.render_frame(job, t), job.timesteps))
    else:
        frames = retime.render_retimed(job)
    for k, frame in enumerate(frames):
        save_frame(frame, out_dir / f"frame_{k:04d}.png")
    return EXIT_OK


def _default_lab_scene(seed: int) -> lab.SceneSpec:
    # Small canvas and short motion keep conflicts inside the patch
    # regressor's receptive field and training times in seconds.
    profile = lab.VelocityProfile(kind="constant")
    shape = lab.ShapeSpec(shape="square", size=6.0, start=(7.0, 7.5), end=(9.0, 7.5),
                          profile=profile, color=1.0)
    return lab.SceneSpec(canvas=(16, 16), shapes=(shape,), background=0.0, seed=seed)


def cmd_lab(args) -> int:
    out_dir = Path(args.out_dir)
    if args.lab_cmd == "gen":
        out_dir.mkdir(parents=True, exist_ok=True)
        scene = _default_lab_scene(args.seed)
        timesteps = [float(t) for t in args.timesteps]
        dataset = lab.make_dataset(scene, args.profiles, timesteps, seed=args.seed)
        meta = {"seed": args.seed, "profiles": args.profiles, "timesteps": timesteps,
                "samples": len(dataset)}
        for k, sample in enumerate(dataset):
            save_frame(sample.i0, out_dir / f"sample_{k:03d}_i0.png")
            save_frame(sample.i1, out_dir / f"sample_{k:03d}_i1.png")
            save_frame(sample.it, out_dir / f"sample_{k:03d}_it.png")
            write_pfm(sample.d_true, out_dir / f"sample_{k:03d}_d.pfm")
            write_flo(sample.v01, out_dir / f"sample_{k:03d}_v01.flo")
            write_flo(sample.v0t, out_dir / f"sample_{k:03d}_v0t.flo")
        (out_dir / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2))
        print(json.dumps(meta, sort_keys=True))
        return EXIT_OK

    scene = _default_lab_scene(args.seed)
    timesteps = [float(t) for t in args.timesteps]
    dataset = lab.make_dataset(scene, args.profiles, timesteps, seed=args.seed)
    if args.lab_cmd == "train":
        model = lab.TinyModel(in_dim=lab.feature_dim(dataset), seed=args.seed)
        losses = lab.train(model, dataset, args.indexing, epochs=args.epochs, lr=args.lr)
        out_dir.mkdir(parents=True, exist_ok=True)
        np.savez(out_dir / f"model_{args.indexing}.npz", w1=model.w1, b1=model.b1,
                 w2=model.w2, b2=model.b2)
        with open(out_dir / f"loss_{args.indexing}.csv", "w") as fh:
            fh.write("epoch,loss\n")
            for i, loss in enumerate(losses):
                fh.write(f"{i},{loss!r}\n")
        print(json.dumps({"indexing": args.indexing, "final_loss": float(losses[-1])}))
        return EXIT_OK

    # report: train both indexings, then verify mode averaging
    model_t = lab.TinyModel(in_dim=lab.feature_dim(dataset), seed=args.seed)
    model_d = lab.TinyModel(in_dim=lab.feature_dim(dataset), seed=args.seed)
    losses_t = lab.train(model_t, dataset, "time", epochs=args.epochs, lr=args.lr)
    losses_d = lab.train(model_d, dataset, "distance", epochs=args.epochs, lr=args.lr)
    report = lab.mode_average_report(dataset, model_t, model_d)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.write_csv(out_dir / "mode_average.csv")
    summary = {"conflicts": report.n_conflicts,
               "max_time_err": report.max_time_err,
               "max_dist_err": report.max_dist_err,
               "final_loss_time": float(losses_t[-1]),
               "final_loss_distance": float(losses_d[-1])}
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_metrics(args) -> int:
    a_path, b_path = Path(args.a), Path(args.b)
    report = {"lpips": "n/a (out of scope)", "niqe": "n/a (out of scope)"}
    if a_path.suffix.lower() == ".pfm":
        da = read_pfm(a_path)
        db = read_pfm(b_path)
        report["map_loss"] = metrics.map_loss(da, db)
    else:
        fa = load_frame(a_path)
        fb = load_frame(b_path)
        report["psnr"] = metrics.psnr(fa, fb)
        report["ssim"] = metrics.ssim(fa, fb)
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(session_cap=args.session_cap, demo_flow=args.demo_flow)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distix",
        description="Distance-indexed frame interpolation: maps, rendering, re-timing.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distmap", help="compute a distance map from flows")
    p.add_argument("--v0t", help="partial flow .flo (start to target time)")
    p.add_argument("--v01", help="full flow .flo (start to end)")
    p.add_argument("--multi", action="store_true",
                   help="fit a B-spline trajectory from four frames + three flows")
    p.add_argument("--frame", action="append",
                   help="frame for --multi, four times: I-1 I0 I1 I2")
    p.add_argument("--flow", action="append",
                   help="flow for --multi, three times: V0->-1 V0->1 V0->2")
    p.add_argument("--t", type=float, default=0.5, help="target time for --multi (default 0.5)")
    p.add_argument("--eps", type=float, default=indexing.DEFAULT_EPS,
                   help="stationary-pixel guard in pixels (default 1e-3)")
    p.add_argument("--no-clamp", action="store_true", help="keep ratios outside [0, 1]")
    p.add_argument("-o", "--output", required=True, help="output .pfm path")
    p.add_argument("--png", help="also write a color-ramp visualization PNG")
    p.set_defaults(func=cmd_distmap)

    p = sub.add_parser("interp", help="interpolate between two frames")
    p.add_argument("--i0", required=True)
    p.add_argument("--i1", required=True)
    p.add_argument("--v01")
    p.add_argument("--v10")
    p.add_argument("--block-flow", action="store_true",
                   help="demo-only block-matching flow when .flo inputs are missing")
    p.add_argument("--t", type=float, action="append", help="target time(s) in [0, 1]")
    p.add_argument("--map", help="per-pixel distance map .pfm instead of --t")
    p.add_argument("--iters", type=int, default=1, help="iterative estimation steps (default 1)")
    p.add_argument("--mask-mode", default="splat_weight",
                   choices=["splat_weight", "photometric", "fixed"])
    p.add_argument("--threads", type=int, help="worker threads (or env DISTIX_THREADS)")
    p.add_argument("--debug-schedule", action="store_true",
                   help="print the iteration schedule for --t and exit")
    p.add_argument("-o", "--output", help="output PNG for a single timestep")
    p.add_argument("--out-dir", help="output directory for multiple timesteps")
    p.set_defaults(func=cmd_interp)

    p = sub.add_parser("retime", help="render a re-timed sequence from a script")
    p.add_argument("--i0", required=True)
    p.add_argument("--i1", required=True)
    p.add_argument("--v01")
    p.add_argument("--v10")
    p.add_argument("--block-flow", action="store_true")
    p.add_argument("--script", required=True, help="retime script JSON")
    p.add_argument("--t", type=float, action="append", required=True)
    p.add_argument("--iters", type=int, default=1)
    p.add_argument("--mask-mode", default="splat_weight",
                   choices=["splat_weight", "photometric", "fixed"])
    p.add_argument("--threads", type=int)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_retime)

    p = sub.add_parser("lab", help="velocity-ambiguity experiments")
    lab_sub = p.add_subparsers(dest="lab_cmd", required=True)
    for name in ("gen", "train", "report"):
        q = lab_sub.add_parser(name)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--profiles", type=int, default=2)
        q.add_argument("--timesteps", type=float, nargs="+", default=[0.25, 0.5, 0.75])
        q.add_argument("--out-dir", "-o", default="lab_out")
        if name in ("train", "report"):
            q.add_argument("--epochs", type=int, default=2000)
            q.add_argument("--lr", type=float, default=0.05)
        if name == "train":
            q.add_argument("--indexing", choices=["time", "distance"], required=True)
    p.set_defaults(func=cmd_lab)

    p = sub.add_parser("metrics", help="PSNR/SSIM for images, map loss for .pfm maps")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("serve", help="run the re-timing HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--session-cap", type=int, default=64)
    p.add_argument("--demo-flow", action="store_true",
                   help="estimate flows server-side with the demo block matcher")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DimensionMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
