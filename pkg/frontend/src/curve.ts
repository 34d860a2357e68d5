// Pure curve-editing operations for the t-d editor: dragging with
// order-preserving snapping, point insertion, and evaluation for
// drawing the curve polyline.

import type { ControlPoint, CurveKind, CurveSpec } from "./types.js";

// Minimum t gap enforced between neighboring control points when
// dragging: a point pushed past its neighbor snaps to neighbor - 0.01.
export const T_SNAP_GAP = 0.01;

const clamp = (x: number, lo: number, hi: number): number =>
  Math.min(Math.max(x, lo), hi);

/** Drag a control point to (t, d), preserving t-order by snapping and
 * clamping d to [0, 1].  Endpoint t values are pinned so the curve
 * always covers [0, 1]; their d is free (dragging the last point to
 * d=0 makes a reverse-time curve, which is allowed). */
export function dragPoint(
  curve: CurveSpec,
  index: number,
  t: number,
  d: number,
): CurveSpec {
  const points = curve.points.map((p) => [...p] as ControlPoint);
  const point = points[index];
  if (!point) return curve;
  const last = points.length - 1;
  let newT: number;
  if (index === 0) {
    newT = 0;
  } else if (index === last) {
    newT = 1;
  } else {
    const prev = points[index - 1]![0];
    const next = points[index + 1]![0];
    newT = clamp(t, prev + T_SNAP_GAP, next - T_SNAP_GAP);
  }
  points[index] = [newT, clamp(d, 0, 1)];
  return { kind: curve.kind, points };
}

/** Insert a control point at (t, d) keeping t-order (double-click on a
 * segment).  Linear curves become piecewise_linear, since they only
 * admit two control points; Bezier curves are fixed at four points and
 * are returned unchanged. */
export function insertPoint(curve: CurveSpec, t: number, d: number): CurveSpec {
  if (curve.kind === "cubic_bezier") return curve;
  if (t <= 0 || t >= 1) return curve;
  const points = curve.points.map((p) => [...p] as ControlPoint);
  let at = points.length;
  for (let i = 0; i < points.length; i++) {
    const pt = points[i]!;
    if (Math.abs(pt[0] - t) < T_SNAP_GAP) return curve; // too close to an existing point
    if (pt[0] > t) {
      at = i;
      break;
    }
  }
  points.splice(at, 0, [t, clamp(d, 0, 1)]);
  const kind: CurveKind = curve.kind === "linear" ? "piecewise_linear" : curve.kind;
  return { kind, points };
}

/** Evaluate d(t); mirrors the engine's curve semantics. */
export function evalCurve(curve: CurveSpec, t: number): number {
  const pts = curve.points;
  if (curve.kind === "linear") {
    const [t0, d0] = pts[0]!;
    const [t1, d1] = pts[pts.length - 1]!;
    return d0 + ((d1 - d0) * (t - t0)) / (t1 - t0);
  }
  if (curve.kind === "piecewise_linear") {
    let i = 0;
    while (i < pts.length - 2 && pts[i + 1]![0] <= t) i++;
    const [t0, d0] = pts[i]!;
    const [t1, d1] = pts[i + 1]!;
    return d0 + ((d1 - d0) * (t - t0)) / (t1 - t0);
  }
  // cubic Bezier with monotone t: bisection on the curve parameter
  const bez = (coeffs: number[], u: number): number => {
    const mu = 1 - u;
    return (
      mu * mu * mu * coeffs[0]! +
      3 * mu * mu * u * coeffs[1]! +
      3 * mu * u * u * coeffs[2]! +
      u * u * u * coeffs[3]!
    );
  };
  const txs = pts.map((p) => p[0]);
  const tds = pts.map((p) => p[1]);
  let lo = 0;
  let hi = 1;
  while (hi - lo > 1e-6) {
    const mid = 0.5 * (lo + hi);
    if (bez(txs, mid) < t) lo = mid;
    else hi = mid;
  }
  return clamp(bez(tds, 0.5 * (lo + hi)), 0, 1);
}
