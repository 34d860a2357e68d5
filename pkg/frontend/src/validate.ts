// Client-side retime-script validation.
//
// These rules must accept exactly the set of scripts the service
// accepts (it returns 422 otherwise); the shared fixture suite in
// ../fixtures/curve_validation.json is replayed against both sides.

import type { ScriptSpec } from "./types.js";

const CURVE_KINDS = ["linear", "piecewise_linear", "cubic_bezier"];
const OVERLAP_RULES = ["last_wins", "priority"];

export function validateScript(spec: unknown): string[] {
  const errors: string[] = [];
  if (typeof spec !== "object" || spec === null || Array.isArray(spec)) {
    return ["script must be a JSON object"];
  }
  const script = spec as Record<string, unknown>;

  const checkCurve = (obj: unknown, where: string): void => {
    if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
      errors.push(`${where}: curve must be an object`);
      return;
    }
    const curve = obj as Record<string, unknown>;
    const kind = curve["kind"];
    if (typeof kind !== "string" || !CURVE_KINDS.includes(kind)) {
      errors.push(`${where}: unknown curve kind ${JSON.stringify(kind)}`);
      return;
    }
    const points = curve["points"];
    if (
      !Array.isArray(points) ||
      points.some((p) => !Array.isArray(p) || p.length !== 2)
    ) {
      errors.push(`${where}: points must be a list of [t, d] pairs`);
      return;
    }
    if (points.length < 2) {
      errors.push(`${where}: need at least two control points`);
      return;
    }
    if (kind === "linear" && points.length !== 2) {
      errors.push(`${where}: linear curve takes exactly two control points`);
    }
    if (kind === "cubic_bezier" && points.length !== 4) {
      errors.push(`${where}: cubic_bezier curve takes exactly four control points`);
    }
    for (let i = 0; i < points.length; i++) {
      const [t, d] = points[i] as [unknown, unknown];
      if (typeof t !== "number" || typeof d !== "number" || !isFinite(t) || !isFinite(d)) {
        errors.push(`${where}: point ${i} is not numeric`);
        return;
      }
      if (d < 0 || d > 1) {
        errors.push(`${where}: point ${i} (${t}, ${d}): d outside [0, 1]`);
      }
    }
    const ts = points.map((p) => (p as [number, number])[0]);
    for (let i = 1; i < ts.length; i++) {
      const prev = ts[i - 1];
      const cur = ts[i];
      if (prev !== undefined && cur !== undefined && cur <= prev) {
        errors.push(`${where}: t values must be strictly increasing, got ${JSON.stringify(ts)}`);
        break;
      }
    }
    if (ts.length > 0 && (ts[0] !== 0 || ts[ts.length - 1] !== 1)) {
      errors.push(`${where}: domain must cover [0, 1], got [${ts[0]}, ${ts[ts.length - 1]}]`);
    }
  };

  const layers = script["layers"] ?? [];
  if (!Array.isArray(layers)) {
    errors.push("layers must be a list");
  } else {
    layers.forEach((layer, i) => {
      if (
        typeof layer !== "object" ||
        layer === null ||
        !("mask" in layer) ||
        !("curve" in layer)
      ) {
        errors.push(`layer ${i}: needs mask and curve fields`);
        return;
      }
      const rec = layer as Record<string, unknown>;
      checkCurve(rec["curve"], `layer ${i} (${String(rec["mask"])})`);
    });
  }
  if ("background" in script) {
    checkCurve(script["background"], "background");
  }
  const overlap = script["overlap"] ?? "last_wins";
  if (typeof overlap !== "string" || !OVERLAP_RULES.includes(overlap)) {
    errors.push(`overlap must be one of ${JSON.stringify(OVERLAP_RULES)}, got ${JSON.stringify(overlap)}`);
  }
  return errors;
}

export function isValidScript(spec: ScriptSpec): boolean {
  return validateScript(spec).length === 0;
}
