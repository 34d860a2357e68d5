// Canvas curve editor: control points on a t-d plot, draggable with
// order-preserving snapping; double-click inserts a point.  The d axis
// is drawn inverted (0 at the bottom) and labeled "distance traveled".

import { dragPoint, evalCurve, insertPoint } from "./curve.js";
import type { CurveSpec } from "./types.js";

const HANDLE_RADIUS = 6;

export class CurveEditor {
  private dragging: number | null = null;
  onChange: (curve: CurveSpec) => void = () => undefined;

  constructor(
    private canvas: HTMLCanvasElement,
    private curve: CurveSpec,
  ) {
    canvas.addEventListener("pointerdown", (ev) => this.onPointerDown(ev));
    canvas.addEventListener("pointermove", (ev) => this.onPointerMove(ev));
    canvas.addEventListener("pointerup", () => (this.dragging = null));
    canvas.addEventListener("pointerleave", () => (this.dragging = null));
    canvas.addEventListener("dblclick", (ev) => this.onDoubleClick(ev));
    this.draw();
  }

  setCurve(curve: CurveSpec): void {
    this.curve = curve;
    this.dragging = null;
    this.draw();
  }

  private toCanvas(t: number, d: number): [number, number] {
    const pad = 12;
    const w = this.canvas.width - 2 * pad;
    const h = this.canvas.height - 2 * pad;
    return [pad + t * w, pad + (1 - d) * h];
  }

  private fromCanvas(x: number, y: number): [number, number] {
    const pad = 12;
    const w = this.canvas.width - 2 * pad;
    const h = this.canvas.height - 2 * pad;
    return [(x - pad) / w, 1 - (y - pad) / h];
  }

  private eventPos(ev: MouseEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    const x = ((ev.clientX - rect.left) / rect.width) * this.canvas.width;
    const y = ((ev.clientY - rect.top) / rect.height) * this.canvas.height;
    return [x, y];
  }

  private hitTest(x: number, y: number): number | null {
    for (let i = 0; i < this.curve.points.length; i++) {
      const [t, d] = this.curve.points[i]!;
      const [cx, cy] = this.toCanvas(t, d);
      if ((cx - x) ** 2 + (cy - y) ** 2 <= (2 * HANDLE_RADIUS) ** 2) return i;
    }
    return null;
  }

  private onPointerDown(ev: PointerEvent): void {
    const [x, y] = this.eventPos(ev);
    this.dragging = this.hitTest(x, y);
  }

  private onPointerMove(ev: PointerEvent): void {
    if (this.dragging === null) return;
    const [x, y] = this.eventPos(ev);
    const [t, d] = this.fromCanvas(x, y);
    this.curve = dragPoint(this.curve, this.dragging, t, d);
    this.draw();
    this.onChange(this.curve);
  }

  private onDoubleClick(ev: MouseEvent): void {
    const [x, y] = this.eventPos(ev);
    if (this.hitTest(x, y) !== null) return;
    const [t, d] = this.fromCanvas(x, y);
    const next = insertPoint(this.curve, t, d);
    if (next !== this.curve) {
      this.curve = next;
      this.draw();
      this.onChange(this.curve);
    }
  }

  draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#16161e";
    ctx.fillRect(0, 0, width, height);

    ctx.strokeStyle = "#333344";
    ctx.lineWidth = 1;
    for (const frac of [0, 0.25, 0.5, 0.75, 1]) {
      const [x0, y0] = this.toCanvas(frac, 0);
      const [x1, y1] = this.toCanvas(frac, 1);
      ctx.beginPath();
      ctx.moveTo(x0, y0);
      ctx.lineTo(x1, y1);
      ctx.stroke();
      const [gx0, gy0] = this.toCanvas(0, frac);
      const [gx1, gy1] = this.toCanvas(1, frac);
      ctx.beginPath();
      ctx.moveTo(gx0, gy0);
      ctx.lineTo(gx1, gy1);
      ctx.stroke();
    }
    ctx.fillStyle = "#8888aa";
    ctx.font = "10px sans-serif";
    ctx.fillText("playback time t", width / 2 - 30, height - 2);
    ctx.save();
    ctx.translate(8, height / 2 + 40);
    ctx.rotate(-Math.PI / 2);
    ctx.fillText("distance traveled", 0, 0);
    ctx.restore();

    ctx.strokeStyle = "#7fd4ff";
    ctx.lineWidth = 2;
    ctx.beginPath();
    for (let i = 0; i <= 100; i++) {
      const t = i / 100;
      const [x, y] = this.toCanvas(t, evalCurve(this.curve, t));
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    }
    ctx.stroke();

    for (const [t, d] of this.curve.points) {
      const [x, y] = this.toCanvas(t, d);
      ctx.fillStyle = "#ffcc66";
      ctx.beginPath();
      ctx.arc(x, y, HANDLE_RADIUS, 0, 2 * Math.PI);
      ctx.fill();
    }
  }
}
