import { describe, expect, it } from "vitest";

import {
  Clock,
  LatestRequestGate,
  PREVIEW_DEBOUNCE_MS,
  makeDebouncer,
  requestHash,
} from "../src/debounce.js";

/** Deterministic fake clock with manual advancement. */
class FakeClock implements Clock {
  now = 0;
  private timers = new Map<number, { at: number; fn: () => void }>();
  private nextId = 1;

  setTimeout(fn: () => void, ms: number): unknown {
    const id = this.nextId++;
    this.timers.set(id, { at: this.now + ms, fn });
    return id;
  }

  clearTimeout(handle: unknown): void {
    this.timers.delete(handle as number);
  }

  advance(ms: number): void {
    const target = this.now + ms;
    for (;;) {
      const due = [...this.timers.entries()]
        .filter(([, t]) => t.at <= target)
        .sort((a, b) => a[1].at - b[1].at)[0];
      if (!due) break;
      this.timers.delete(due[0]);
      this.now = due[1].at;
      due[1].fn();
    }
    this.now = target;
  }
}

describe("preview debouncing", () => {
  it("collapses a rapid scrub burst to the trailing call", () => {
    const clock = new FakeClock();
    const debounce = makeDebouncer(PREVIEW_DEBOUNCE_MS, clock);
    let fired: number[] = [];
    for (let i = 0; i < 50; i++) {
      const t = i / 50;
      debounce(() => fired.push(t));
      clock.advance(10); // user scrubs every 10 ms
    }
    clock.advance(PREVIEW_DEBOUNCE_MS);
    expect(fired).toEqual([49 / 50]);
  });

  it("caps continuous scrubbing at roughly 7 requests per second", () => {
    const clock = new FakeClock();
    const debounce = makeDebouncer(PREVIEW_DEBOUNCE_MS, clock);
    let count = 0;
    // pathological scrubber: one event every 151 ms keeps every timer
    const totalMs = 5000;
    for (let t = 0; t < totalMs; t += PREVIEW_DEBOUNCE_MS + 1) {
      debounce(() => count++);
      clock.advance(PREVIEW_DEBOUNCE_MS + 1);
    }
    const perSecond = count / (totalMs / 1000);
    expect(perSecond).toBeLessThanOrEqual(7);
    expect(perSecond).toBeGreaterThan(4); // still responsive
  });

  it("spaced-out scrubs all fire", () => {
    const clock = new FakeClock();
    const debounce = makeDebouncer(PREVIEW_DEBOUNCE_MS, clock);
    let count = 0;
    for (let i = 0; i < 5; i++) {
      debounce(() => count++);
      clock.advance(500);
    }
    expect(count).toBe(5);
  });
});

describe("stale response discarding", () => {
  it("keeps only the hash of the latest issued request", () => {
    const gate = new LatestRequestGate();
    const first = requestHash(["script-a", 0.2, 1]);
    const second = requestHash(["script-a", 0.8, 1]);
    gate.issue(first);
    gate.issue(second);
    expect(gate.isCurrent(first)).toBe(false);
    expect(gate.isCurrent(second)).toBe(true);
  });

  it("hashes differ across script, t, and iters", () => {
    const base = requestHash(["s", 0.5, 1]);
    expect(requestHash(["s", 0.5, 2])).not.toBe(base);
    expect(requestHash(["s", 0.6, 1])).not.toBe(base);
    expect(requestHash(["other", 0.5, 1])).not.toBe(base);
  });
});
