// Timeline scrubber driving debounced previews.  Every slider move
// schedules a fetch through the 150 ms debouncer; responses carrying a
// hash that is no longer current are discarded, so the displayed frame
// always corresponds to the latest submitted state.

import type { SessionApi } from "./api.js";
import {
  Clock,
  LatestRequestGate,
  PREVIEW_DEBOUNCE_MS,
  makeDebouncer,
  realClock,
  requestHash,
} from "./debounce.js";

export class PreviewScrubber {
  private debounce: (fn: () => void) => void;
  private gate = new LatestRequestGate();
  onFrame: (url: string, hash: string) => void = () => undefined;
  onError: (message: string) => void = () => undefined;

  constructor(
    private api: SessionApi,
    clock: Clock = realClock,
  ) {
    this.debounce = makeDebouncer(PREVIEW_DEBOUNCE_MS, clock);
  }

  /** Schedule a preview for the current state; bursts collapse to the
   * trailing call. */
  scrub(sessionId: string, t: number, iters: number, scriptFingerprint: string): void {
    const hash = requestHash([scriptFingerprint, t, iters]);
    this.gate.issue(hash);
    this.debounce(() => {
      void this.fetch(sessionId, t, iters, hash);
    });
  }

  private async fetch(sessionId: string, t: number, iters: number, hash: string): Promise<void> {
    if (!this.gate.isCurrent(hash)) return; // superseded before firing
    try {
      const blob = await this.api.fetchPreview(sessionId, t, iters);
      if (!this.gate.isCurrent(hash)) return; // superseded while in flight
      this.onFrame(URL.createObjectURL(blob), hash);
    } catch (err) {
      if (this.gate.isCurrent(hash)) {
        this.onError(err instanceof Error ? err.message : String(err));
      }
    }
  }
}
