// Trailing-edge debouncer with an injectable clock, plus request-hash
// bookkeeping so stale preview responses are discarded.
//
// A 150 ms debounce caps a continuous scrub burst at ~6.7 requests per
// second; only the latest scheduled call fires.

export interface Clock {
  setTimeout(fn: () => void, ms: number): unknown;
  clearTimeout(handle: unknown): void;
}

export const realClock: Clock = {
  setTimeout: (fn, ms) => globalThis.setTimeout(fn, ms),
  clearTimeout: (handle) => globalThis.clearTimeout(handle as number),
};

export const PREVIEW_DEBOUNCE_MS = 150;

export function makeDebouncer(delayMs: number, clock: Clock = realClock) {
  let pending: unknown = null;
  return (fn: () => void): void => {
    if (pending !== null) clock.clearTimeout(pending);
    pending = clock.setTimeout(() => {
      pending = null;
      fn();
    }, delayMs);
  };
}

/** Tracks the hash of the most recently issued request; a response is
 * applied only if it still matches (stale responses are discarded). */
export class LatestRequestGate {
  private current: string | null = null;

  issue(hash: string): void {
    this.current = hash;
  }

  isCurrent(hash: string): boolean {
    return this.current === hash;
  }
}

export function requestHash(parts: unknown[]): string {
  return JSON.stringify(parts);
}
