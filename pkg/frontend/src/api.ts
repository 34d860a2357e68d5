// Thin client for the re-timing session API.  The fetch function is
// injectable so tests can run without a server.

import type { ScriptSpec } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`service ${status}: ${detail}`);
  }
}

async function raiseForStatus(resp: Response): Promise<Response> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep statusText
    }
    throw new ServiceError(resp.status, detail);
  }
  return resp;
}

export class SessionApi {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async createSession(): Promise<string> {
    const resp = await raiseForStatus(
      await this.fetchFn(`${this.baseUrl}/sessions`, { method: "POST" }),
    );
    const body = (await resp.json()) as { id: string };
    return body.id;
  }

  async uploadAsset(sessionId: string, name: string, data: Blob | ArrayBuffer): Promise<void> {
    await raiseForStatus(
      await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}/assets/${name}`, {
        method: "PUT",
        body: data,
      }),
    );
  }

  async putScript(sessionId: string, script: ScriptSpec): Promise<unknown> {
    const resp = await raiseForStatus(
      await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}/script`, {
        method: "PUT",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(script),
      }),
    );
    return resp.json();
  }

  previewUrl(sessionId: string, t: number, iters: number): string {
    return `${this.baseUrl}/sessions/${sessionId}/preview?t=${t}&iters=${iters}`;
  }

  async fetchPreview(sessionId: string, t: number, iters: number): Promise<Blob> {
    const resp = await raiseForStatus(
      await this.fetchFn(this.previewUrl(sessionId, t, iters)),
    );
    return resp.blob();
  }

  async render(sessionId: string, timesteps: number[], iters: number): Promise<string[]> {
    const resp = await raiseForStatus(
      await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}/render`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ timesteps, iters }),
      }),
    );
    const body = (await resp.json()) as { frames: string[] };
    return body.frames.map((url) => `${this.baseUrl}${url}`);
  }
}
