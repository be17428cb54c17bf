// One function per server endpoint; no retries, no caching, no local state.
// Non-2xx responses are thrown as ApiError so callers can branch on `code`.

import type { ApiError, StartOptions, View } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ConsoleApi {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  async startSession(opts: StartOptions): Promise<{ session_id: string; phase: string }> {
    return this.request("POST", "/sessions", {
      scene_id: opts.sceneId ?? null,
      scene: opts.scene ?? null,
      config: opts.config ?? null,
      session_id: opts.sessionId ?? null,
    });
  }

  async getView(sessionId: string): Promise<View> {
    const payload = await this.request<View>(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/view`,
    );
    // a frame that cannot be drawn must never replace the last good one
    if (
      payload === null ||
      typeof payload !== "object" ||
      typeof payload.phase !== "string" ||
      !Array.isArray(payload.objects) ||
      typeof payload.image !== "object"
    ) {
      throw <ApiError>{
        status: 200,
        code: "bad-payload",
        message: "view response is missing required fields",
      };
    }
    return payload;
  }

  async step(sessionId: string): Promise<{ phase: string }> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/step`);
  }

  async intervene(sessionId: string, text: string): Promise<{ phase: string }> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/intervention`, {
      text,
    });
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchImpl(this.base + path, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw <ApiError>{
        status: 0,
        code: "network",
        message: err instanceof Error ? err.message : String(err),
      };
    }
    const payload = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      throw <ApiError>{
        status: resp.status,
        code: typeof payload.code === "string" ? payload.code : "http-error",
        message: typeof payload.message === "string" ? payload.message : resp.statusText,
        tokens: payload.tokens,
        phase: payload.phase,
        issues: payload.issues,
      };
    }
    return payload as T;
  }
}

export function isApiError(err: unknown): err is ApiError {
  return typeof err === "object" && err !== null && "status" in err && "code" in err;
}
