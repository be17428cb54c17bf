import { describe, expect, it } from "vitest";
import { ConsoleApi, FetchLike, isApiError } from "../src/api.js";

interface Recorded {
  url: string;
  init?: RequestInit;
}

function stub(status: number, body: unknown): { fetch: FetchLike; calls: Recorded[] } {
  const calls: Recorded[] = [];
  const fetch: FetchLike = async (url, init) => {
    calls.push({ url, init });
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  };
  return { fetch, calls };
}

describe("request shapes", () => {
  it("starts a session with one POST carrying the inline scene", async () => {
    const { fetch, calls } = stub(201, { session_id: "sess-1", phase: "AWAITING_REVIEW" });
    const api = new ConsoleApi("http://host:1", fetch);
    const out = await api.startSession({ scene: { id: "x" }, config: { seed: 1 } });
    expect(out.session_id).toBe("sess-1");
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("http://host:1/sessions");
    expect(calls[0].init?.method).toBe("POST");
    const sent = JSON.parse(String(calls[0].init?.body));
    expect(sent).toEqual({
      scene_id: null,
      scene: { id: "x" },
      config: { seed: 1 },
      session_id: null,
    });
  });

  it("fetches the view with one GET and an encoded session id", async () => {
    const { fetch, calls } = stub(200, {
      session_id: "a b",
      phase: "GROUNDED",
      image: { width: 320, height: 400 },
      objects: [],
    });
    const api = new ConsoleApi("http://host:1", fetch);
    await api.getView("a b");
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("http://host:1/sessions/a%20b/view");
    expect(calls[0].init?.method).toBe("GET");
    expect(calls[0].init?.body).toBeUndefined();
  });

  it("steps with one POST and no body", async () => {
    const { fetch, calls } = stub(200, { phase: "GROUNDED" });
    const api = new ConsoleApi("http://host:1", fetch);
    await api.step("sess-1");
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("http://host:1/sessions/sess-1/step");
    expect(calls[0].init?.body).toBeUndefined();
  });

  it("sends the typed correction verbatim in one POST", async () => {
    const { fetch, calls } = stub(200, { phase: "DESCRIBED" });
    const api = new ConsoleApi("http://host:1", fetch);
    await api.intervene("sess-1", "the apple is on the box");
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("http://host:1/sessions/sess-1/intervention");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      text: "the apple is on the box",
    });
  });
});

describe("error mapping", () => {
  it("maps a structured rejection onto an ApiError with its tokens", async () => {
    const { fetch } = stub(422, {
      code: "unknown-class",
      message: "no such object class",
      tokens: ["zeppelin"],
    });
    const api = new ConsoleApi("http://host:1", fetch);
    let caught: unknown;
    try {
      await api.intervene("sess-1", "grab the zeppelin");
    } catch (err) {
      caught = err;
    }
    expect(isApiError(caught)).toBe(true);
    if (isApiError(caught)) {
      expect(caught.status).toBe(422);
      expect(caught.code).toBe("unknown-class");
      expect(caught.tokens).toEqual(["zeppelin"]);
    }
  });

  it("keeps the wrong-phase hint from a conflict response", async () => {
    const { fetch } = stub(409, {
      code: "wrong-phase",
      message: "cannot intervene in phase EXECUTED",
      phase: "EXECUTED",
    });
    const api = new ConsoleApi("http://host:1", fetch);
    const err = await api.intervene("s", "x").then(
      () => null,
      (e) => e,
    );
    expect(isApiError(err)).toBe(true);
    expect(err.phase).toBe("EXECUTED");
  });

  it("labels a refused connection as a network error", async () => {
    const api = new ConsoleApi("http://host:1", async () => {
      throw new Error("connection refused");
    });
    const err = await api.getView("s").then(
      () => null,
      (e) => e,
    );
    expect(isApiError(err)).toBe(true);
    expect(err.status).toBe(0);
    expect(err.code).toBe("network");
    expect(err.message).toContain("connection refused");
  });

  it("falls back to the HTTP status line when the error body is not JSON", async () => {
    const fetchImpl: FetchLike = async () =>
      new Response("<html>oops</html>", { status: 502, statusText: "Bad Gateway" });
    const api = new ConsoleApi("http://host:1", fetchImpl);
    const err = await api.getView("s").then(
      () => null,
      (e) => e,
    );
    expect(err.code).toBe("http-error");
    expect(err.message).toBe("Bad Gateway");
    expect(err.status).toBe(502);
  });

  it("rejects a view payload that cannot be drawn", async () => {
    const { fetch } = stub(200, { totally: "unrelated" });
    const api = new ConsoleApi("http://host:1", fetch);
    const err = await api.getView("s").then(
      () => null,
      (e) => e,
    );
    expect(isApiError(err)).toBe(true);
    expect(err.code).toBe("bad-payload");
  });

  it("does not mistake plain exceptions for ApiError", () => {
    expect(isApiError(new Error("x"))).toBe(false);
    expect(isApiError(null)).toBe(false);
    expect(isApiError({ status: 1, code: "x" })).toBe(true);
  });
});
