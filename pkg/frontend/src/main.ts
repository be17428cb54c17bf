// Operator console entry point. All state lives in a ConsoleState value;
// every handler performs exactly one API call, then refreshes the view.

import { ConsoleApi, isApiError } from "./api.js";
import {
  ConsoleState,
  PHASE_ORDER,
  canAccept,
  canIntervene,
  canStep,
  descriptionBadge,
  failureText,
  feed,
  initialState,
  stepLabel,
  withBusy,
  withDraft,
  withError,
  withView,
} from "./state.js";
import { renderScene } from "./render.js";

const POLL_MS = 1500;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const baseInput = el<HTMLInputElement>("base-url");
const sessionInput = el<HTMLInputElement>("session-id");
const attachBtn = el<HTMLButtonElement>("attach");
const sceneText = el<HTMLTextAreaElement>("scene-json");
const configText = el<HTMLTextAreaElement>("config-json");
const startBtn = el<HTMLButtonElement>("start");
const canvas = el<HTMLCanvasElement>("scene");
const banner = el<HTMLDivElement>("banner");
const phaseRow = el<HTMLDivElement>("phase-row");
const descText = el<HTMLSpanElement>("description-text");
const descBadge = el<HTMLSpanElement>("description-badge");
const failureBox = el<HTMLDivElement>("failure");
const stepBtn = el<HTMLButtonElement>("step");
const interventionText = el<HTMLTextAreaElement>("intervention-text");
const interveneBtn = el<HTMLButtonElement>("intervene");
const diagnosticsBox = el<HTMLDivElement>("diagnostics");
const eventList = el<HTMLUListElement>("events");

let state: ConsoleState = initialState();
let api: ConsoleApi | null = null;
let sessionId: string | null = null;
let pollTimer: number | undefined;

function setState(next: ConsoleState): void {
  state = next;
  paint();
}

function paint(): void {
  banner.textContent = state.banner ?? "";
  banner.hidden = state.banner === null;

  phaseRow.replaceChildren(
    ...PHASE_ORDER.map((p) => {
      const span = document.createElement("span");
      span.className = "phase" + (state.view?.phase === p ? " current" : "");
      span.textContent = p;
      return span;
    }),
  );
  if (state.view?.phase === "FAILED") {
    const span = document.createElement("span");
    span.className = "phase failed current";
    span.textContent = "FAILED";
    phaseRow.appendChild(span);
  }

  const desc = state.view?.description;
  descText.textContent = desc ? desc.text : "(none)";
  const badge = descriptionBadge(state);
  descBadge.textContent = badge;
  descBadge.className = "badge" + (badge === "HUMAN" ? " human" : "");
  descBadge.hidden = badge === "";

  const failure = failureText(state);
  failureBox.textContent = failure ?? "";
  failureBox.hidden = failure === null;

  stepBtn.textContent = stepLabel(state);
  stepBtn.disabled = !canStep(state) || (stepLabel(state) === "accept description" && !canAccept(state));
  interventionText.disabled = !canIntervene(state) || state.busy;
  interveneBtn.disabled = !canIntervene(state) || state.busy || state.draft.trim() === "";
  if (interventionText.value !== state.draft) interventionText.value = state.draft;

  diagnosticsBox.textContent = state.diagnostics ?? "";
  diagnosticsBox.hidden = state.diagnostics === null;

  eventList.replaceChildren(
    ...feed(state).map((row) => {
      const li = document.createElement("li");
      li.textContent = `#${row.seq} ${row.kind} [${row.phase}]`;
      return li;
    }),
  );

  // a transport error keeps the previous frame on screen under the banner
  if (state.view) {
    const ctx = canvas.getContext("2d");
    if (ctx) renderScene(ctx, state.view, canvas.width, canvas.height);
  }
}

async function refresh(): Promise<void> {
  if (!api || !sessionId) return;
  try {
    const view = await api.getView(sessionId);
    setState(withView(state, view));
  } catch (err) {
    setState(withError(state, toApiError(err)));
  }
}

function toApiError(err: unknown): { status: number; code: string; message: string } {
  if (isApiError(err)) return err;
  return { status: 0, code: "network", message: String(err) };
}

function connect(sid: string): void {
  api = new ConsoleApi(baseInput.value.replace(/\/$/, ""));
  sessionId = sid;
  sessionInput.value = sid;
  if (pollTimer !== undefined) window.clearInterval(pollTimer);
  pollTimer = window.setInterval(() => {
    if (!state.busy) void refresh();
  }, POLL_MS);
  void refresh();
}

attachBtn.addEventListener("click", () => {
  const sid = sessionInput.value.trim();
  if (sid) connect(sid);
});

startBtn.addEventListener("click", async () => {
  const client = new ConsoleApi(baseInput.value.replace(/\/$/, ""));
  let scene: unknown;
  let config: Record<string, unknown> | undefined;
  try {
    scene = JSON.parse(sceneText.value);
    config = configText.value.trim() ? JSON.parse(configText.value) : undefined;
  } catch (err) {
    setState(withError(state, { status: 0, code: "bad-json", message: String(err) }));
    return;
  }
  setState(withBusy(state, true));
  try {
    const summary = await client.startSession({ scene, config });
    setState(withBusy(state, false));
    connect(summary.session_id);
  } catch (err) {
    setState(withError(state, toApiError(err)));
  }
});

stepBtn.addEventListener("click", async () => {
  if (!api || !sessionId) return;
  setState(withBusy(state, true));
  try {
    await api.step(sessionId);
  } catch (err) {
    setState(withError(state, toApiError(err)));
    return;
  }
  await refresh();
});

interveneBtn.addEventListener("click", async () => {
  if (!api || !sessionId) return;
  setState(withBusy(state, true));
  try {
    await api.intervene(sessionId, state.draft);
  } catch (err) {
    setState(withError(state, toApiError(err)));
    return;
  }
  setState(withDraft(state, ""));
  await refresh();
});

interventionText.addEventListener("input", () => {
  state = withDraft(state, interventionText.value);
  interveneBtn.disabled = !canIntervene(state) || state.busy || state.draft.trim() === "";
});

paint();
