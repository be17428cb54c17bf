// Console state is a pure function of the last good server view plus the
// text currently in the intervention box. Reducers return fresh objects;
// nothing in here talks to the network or the DOM.

import type { ApiError, Phase, View } from "./types.js";

export interface ConsoleState {
  view: View | null; // last good frame, kept across errors
  draft: string; // in-flight intervention text
  banner: string | null; // transport/server failure, shown over the canvas
  diagnostics: string | null; // parse feedback shown under the text box
  busy: boolean; // a request is in flight
}

export function initialState(): ConsoleState {
  return { view: null, draft: "", banner: null, diagnostics: null, busy: false };
}

export function withBusy(state: ConsoleState, busy: boolean): ConsoleState {
  return { ...state, busy };
}

export function withDraft(state: ConsoleState, draft: string): ConsoleState {
  return { ...state, draft };
}

/** A fresh server frame clears error chrome; a submitted draft clears on success. */
export function withView(state: ConsoleState, view: View, clearDraft = false): ConsoleState {
  return {
    ...state,
    view,
    banner: null,
    diagnostics: null,
    busy: false,
    draft: clearDraft ? "" : state.draft,
  };
}

const PARSE_CODES = new Set(["no-predicate", "unknown-class", "class-arity", "bad-lexicon", "language-error"]);

/**
 * Failures never drop the last good frame. Parse rejections (unparseable
 * intervention text) become inline diagnostics next to the box; everything
 * else becomes the banner with its retry affordance.
 */
export function withError(state: ConsoleState, err: ApiError): ConsoleState {
  if (PARSE_CODES.has(err.code) || err.tokens !== undefined) {
    const tokens = err.tokens && err.tokens.length ? ` (tokens: ${err.tokens.join(", ")})` : "";
    return { ...state, busy: false, diagnostics: `${err.message}${tokens}` };
  }
  return { ...state, busy: false, banner: `${err.code}: ${err.message}` };
}

export function phase(state: ConsoleState): Phase | null {
  return state.view ? state.view.phase : null;
}

/** Typing is open while the description awaits review and again on failure. */
export function canIntervene(state: ConsoleState): boolean {
  const p = phase(state);
  return p === "AWAITING_REVIEW" || p === "FAILED";
}

/** The accept affordance exists only while a description awaits review. */
export function canAccept(state: ConsoleState): boolean {
  return phase(state) === "AWAITING_REVIEW";
}

export function canStep(state: ConsoleState): boolean {
  const p = phase(state);
  return p !== null && p !== "EXECUTED" && p !== "FAILED" && !state.busy;
}

export function stepLabel(state: ConsoleState): string {
  return phase(state) === "AWAITING_REVIEW" ? "accept description" : "step";
}

export function failureText(state: ConsoleState): string | null {
  const v = state.view;
  if (!v || v.phase !== "FAILED" || !v.failure) return null;
  return `${v.failure.code}: ${v.failure.reason}`;
}

export function descriptionBadge(state: ConsoleState): string {
  const d = state.view?.description;
  if (!d) return "";
  return d.source === "HUMAN" ? "HUMAN" : "SELF";
}

export function groundedObjectId(state: ConsoleState): number | null {
  return state.view?.grounded ? state.view.grounded.object_id : null;
}

/** Event rows ordered by seq; the server already guarantees density. */
export function feed(state: ConsoleState): { seq: number; kind: string; phase: Phase }[] {
  const events = state.view?.events ?? [];
  return [...events]
    .sort((a, b) => a.seq - b.seq)
    .map((e) => ({ seq: e.seq, kind: e.kind, phase: e.phase }));
}

export const PHASE_ORDER: Phase[] = [
  "DESCRIBED",
  "AWAITING_REVIEW",
  "GROUNDED",
  "PLANNED",
  "EXECUTED",
];
