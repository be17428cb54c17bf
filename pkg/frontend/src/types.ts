// Shapes mirror the session service JSON field for field; nothing here is
// computed client-side.

export type Phase =
  | "DESCRIBED"
  | "AWAITING_REVIEW"
  | "GROUNDED"
  | "PLANNED"
  | "EXECUTED"
  | "FAILED";

export interface ViewObject {
  id: number;
  class: string;
  bbox: [number, number, number, number]; // x, y, w, h
}

export interface ViewGrasp {
  rank: number;
  rect: [number, number, number, number, number]; // cx, cy, theta, w, h
  corners: [number, number][];
  box_conf: number;
  surface_conf: number;
  angle_class: number;
  final_conf: number;
}

export interface ViewDescription {
  text: string;
  source: "SELF_EXPLANATION" | "HUMAN";
}

export interface ViewGrounded {
  object_id: number;
  region: [number, number, number, number];
  confidence: number;
  ambiguous: boolean;
}

export interface EventRow {
  seq: number;
  kind: string;
  phase: Phase;
  timestamp: number;
}

export interface View {
  session_id: string;
  phase: Phase;
  scene_id: string;
  image: { width: number; height: number };
  objects: ViewObject[];
  stacking_edges: [number, number][];
  relations: [number, string, number][];
  description: ViewDescription | null;
  grounded: ViewGrounded | null;
  grasps: ViewGrasp[];
  success: boolean | null;
  failure: { code: string; reason: string } | null;
  events: EventRow[];
}

export interface ApiError {
  status: number;
  code: string;
  message: string;
  tokens?: string[];
  phase?: Phase;
  issues?: { code: string; message: string }[];
}

export interface StartOptions {
  sceneId?: string;
  scene?: unknown;
  config?: Record<string, unknown>;
  sessionId?: string;
}
