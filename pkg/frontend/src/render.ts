// Canvas drawing for one scene frame. The context is taken structurally so
// tests can pass a recorder instead of a real CanvasRenderingContext2D.

import type { View, ViewGrasp } from "./types.js";

export interface Canvas2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  setLineDash(segments: number[]): void;
}

export const COLORS = {
  background: "#10141a",
  object: "#7f9db9",
  label: "#d5dde6",
  stacking: "#57606f",
  grounded: "#38d39f",
  groundedFill: "rgba(56, 211, 159, 0.18)",
  grasp: "#e0a030",
  graspTop: "#ff6b4a",
};

/** Uniform scale that fits the scene image inside the canvas. */
export function fitScale(view: View, width: number, height: number): number {
  if (view.image.width <= 0 || view.image.height <= 0) return 1;
  return Math.min(width / view.image.width, height / view.image.height);
}

function bboxCenter(bbox: [number, number, number, number]): [number, number] {
  return [bbox[0] + bbox[2] / 2, bbox[1] + bbox[3] / 2];
}

function drawGrasp(ctx: Canvas2D, grasp: ViewGrasp, s: number): void {
  const pts = grasp.corners;
  if (pts.length === 0) return;
  ctx.strokeStyle = grasp.rank === 0 ? COLORS.graspTop : COLORS.grasp;
  ctx.lineWidth = grasp.rank === 0 ? 2.5 : 1;
  ctx.beginPath();
  ctx.moveTo(pts[0][0] * s, pts[0][1] * s);
  for (let i = 1; i < pts.length; i++) ctx.lineTo(pts[i][0] * s, pts[i][1] * s);
  ctx.closePath();
  ctx.stroke();
  ctx.fillStyle = grasp.rank === 0 ? COLORS.graspTop : COLORS.grasp;
  ctx.fillText(grasp.final_conf.toFixed(2), pts[0][0] * s + 3, pts[0][1] * s - 3);
}

/**
 * Draw the full frame: object boxes to scale, stacking edges between box
 * centers, the grounded region highlighted, then ranked grasp rectangles.
 * An empty scene draws nothing beyond the background.
 */
export function renderScene(ctx: Canvas2D, view: View, width: number, height: number): void {
  const s = fitScale(view, width, height);
  ctx.setLineDash([]);
  ctx.globalAlpha = 1;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, view.image.width * s, view.image.height * s);
  ctx.font = "12px system-ui, sans-serif";

  const byId = new Map(view.objects.map((o) => [o.id, o]));

  ctx.setLineDash([5, 4]);
  ctx.strokeStyle = COLORS.stacking;
  ctx.lineWidth = 1;
  for (const [childId, parentId] of view.stacking_edges) {
    const child = byId.get(childId);
    const parent = byId.get(parentId);
    if (!child || !parent) continue;
    const [cx, cy] = bboxCenter(child.bbox);
    const [px, py] = bboxCenter(parent.bbox);
    ctx.beginPath();
    ctx.moveTo(cx * s, cy * s);
    ctx.lineTo(px * s, py * s);
    ctx.stroke();
  }
  ctx.setLineDash([]);

  for (const obj of view.objects) {
    const [x, y, w, h] = obj.bbox;
    ctx.strokeStyle = COLORS.object;
    ctx.lineWidth = 1;
    ctx.strokeRect(x * s, y * s, w * s, h * s);
    ctx.fillStyle = COLORS.label;
    ctx.fillText(`${obj.id}:${obj.class}`, x * s + 2, y * s - 4);
  }

  if (view.grounded) {
    const [x, y, w, h] = view.grounded.region;
    ctx.fillStyle = COLORS.groundedFill;
    ctx.fillRect(x * s, y * s, w * s, h * s);
    ctx.strokeStyle = COLORS.grounded;
    ctx.lineWidth = 3;
    ctx.strokeRect(x * s, y * s, w * s, h * s);
    ctx.fillStyle = COLORS.grounded;
    const conf = view.grounded.confidence.toFixed(2);
    const flag = view.grounded.ambiguous ? " ambiguous" : "";
    ctx.fillText(`grounded ${conf}${flag}`, x * s + 2, (y + h) * s + 14);
  }

  for (const grasp of [...view.grasps].sort((a, b) => b.rank - a.rank)) {
    drawGrasp(ctx, grasp, s);
  }
}
