/**
 * Top-down 2D scene view plus h/theta gauges. Pure math lives in
 * worldToScreen so the transform is testable; everything else draws from
 * the latest snapshot only.
 */

import { Snapshot } from "./protocol";

export interface Viewport {
  width: number;
  height: number;
  metersAcross: number; // world meters spanning the canvas width
  centerX: number; // world point at the canvas center
  centerY: number;
}

/** World (x forward/up-screen, y left/left-screen) to canvas pixels. */
export function worldToScreen(v: Viewport, wx: number, wy: number): [number, number] {
  const scale = v.width / v.metersAcross;
  // robot x points up the screen, robot y points left on the screen
  const sx = v.width / 2 - (wy - v.centerY) * scale;
  const sy = v.height / 2 - (wx - v.centerX) * scale;
  return [sx, sy];
}

const PHASE_COLORS: Record<string, string> = {
  Rest: "#8a929e",
  Grasping: "#4cc2ff",
  Closing: "#ffb454",
  Loading: "#ffb454",
  Releasing: "#ffb454",
  UnloadReach: "#c792ea",
  UnloadGrip: "#c792ea",
  UnloadOpen: "#c792ea",
};

export function phaseColor(phase: string): string {
  return PHASE_COLORS[phase] ?? "#8a929e";
}

export function drawScene(ctx: CanvasRenderingContext2D, snap: Snapshot | null, v: Viewport): void {
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, v.width, v.height);
  drawGrid(ctx, v);
  if (!snap) return;

  for (const bottle of snap.bottles) {
    if (bottle.loaded) continue;
    drawBottle(ctx, v, bottle.center, bottle.axis, bottle.half_length, bottle.attached);
  }
  if (snap.estimate && snap.estimate.valid) {
    drawEstimate(ctx, v, snap.estimate.center, snap.estimate.axis);
  }
  drawBase(ctx, v, snap.base.x, snap.base.y, snap.base.yaw);
}

function drawGrid(ctx: CanvasRenderingContext2D, v: Viewport): void {
  const scale = v.width / v.metersAcross;
  ctx.strokeStyle = "#1d2430";
  ctx.lineWidth = 1;
  const step = 0.25 * scale;
  for (let x = (v.width / 2) % step; x < v.width; x += step) {
    ctx.beginPath();
    ctx.moveTo(x, 0);
    ctx.lineTo(x, v.height);
    ctx.stroke();
  }
  for (let y = (v.height / 2) % step; y < v.height; y += step) {
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(v.width, y);
    ctx.stroke();
  }
}

function drawBase(ctx: CanvasRenderingContext2D, v: Viewport, x: number, y: number, yaw: number): void {
  const scale = v.width / v.metersAcross;
  const [sx, sy] = worldToScreen(v, x, y);
  const L = 0.30 * scale;
  const W = 0.18 * scale;
  ctx.save();
  ctx.translate(sx, sy);
  ctx.rotate(-yaw); // screen-up is +x; positive yaw turns toward +y (screen left)
  ctx.strokeStyle = "#69d58c";
  ctx.lineWidth = 2;
  ctx.strokeRect(-W / 2, -L / 2, W, L);
  ctx.beginPath(); // heading chevron
  ctx.moveTo(-W / 2, -L / 2);
  ctx.lineTo(0, -L / 2 - 0.1 * scale);
  ctx.lineTo(W / 2, -L / 2);
  ctx.stroke();
  ctx.restore();
}

function drawBottle(
  ctx: CanvasRenderingContext2D,
  v: Viewport,
  center: number[],
  axis: number[],
  halfLength: number,
  attached: boolean,
): void {
  const scale = v.width / v.metersAcross;
  const [sx, sy] = worldToScreen(v, center[0], center[1]);
  ctx.strokeStyle = attached ? "#ffd866" : "#ff6d7e";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(sx, sy, Math.max(4, 0.02 * scale), 0, 2 * Math.PI);
  ctx.stroke();
  const [ex, ey] = worldToScreen(
    v,
    center[0] + axis[0] * halfLength,
    center[1] + axis[1] * halfLength,
  );
  const [ex2, ey2] = worldToScreen(
    v,
    center[0] - axis[0] * halfLength,
    center[1] - axis[1] * halfLength,
  );
  ctx.beginPath();
  ctx.moveTo(ex2, ey2);
  ctx.lineTo(ex, ey);
  ctx.stroke();
}

function drawEstimate(ctx: CanvasRenderingContext2D, v: Viewport, center: number[], axis: number[]): void {
  const [sx, sy] = worldToScreen(v, center[0], center[1]);
  ctx.strokeStyle = "#4cc2ff";
  ctx.lineWidth = 1.5;
  const r = 7;
  ctx.beginPath();
  ctx.moveTo(sx - r, sy);
  ctx.lineTo(sx + r, sy);
  ctx.moveTo(sx, sy - r);
  ctx.lineTo(sx, sy + r);
  ctx.stroke();
}

/** Vertical bar gauge; returns nothing, draws value within [lo, hi]. */
export function drawGauge(
  ctx: CanvasRenderingContext2D,
  x: number,
  y: number,
  h: number,
  lo: number,
  hi: number,
  value: number,
  label: string,
): void {
  ctx.strokeStyle = "#3a4556";
  ctx.strokeRect(x, y, 16, h);
  const frac = Math.max(0, Math.min(1, (value - lo) / (hi - lo)));
  ctx.fillStyle = "#4cc2ff";
  ctx.fillRect(x + 2, y + (1 - frac) * (h - 4) + 2, 12, 4);
  ctx.fillStyle = "#8a929e";
  ctx.font = "11px system-ui";
  ctx.textAlign = "center";
  ctx.fillText(label, x + 8, y + h + 14);
  ctx.fillText(value.toFixed(2), x + 8, y - 6);
}
