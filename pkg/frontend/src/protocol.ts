/**
 * Wire protocol for the teleop service: JSON text frames over a websocket.
 * This module is the single source of truth for frame shapes; every frame
 * the console sends passes validateCommand before it leaves the session.
 */

export const MAX_LINEAR = 1.0; // m/s, service-side clamp
export const MAX_ANGULAR = 1.5; // rad/s

export const TRIGGER_ACTIONS = ["grasp", "unload", "rest", "reset"] as const;
export type TriggerAction = (typeof TRIGGER_ACTIONS)[number];

export interface CmdVel {
  type: "cmd_vel";
  vx: number;
  vy: number;
  wz: number;
}

export interface Trigger {
  type: "trigger";
  action: TriggerAction;
}

export interface SetScene {
  type: "set_scene";
  scene: string;
}

export type Command = CmdVel | Trigger | SetScene;

export interface BaseState {
  x: number;
  y: number;
  yaw: number;
}

export interface Estimate {
  center: number[];
  axis: number[];
  frame: string;
  valid: boolean;
}

export interface BottleView {
  center: number[];
  axis: number[];
  radius: number;
  half_length: number;
  attached: boolean;
  loaded: boolean;
}

export interface Snapshot {
  type: "snapshot";
  t: number;
  base: BaseState;
  h: number;
  theta: number;
  arm: number[];
  gripper: number;
  phase: string;
  estimate: Estimate | null;
  bottles: BottleView[];
  bin: { basket_deg: number; door_deg: number; lift_m: number };
  loads: number;
  commanded_velocity: number[];
}

export interface ErrorReply {
  type: "error";
  detail: string;
}

const isFiniteNumber = (v: unknown): v is number =>
  typeof v === "number" && Number.isFinite(v);

/** Returns null when the command is a well-formed protocol frame. */
export function validateCommand(obj: unknown): string | null {
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    return "command must be an object";
  }
  const rec = obj as Record<string, unknown>;
  switch (rec.type) {
    case "cmd_vel": {
      for (const key of ["vx", "vy", "wz"]) {
        if (!isFiniteNumber(rec[key])) return `cmd_vel.${key} must be a finite number`;
      }
      const { vx, vy, wz } = rec as unknown as CmdVel;
      if (Math.abs(vx) > MAX_LINEAR || Math.abs(vy) > MAX_LINEAR) {
        return "linear velocity beyond the service clamp";
      }
      if (Math.abs(wz) > MAX_ANGULAR) return "angular velocity beyond the service clamp";
      return null;
    }
    case "trigger":
      return (TRIGGER_ACTIONS as readonly string[]).includes(rec.action as string)
        ? null
        : `unknown trigger action ${String(rec.action)}`;
    case "set_scene":
      return typeof rec.scene === "string" && rec.scene.length > 0
        ? null
        : "set_scene.scene must be a non-empty string";
    default:
      return `unknown command type ${String(rec.type)}`;
  }
}

/** Parse one incoming frame; returns null for anything but a snapshot. */
export function parseSnapshot(text: string): Snapshot | null {
  let msg: unknown;
  try {
    msg = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null) return null;
  const rec = msg as Record<string, unknown>;
  if (rec.type !== "snapshot") return null;
  if (!isFiniteNumber(rec.t) || typeof rec.phase !== "string") return null;
  const base = rec.base as Record<string, unknown> | undefined;
  if (!base || !isFiniteNumber(base.x) || !isFiniteNumber(base.y) || !isFiniteNumber(base.yaw)) {
    return null;
  }
  return rec as unknown as Snapshot;
}

export function parseError(text: string): ErrorReply | null {
  try {
    const msg = JSON.parse(text) as Record<string, unknown>;
    if (msg && msg.type === "error" && typeof msg.detail === "string") {
      return msg as unknown as ErrorReply;
    }
  } catch {
    /* not JSON */
  }
  return null;
}
