/**
 * Operator input: WASD+QE on the keyboard, or a standard gamepad
 * (left stick drives the base, right stick x yaws). Produces body-frame
 * velocity targets or null when every input is released, so the session
 * stops sending and the service watchdog halts the robot.
 */

import { MAX_ANGULAR, MAX_LINEAR } from "./protocol";

// keyboard speeds: a deliberate walking pace, well inside the clamps
export const KEY_LINEAR = 0.3; // m/s
export const KEY_ANGULAR = 0.9; // rad/s
const STICK_DEADZONE = 0.15;

export interface VelocityTarget {
  vx: number;
  vy: number;
  wz: number;
}

export type InputMode = "keyboard" | "gamepad";

export interface GamepadAxes {
  leftX: number; // right positive
  leftY: number; // down positive (browser convention)
  rightX: number;
}

const KEY_EFFECTS: Record<string, Partial<VelocityTarget>> = {
  KeyW: { vx: +KEY_LINEAR },
  KeyS: { vx: -KEY_LINEAR },
  KeyA: { vy: +KEY_LINEAR }, // robot +y is to its left
  KeyD: { vy: -KEY_LINEAR },
  KeyQ: { wz: +KEY_ANGULAR },
  KeyE: { wz: -KEY_ANGULAR },
};

function deadzone(v: number): number {
  return Math.abs(v) < STICK_DEADZONE ? 0 : v;
}

export class InputState {
  private held = new Set<string>();
  private pad: GamepadAxes | null = null;
  mode: InputMode = "keyboard";

  keyDown(code: string): void {
    if (code in KEY_EFFECTS) {
      this.held.add(code);
      this.mode = "keyboard";
    }
  }

  keyUp(code: string): void {
    this.held.delete(code);
  }

  releaseAll(): void {
    this.held.clear();
    this.pad = null;
  }

  gamepad(axes: GamepadAxes | null): void {
    this.pad = axes;
    if (axes && (deadzone(axes.leftX) || deadzone(axes.leftY) || deadzone(axes.rightX))) {
      this.mode = "gamepad";
    }
  }

  /** Velocity target, or null when no input is active. */
  target(): VelocityTarget | null {
    const out: VelocityTarget = { vx: 0, vy: 0, wz: 0 };
    let active = false;
    for (const code of this.held) {
      const effect = KEY_EFFECTS[code];
      out.vx += effect.vx ?? 0;
      out.vy += effect.vy ?? 0;
      out.wz += effect.wz ?? 0;
      active = true;
    }
    if (this.pad) {
      const lx = deadzone(this.pad.leftX);
      const ly = deadzone(this.pad.leftY);
      const rx = deadzone(this.pad.rightX);
      if (lx || ly || rx) {
        out.vx += -ly * MAX_LINEAR; // stick forward (negative y) drives +x
        out.vy += -lx * MAX_LINEAR; // stick right drives -y (robot right)
        out.wz += -rx * MAX_ANGULAR;
        active = true;
      }
    }
    if (!active) return null;
    out.vx = Math.max(-MAX_LINEAR, Math.min(MAX_LINEAR, out.vx));
    out.vy = Math.max(-MAX_LINEAR, Math.min(MAX_LINEAR, out.vy));
    out.wz = Math.max(-MAX_ANGULAR, Math.min(MAX_ANGULAR, out.wz));
    return out;
  }
}
