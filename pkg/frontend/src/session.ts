/**
 * Websocket session: connects, forwards snapshots, and streams command
 * frames at a fixed 10 Hz while an input source is active. The session
 * never invents state: the phase badge and everything else rendered come
 * from received snapshots only. Reconnects with exponential backoff.
 */

import {
  Command,
  Snapshot,
  TriggerAction,
  parseSnapshot,
  validateCommand,
} from "./protocol";
import { VelocityTarget } from "./input";

export const COMMAND_HZ = 10;
const BACKOFF_START_MS = 1000;
const BACKOFF_MAX_MS = 10_000;

/** The subset of WebSocket the session needs; tests inject fakes. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;
export type Status = "disconnected" | "connecting" | "connected";

export interface SessionHooks {
  onSnapshot?: (snap: Snapshot) => void;
  onStatus?: (status: Status) => void;
  onProtocolError?: (detail: string) => void;
  /** Test hook: observe every frame the session puts on the wire. */
  onSend?: (frame: string) => void;
}

export interface Timers {
  setInterval(fn: () => void, ms: number): number;
  clearInterval(id: number): void;
  setTimeout(fn: () => void, ms: number): number;
  clearTimeout(id: number): void;
}

const realTimers: Timers = {
  setInterval: (fn, ms) => setInterval(fn, ms) as unknown as number,
  clearInterval: (id) => clearInterval(id),
  setTimeout: (fn, ms) => setTimeout(fn, ms) as unknown as number,
  clearTimeout: (id) => clearTimeout(id),
};

export class TeleopSession {
  status: Status = "disconnected";
  latest: Snapshot | null = null;
  inputSource: (() => VelocityTarget | null) | null = null;

  private socket: SocketLike | null = null;
  private url = "";
  private wantConnected = false;
  private backoffMs = BACKOFF_START_MS;
  private loopId: number | null = null;
  private retryId: number | null = null;

  constructor(
    private makeSocket: SocketFactory,
    private hooks: SessionHooks = {},
    private timers: Timers = realTimers,
  ) {}

  connect(url: string): void {
    this.url = url;
    this.wantConnected = true;
    this.backoffMs = BACKOFF_START_MS;
    this.open();
  }

  disconnect(): void {
    this.wantConnected = false;
    if (this.retryId !== null) this.timers.clearTimeout(this.retryId);
    this.retryId = null;
    this.stopLoop();
    this.socket?.close();
    this.socket = null;
    this.setStatus("disconnected");
  }

  private open(): void {
    this.setStatus("connecting");
    let socket: SocketLike;
    try {
      socket = this.makeSocket(this.url);
    } catch {
      this.scheduleRetry();
      return;
    }
    this.socket = socket;
    socket.onopen = () => {
      this.backoffMs = BACKOFF_START_MS;
      this.setStatus("connected");
      this.startLoop();
    };
    socket.onmessage = (ev) => {
      const text = typeof ev.data === "string" ? ev.data : String(ev.data);
      const snap = parseSnapshot(text);
      if (snap) {
        this.latest = snap;
        this.hooks.onSnapshot?.(snap);
      }
    };
    const drop = () => {
      if (this.socket !== socket) return;
      this.socket = null;
      this.stopLoop();
      this.setStatus("disconnected");
      this.scheduleRetry();
    };
    socket.onclose = drop;
    socket.onerror = drop;
  }

  private scheduleRetry(): void {
    if (!this.wantConnected || this.retryId !== null) return;
    const delay = this.backoffMs;
    this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_MAX_MS);
    this.retryId = this.timers.setTimeout(() => {
      this.retryId = null;
      if (this.wantConnected) this.open();
    }, delay);
  }

  private startLoop(): void {
    if (this.loopId !== null) return;
    this.loopId = this.timers.setInterval(() => this.pumpCommand(), 1000 / COMMAND_HZ);
  }

  private stopLoop(): void {
    if (this.loopId !== null) this.timers.clearInterval(this.loopId);
    this.loopId = null;
  }

  /** One command-loop step: send cmd_vel only while input is active. */
  pumpCommand(): void {
    if (this.status !== "connected" || !this.inputSource) return;
    const target = this.inputSource();
    if (target === null) return; // released input: silence lets the watchdog halt
    this.sendCommand({ type: "cmd_vel", vx: target.vx, vy: target.vy, wz: target.wz });
  }

  sendTrigger(action: TriggerAction): boolean {
    if (this.status !== "connected") return false;
    this.sendCommand({ type: "trigger", action });
    return true;
  }

  setScene(scene: string): boolean {
    if (this.status !== "connected") return false;
    this.sendCommand({ type: "set_scene", scene });
    return true;
  }

  private sendCommand(cmd: Command): void {
    const problem = validateCommand(cmd);
    if (problem !== null) {
      this.hooks.onProtocolError?.(problem);
      return;
    }
    const frame = JSON.stringify(cmd);
    this.hooks.onSend?.(frame);
    this.socket?.send(frame);
  }

  private setStatus(status: Status): void {
    if (this.status === status) return;
    this.status = status;
    this.hooks.onStatus?.(status);
  }
}
