import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { validateCommand } from "../src/protocol";
import { SocketLike, TeleopSession } from "../src/session";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }
  close(): void {
    this.closed = true;
    this.onclose?.();
  }
  open(): void {
    this.onopen?.();
  }
  receive(obj: unknown): void {
    this.onmessage?.({ data: JSON.stringify(obj) });
  }
}

function snapshotFrame(overrides: Record<string, unknown> = {}) {
  return {
    type: "snapshot",
    t: 0.0,
    base: { x: 0, y: 0, yaw: 0 },
    h: 0.35,
    theta: 0,
    arm: [0, 0, 0, 0, 0, 0],
    gripper: 1,
    phase: "Rest",
    estimate: null,
    bottles: [],
    bin: { basket_deg: 0, door_deg: 0, lift_m: 0 },
    loads: 0,
    commanded_velocity: [0, 0, 0],
    ...overrides,
  };
}

const fakeTimers = {
  setInterval: (fn: () => void, ms: number) => setInterval(fn, ms) as unknown as number,
  clearInterval: (id: number) => clearInterval(id),
  setTimeout: (fn: () => void, ms: number) => setTimeout(fn, ms) as unknown as number,
  clearTimeout: (id: number) => clearTimeout(id),
};

describe("command pacing", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  function connected(inputSource: () => { vx: number; vy: number; wz: number } | null) {
    const sockets: FakeSocket[] = [];
    const recorded: string[] = [];
    const session = new TeleopSession(
      () => {
        const s = new FakeSocket();
        sockets.push(s);
        return s;
      },
      { onSend: (frame) => recorded.push(frame) },
      fakeTimers,
    );
    session.inputSource = inputSource;
    session.connect("ws://test");
    sockets[0].open();
    return { session, sockets, recorded };
  }

  it("streams cmd_vel at 10 Hz while input is active", () => {
    const { sockets } = connected(() => ({ vx: 0.3, vy: 0, wz: 0 }));
    vi.advanceTimersByTime(1000);
    expect(sockets[0].sent.length).toBe(10);
    const frame = JSON.parse(sockets[0].sent[0]);
    expect(frame).toEqual({ type: "cmd_vel", vx: 0.3, vy: 0, wz: 0 });
  });

  it("sends nothing while input is released", () => {
    let active = true;
    const { sockets } = connected(() => (active ? { vx: 0.2, vy: 0, wz: 0 } : null));
    vi.advanceTimersByTime(500);
    const mid = sockets[0].sent.length;
    expect(mid).toBeGreaterThan(0);
    active = false;
    vi.advanceTimersByTime(1000);
    expect(sockets[0].sent.length).toBe(mid);
  });

  it("every recorded frame validates against the wire schema", () => {
    const { session, recorded } = connected(() => ({ vx: 0.25, vy: -0.1, wz: 0.4 }));
    vi.advanceTimersByTime(700);
    session.sendTrigger("unload");
    session.sendTrigger("reset");
    session.setScene("4");
    expect(recorded.length).toBeGreaterThan(8);
    for (const frame of recorded) {
      expect(validateCommand(JSON.parse(frame))).toBeNull();
    }
  });

  it("triggers are refused while disconnected", () => {
    const session = new TeleopSession(() => new FakeSocket(), {}, fakeTimers);
    expect(session.sendTrigger("unload")).toBe(false);
  });
});

describe("snapshot-driven state", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("phase comes from snapshots only, never from sent triggers", () => {
    const socket = new FakeSocket();
    const phases: string[] = [];
    const session = new TeleopSession(
      () => socket,
      { onSnapshot: (s) => phases.push(s.phase) },
      fakeTimers,
    );
    session.connect("ws://test");
    socket.open();
    socket.receive(snapshotFrame({ phase: "Rest" }));
    expect(session.latest!.phase).toBe("Rest");

    session.sendTrigger("unload");
    // no optimistic change: still what the last snapshot said
    expect(session.latest!.phase).toBe("Rest");

    for (const phase of ["UnloadReach", "UnloadGrip", "UnloadOpen", "Rest"]) {
      socket.receive(snapshotFrame({ phase }));
      expect(session.latest!.phase).toBe(phase);
    }
    expect(phases).toEqual(["Rest", "UnloadReach", "UnloadGrip", "UnloadOpen", "Rest"]);
  });

  it("ignores error frames and junk without dying", () => {
    const socket = new FakeSocket();
    const session = new TeleopSession(() => socket, {}, fakeTimers);
    session.connect("ws://test");
    socket.open();
    socket.receive({ type: "error", detail: "whoops" });
    socket.onmessage?.({ data: "???" });
    expect(session.latest).toBeNull();
    socket.receive(snapshotFrame());
    expect(session.latest).not.toBeNull();
  });
});

describe("reconnect behavior", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("retries with exponential backoff and sends nothing meanwhile", () => {
    const sockets: FakeSocket[] = [];
    const statuses: string[] = [];
    const session = new TeleopSession(
      () => {
        const s = new FakeSocket();
        sockets.push(s);
        return s;
      },
      { onStatus: (s) => statuses.push(s) },
      fakeTimers,
    );
    session.inputSource = () => ({ vx: 0.3, vy: 0, wz: 0 });
    session.connect("ws://test");
    sockets[0].open();
    sockets[0].onclose?.(); // drop

    expect(session.status).toBe("disconnected");
    vi.advanceTimersByTime(999);
    expect(sockets.length).toBe(1);
    vi.advanceTimersByTime(2);
    expect(sockets.length).toBe(2); // first retry after ~1 s

    sockets[1].onerror?.(); // fail again -> next delay doubles
    vi.advanceTimersByTime(1999);
    expect(sockets.length).toBe(2);
    vi.advanceTimersByTime(2);
    expect(sockets.length).toBe(3);

    // while disconnected the command loop is stopped
    vi.advanceTimersByTime(500);
    expect(sockets[2].sent.length).toBe(0);

    sockets[2].open();
    expect(session.status).toBe("connected");
    vi.advanceTimersByTime(300);
    expect(sockets[2].sent.length).toBeGreaterThan(0);
  });

  it("disconnect() stops retrying", () => {
    const sockets: FakeSocket[] = [];
    const session = new TeleopSession(
      () => {
        const s = new FakeSocket();
        sockets.push(s);
        return s;
      },
      {},
      fakeTimers,
    );
    session.connect("ws://test");
    sockets[0].onerror?.();
    session.disconnect();
    vi.advanceTimersByTime(60_000);
    expect(sockets.length).toBe(1);
  });
});
