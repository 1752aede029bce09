/** Console wiring: DOM, input listeners, session, and the render loop. */

import { InputState } from "./input";
import { Snapshot, TRIGGER_ACTIONS, TriggerAction } from "./protocol";
import { drawGauge, drawScene, phaseColor, Viewport } from "./render";
import { TeleopSession } from "./session";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const canvas = $("scene") as unknown as HTMLCanvasElement;
const gauges = $("gauges") as unknown as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const gctx = gauges.getContext("2d")!;

const urlInput = $("url") as unknown as HTMLInputElement;
const connectBtn = $("connect") as unknown as HTMLButtonElement;
const banner = $("banner");
const phaseBadge = $("phase");
const readout = $("readout");

const input = new InputState();
const session = new TeleopSession(
  (url) => new WebSocket(url) as unknown as import("./session").SocketLike,
  {
    onStatus: (status) => {
      banner.textContent =
        status === "connected"
          ? "connected"
          : status === "connecting"
            ? "connecting…"
            : "disconnected — retrying";
      banner.className = status;
      for (const action of TRIGGER_ACTIONS) {
        ($(`btn-${action}`) as unknown as HTMLButtonElement).disabled = status !== "connected";
      }
      connectBtn.textContent = status === "disconnected" ? "connect" : "disconnect";
    },
  },
);
session.inputSource = () => input.target();

const params = new URLSearchParams(window.location.search);
urlInput.value = params.get("ws") ?? `ws://${window.location.hostname || "127.0.0.1"}:8765`;

connectBtn.addEventListener("click", () => {
  if (session.status === "disconnected") {
    session.connect(urlInput.value);
  } else {
    session.disconnect();
  }
});

for (const action of TRIGGER_ACTIONS) {
  $(`btn-${action}`).addEventListener("click", () => session.sendTrigger(action as TriggerAction));
}

window.addEventListener("keydown", (ev) => {
  if (ev.target === urlInput) return;
  input.keyDown(ev.code);
});
window.addEventListener("keyup", (ev) => input.keyUp(ev.code));
window.addEventListener("blur", () => input.releaseAll());

function pollGamepad(): void {
  const pads = navigator.getGamepads ? navigator.getGamepads() : [];
  const pad = pads && pads[0];
  input.gamepad(
    pad
      ? { leftX: pad.axes[0] ?? 0, leftY: pad.axes[1] ?? 0, rightX: pad.axes[2] ?? 0 }
      : null,
  );
}

function describe(snap: Snapshot | null): string {
  if (!snap) return "no snapshot yet";
  const est = snap.estimate;
  const estLine = est && est.valid
    ? `bottle est: (${est.center.map((v) => v.toFixed(3)).join(", ")}) ` +
      `axis (${est.axis.map((v) => v.toFixed(2)).join(", ")})`
    : "bottle est: none";
  return (
    `t=${snap.t.toFixed(2)}s  base=(${snap.base.x.toFixed(2)}, ${snap.base.y.toFixed(2)}, ` +
    `${((snap.base.yaw * 180) / Math.PI).toFixed(0)}°)  loads=${snap.loads}\n` +
    `${estLine}\n` +
    `bin: basket ${snap.bin.basket_deg.toFixed(1)}°, door ${snap.bin.door_deg.toFixed(1)}°  ` +
    `gripper ${(snap.gripper * 100).toFixed(0)}%`
  );
}

function frame(): void {
  pollGamepad();
  const snap = session.latest;
  const view: Viewport = {
    width: canvas.width,
    height: canvas.height,
    metersAcross: 3.0,
    centerX: snap ? snap.base.x : 0,
    centerY: snap ? snap.base.y : 0,
  };
  drawScene(ctx, snap, view);

  gctx.fillStyle = "#10141a";
  gctx.fillRect(0, 0, gauges.width, gauges.height);
  if (snap) {
    drawGauge(gctx, 18, 24, 150, 0.25, 0.45, snap.h, "h");
    drawGauge(gctx, 62, 24, 150, -0.4, 0.4, snap.theta, "θ");
  }

  phaseBadge.textContent = snap ? snap.phase : "—";
  phaseBadge.style.background = phaseColor(snap ? snap.phase : "");
  readout.textContent = describe(snap);
  requestAnimationFrame(frame);
}

requestAnimationFrame(frame);
