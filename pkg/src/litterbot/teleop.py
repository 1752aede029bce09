"""Websocket teleoperation endpoint.

One asyncio loop owns the simulation; clients exchange JSON text frames.
Incoming: {"type": "cmd_vel", "vx", "vy", "wz"}, {"type": "trigger",
"action": grasp|unload|rest|reset}, {"type": "set_scene", "scene": name}.
Outgoing: {"type": "snapshot", ...} at the snapshot rate, and
{"type": "error", "detail": ...} replies to malformed frames (the session
stays alive). The last cmd_vel wins; a command-silence watchdog zeroes the
velocity after 0.5 s.
"""

from __future__ import annotations

import asyncio
import base64
import json
import logging
import math

import numpy as np
import websockets

from .simulator import SceneConfig, SimWorld, sample_scene

log = logging.getLogger(__name__)

WATCHDOG_S = 0.5
SNAPSHOT_HZ = 20.0
TRIGGER_ACTIONS = ("grasp", "unload", "rest", "reset")


class TeleopServer:
    """Wires a SimWorld to websocket sessions.

    The sim ticks on a wall-paced loop but all contract timing (watchdog,
    velocity integration) runs on sim time, so tests measuring against
    snapshot timestamps are immune to scheduler jitter.
    """

    def __init__(self, world: SimWorld, stream_depth: bool = False, scene_dir=None):
        self.world = world
        self.stream_depth = stream_depth
        self.scene_dir = scene_dir
        self.cmd = np.zeros(3)
        self.last_cmd_time = -math.inf  # sim time of the last cmd_vel
        self.pending_trigger = None
        self.clients = set()
        self._depth_b64 = None

    # ------------------------------------------------------------- commands
    def apply_message(self, raw: str):
        """Parse and stage one client message; returns an error dict or None."""
        try:
            msg = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            return {"type": "error", "detail": f"not valid JSON: {e}"}
        if not isinstance(msg, dict):
            return {"type": "error", "detail": "message must be a JSON object"}
        kind = msg.get("type")
        if kind == "cmd_vel":
            try:
                vals = [float(msg.get(k, 0.0)) for k in ("vx", "vy", "wz")]
            except (TypeError, ValueError):
                return {"type": "error", "detail": "cmd_vel fields must be numbers"}
            if not all(math.isfinite(v) for v in vals):
                return {"type": "error", "detail": "cmd_vel fields must be finite"}
            self.cmd = np.array(vals)
            self.last_cmd_time = self.world.robot.t
            return None
        if kind == "trigger":
            action = msg.get("action")
            if action not in TRIGGER_ACTIONS:
                return {"type": "error", "detail": f"unknown trigger action {action!r}"}
            self.pending_trigger = action
            return None
        if kind == "set_scene":
            return self.set_scene(msg.get("scene"))
        return {"type": "error", "detail": f"unknown message type {kind!r}"}

    def set_scene(self, name):
        scene = None
        if isinstance(name, str) and name:
            if name.isdigit():
                scene = sample_scene(int(name))
            elif self.scene_dir is not None:
                path = self.scene_dir / f"{name}.json"
                if path.is_file():
                    scene = SceneConfig.load(path)
        if scene is None:
            return {"type": "error", "detail": f"unknown scene {name!r}"}
        self.world = SimWorld(scene, self.world.model, self.world.library,
                              self.world.control_dt)
        self.cmd = np.zeros(3)
        self.last_cmd_time = -math.inf
        return None

    # ----------------------------------------------------------------- loop
    def effective_cmd(self) -> np.ndarray:
        if self.world.robot.t - self.last_cmd_time > WATCHDOG_S:
            return np.zeros(3)
        return self.cmd

    def tick(self):
        trigger = self.pending_trigger
        self.pending_trigger = None
        if trigger == "reset":
            self.cmd = np.zeros(3)
            self.last_cmd_time = -math.inf
        self.world.tick(tuple(self.effective_cmd()), trigger)

    def snapshot(self) -> dict:
        snap = self.world.snapshot()
        snap["type"] = "snapshot"
        snap["commanded_velocity"] = [float(v) for v in self.effective_cmd()]
        if self.stream_depth:
            if self._depth_b64 is None or self.world.tick_count % 50 == 0:
                depth, _ = self.world.render()
                self._depth_b64 = {
                    "width": int(depth.shape[1]),
                    "height": int(depth.shape[0]),
                    "encoding": "f32le",
                    "data": base64.b64encode(depth.astype("<f4").tobytes()).decode("ascii"),
                }
            snap["depth"] = self._depth_b64
        return snap

    async def _session(self, ws):
        self.clients.add(ws)
        log.info("client connected (%d active)", len(self.clients))
        try:
            async for raw in ws:
                if isinstance(raw, bytes):
                    try:
                        raw = raw.decode("utf-8")
                    except UnicodeDecodeError:
                        await ws.send(json.dumps({"type": "error", "detail": "binary frame"}))
                        continue
                err = self.apply_message(raw)
                if err is not None:
                    await ws.send(json.dumps(err))
        except websockets.ConnectionClosed:
            pass
        finally:
            self.clients.discard(ws)
            log.info("client disconnected (%d active)", len(self.clients))

    async def _broadcast(self, payload: str):
        stale = []
        for ws in self.clients:
            try:
                await ws.send(payload)
            except websockets.ConnectionClosed:
                stale.append(ws)
        for ws in stale:
            self.clients.discard(ws)

    async def run(self, host: str, port: int, ready: asyncio.Event = None,
                  announce: bool = False):
        """Serve until cancelled."""
        ticks_per_snapshot = max(1, int(round(1.0 / (SNAPSHOT_HZ * self.world.control_dt))))
        async with websockets.serve(self._session, host, port) as server:
            self.server = server
            if announce:
                bound = server.sockets[0].getsockname()
                print(json.dumps({"type": "listening", "host": bound[0], "port": bound[1]}),
                      flush=True)
            if ready is not None:
                ready.set()
            loop = asyncio.get_running_loop()
            next_tick = loop.time()
            counter = 0
            while True:
                self.tick()
                counter += 1
                if counter % ticks_per_snapshot == 0:
                    await self._broadcast(json.dumps(self.snapshot()))
                next_tick += self.world.control_dt
                delay = next_tick - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    # fell behind wall clock; yield and rebase
                    next_tick = loop.time()
                    await asyncio.sleep(0)


def serve(scene: SceneConfig, host: str = "127.0.0.1", port: int = 8765,
          stream_depth: bool = False, scene_dir=None) -> None:
    """Run the teleop endpoint until interrupted."""
    world = SimWorld(scene)
    server = TeleopServer(world, stream_depth=stream_depth, scene_dir=scene_dir)
    log.info("teleop service on ws://%s:%d", host, port)
    try:
        asyncio.run(server.run(host, port, announce=True))
    except KeyboardInterrupt:
        log.info("teleop service stopped")
