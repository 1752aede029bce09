"""Desk-scale kinematic world.

The locomotion policy is abstracted as perfect velocity/pose tracking with
rate limits; the world is a flat ground plane plus cylinder bottles and a
bin. Depth frames are ray-cast, the perception stack runs on ground-truth
masks, and the mission machine sequences primitives against the IK layer.
One SimWorld instance owns all mutable state; the headless episode runner
and the teleop service both drive it through tick().
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import defaults
from .defaults import default_model, ready_q
from .geometry import Intrinsics, Pose
from .ik import IKProblem, Task, ik_step, join_base_refs, split_base_refs
from .kinematics import ChainModel, forward_kinematics
from .mission import (
    IkTrack,
    Keypoint,
    MissionEvents,
    MissionPhase,
    Primitive,
    PrimitiveLibrary,
    bin_linkage,
    default_primitive_library,
    primitive_waypoints,
    step_mission,
    HANDLE_TRAVEL_M,
)
from .perception import (
    BASE_FRAME,
    BottleEstimate,
    DegenerateApproach,
    StabilizerState,
    estimate_axis_3d,
    grasp_pose_from_estimate,
    refine_mask,
    stabilize,
    to_base_frame,
)

# command clamps and tracking rates (safety bounds, not hardware data)
MAX_LINEAR_CMD = 1.0  # m/s
MAX_ANGULAR_CMD = 1.5  # rad/s
H_RATE = 0.2  # m/s
THETA_RATE = 1.0  # rad/s
GRIPPER_RATE = 3.0  # opening fraction per second

RENDER_MAX_RANGE = 30.0  # beyond this a ray counts as a miss

GRASP_POS_TOL = 0.02  # m
GRASP_ALIGN_DEG = 10.0  # closing axis perpendicularity tolerance
DETECTION_RANGE = 0.75  # m, estimates farther from the base are ignored
# estimates are anchored in the world frame (bottles are static), so they
# stay actionable for a while after the camera loses the silhouette, e.g.
# when the grasp itself pitches the trunk away from the object
DETECTION_STALE_S = 2.0

CONTROL_DT = 0.01
PERCEPTION_PERIOD = 0.1

# the grasp IK is declared converged well inside the grasp gates (0.02 m,
# 10 deg); millimeter-level pose tracking is not needed to close the gripper
SIM_IK_TOL = 5e-3


@dataclass
class BottleSpec:
    center: np.ndarray  # world, m
    axis: np.ndarray  # unit
    radius: float
    half_length: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        n = np.linalg.norm(axis)
        if n < 1e-9:
            raise ValueError("bottle axis must be nonzero")
        self.axis = axis / n
        if self.radius <= 0 or self.half_length <= 0:
            raise ValueError("bottle radius and half-length must be positive")

    def to_dict(self) -> dict:
        return {
            "center": [float(x) for x in self.center],
            "axis": [float(x) for x in self.axis],
            "radius": self.radius,
            "half_length": self.half_length,
        }

    @staticmethod
    def from_dict(d: dict) -> "BottleSpec":
        return BottleSpec(d["center"], d["axis"], float(d["radius"]), float(d["half_length"]))


@dataclass
class SceneConfig:
    bottles: list
    ground_z: float = 0.0
    bin_pose: Pose = field(default_factory=Pose.identity)
    intrinsics: Intrinsics = None
    camera_mount: Pose = None  # None: use the model's mount
    seed: int = 0

    def __post_init__(self):
        self.bottles = [b if isinstance(b, BottleSpec) else BottleSpec.from_dict(b) for b in self.bottles]
        if self.intrinsics is None:
            self.intrinsics = defaults.default_intrinsics()

    def to_dict(self) -> dict:
        d = {
            "ground_z": self.ground_z,
            "bottles": [b.to_dict() for b in self.bottles],
            "bin_pose": self.bin_pose.to_dict(),
            "intrinsics": self.intrinsics.to_dict(),
            "seed": self.seed,
        }
        if self.camera_mount is not None:
            d["camera_mount"] = self.camera_mount.to_dict()
        return d

    @staticmethod
    def from_dict(d: dict) -> "SceneConfig":
        return SceneConfig(
            bottles=[BottleSpec.from_dict(b) for b in d.get("bottles", [])],
            ground_z=float(d.get("ground_z", 0.0)),
            bin_pose=Pose.from_dict(d["bin_pose"]) if "bin_pose" in d else Pose.identity(),
            intrinsics=Intrinsics.from_dict(d["intrinsics"]) if "intrinsics" in d else None,
            camera_mount=Pose.from_dict(d["camera_mount"]) if "camera_mount" in d else None,
            seed=int(d.get("seed", 0)),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    @staticmethod
    def load(path) -> "SceneConfig":
        with open(path, "r", encoding="utf-8") as f:
            return SceneConfig.from_dict(json.load(f))


@dataclass
class RobotState:
    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0
    h: float = defaults.H_NOMINAL
    theta: float = 0.0
    arm: np.ndarray = None
    gripper: float = 1.0
    attached: int = None  # bottle index or None
    t: float = 0.0

    def __post_init__(self):
        if self.arm is None:
            self.arm = defaults.rest_arm()
        self.arm = np.asarray(self.arm, dtype=float).reshape(6)

    def planar_pose(self) -> Pose:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return Pose(rz, np.array([self.x, self.y, 0.0]))

    def q(self) -> np.ndarray:
        return join_base_refs(self.h, self.theta, self.arm)


def _toward(current, target, max_step):
    return current + np.clip(target - current, -max_step, max_step)


def step_sim(state: RobotState, cmd, refs, arm_cmd, dt: float, model: ChainModel = None) -> RobotState:
    """Integrate one control step with perfect velocity tracking.

    cmd = (vx, vy, wz) body-frame velocities (clamped to safety bounds),
    refs = (h_des, theta_des), arm_cmd = (6 joint targets, gripper target).
    """
    if not 0.0 < dt <= 0.1:
        raise ValueError(f"dt must be in (0, 0.1], got {dt}")
    model = model or default_model()
    vx = float(np.clip(cmd[0], -MAX_LINEAR_CMD, MAX_LINEAR_CMD))
    vy = float(np.clip(cmd[1], -MAX_LINEAR_CMD, MAX_LINEAR_CMD))
    wz = float(np.clip(cmd[2], -MAX_ANGULAR_CMD, MAX_ANGULAR_CMD))

    c, s = math.cos(state.yaw), math.sin(state.yaw)
    x = state.x + (vx * c - vy * s) * dt
    y = state.y + (vx * s + vy * c) * dt
    yaw = state.yaw + wz * dt

    h_des = float(np.clip(refs[0], model.lower[0], model.upper[0]))
    theta_des = float(np.clip(refs[1], model.lower[1], model.upper[1]))
    h = float(_toward(np.array(state.h), np.array(h_des), H_RATE * dt))
    theta = float(_toward(np.array(state.theta), np.array(theta_des), THETA_RATE * dt))

    arm_target = np.clip(np.asarray(arm_cmd[0], dtype=float), model.lower[2:], model.upper[2:])
    arm = _toward(state.arm, arm_target, model.velocity_limits[2:] * dt)
    gripper = float(_toward(np.array(state.gripper), np.array(float(arm_cmd[1])), GRIPPER_RATE * dt))

    return RobotState(
        x=x, y=y, yaw=yaw, h=h, theta=theta, arm=arm,
        gripper=gripper, attached=state.attached, t=state.t + dt,
    )


def camera_pose_world(state: RobotState, model: ChainModel, mount: Pose = None) -> Pose:
    q = state.q()
    if mount is None:
        cam_in_base = forward_kinematics(model, q, "camera")
    else:
        idx, _ = model.frame_index("camera")
        from .kinematics import joint_frames

        cam_in_base = joint_frames(model, q)[idx].compose(mount)
    return state.planar_pose().compose(cam_in_base)


def _ray_grid(k: Intrinsics) -> np.ndarray:
    """Unnormalized camera-frame ray directions through integer pixel centers;
    the hit parameter t along these rays equals the pinhole depth Z."""
    us, vs = np.meshgrid(np.arange(k.width), np.arange(k.height))
    return np.stack(
        [(us - k.cx) / k.fx, (vs - k.cy) / k.fy, np.ones_like(us, dtype=float)], axis=-1
    ).reshape(-1, 3)


_GRID_CACHE = {}


def _cached_ray_grid(k: Intrinsics) -> np.ndarray:
    key = (k.fx, k.fy, k.cx, k.cy, k.width, k.height)
    if key not in _GRID_CACHE:
        _GRID_CACHE[key] = _ray_grid(k)
    return _GRID_CACHE[key]


def _ray_cylinder(origin, dirs, bottle: BottleSpec):
    """Smallest positive hit parameter per ray against a capped cylinder,
    inf on miss."""
    a = bottle.axis
    m = origin - bottle.center
    md = float(m @ a)
    dd = dirs @ a
    m_perp = m - md * a
    d_perp = dirs - dd[:, None] * a

    t_best = np.full(dirs.shape[0], np.inf)

    # lateral surface
    A = np.einsum("ij,ij->i", d_perp, d_perp)
    B = 2.0 * (d_perp @ m_perp)
    C = float(m_perp @ m_perp) - bottle.radius**2
    disc = B * B - 4 * A * C
    ok = (disc >= 0) & (A > 1e-16)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        for t in ((-B - sq) / (2 * A), (-B + sq) / (2 * A)):
            axial = md + t * dd
            hit = ok & (t > 1e-9) & (np.abs(axial) <= bottle.half_length)
            t_best = np.where(hit & (t < t_best), t, t_best)

    # end caps
    with np.errstate(divide="ignore", invalid="ignore"):
        for cap in (-bottle.half_length, bottle.half_length):
            t = (cap - md) / dd
            pt_perp = m_perp + t[:, None] * d_perp
            r2 = np.einsum("ij,ij->i", pt_perp, pt_perp)
            hit = (np.abs(dd) > 1e-16) & (t > 1e-9) & (r2 <= bottle.radius**2)
            t_best = np.where(hit & (t < t_best), t, t_best)

    return t_best


def render_scene(k: Intrinsics, camera_pose: Pose, bottles, ground_z: float = None, skip=()):
    """Ray-cast a set of capped cylinders (and optionally a ground plane).

    Returns (depth, masks): depth is (H, W) float32 with 0 for misses,
    masks maps bottle index -> (H, W) bool of pixels whose nearest hit is
    that bottle. Indices in `skip` are not rendered.
    """
    dirs = _cached_ray_grid(k) @ camera_pose.rotation.T
    origin = camera_pose.translation

    layers = []
    owners = []
    for i, b in enumerate(bottles):
        if i in skip:
            continue
        layers.append(_ray_cylinder(origin, dirs, b))
        owners.append(i)

    if ground_z is not None:
        dz = dirs[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t_ground = (ground_z - origin[2]) / dz
        t_ground = np.where((np.abs(dz) > 1e-16) & (t_ground > 1e-9), t_ground, np.inf)
        layers.append(t_ground)
        owners.append(-1)

    if not layers:
        depth = np.zeros((k.height, k.width), dtype=np.float32)
        return depth, {}

    stack = np.stack(layers, axis=0)
    best = np.argmin(stack, axis=0)
    t = stack[best, np.arange(stack.shape[1])]
    valid = np.isfinite(t) & (t <= RENDER_MAX_RANGE)

    depth = np.where(valid, t, 0.0).astype(np.float32).reshape(k.height, k.width)
    masks = {}
    for layer_idx, owner in enumerate(owners):
        if owner < 0:
            continue
        masks[owner] = (valid & (best == layer_idx)).reshape(k.height, k.width)
    return depth, masks


def render_depth(scene: SceneConfig, state: RobotState, model: ChainModel = None,
                 bottles=None, skip=()):
    """Depth + ground-truth masks from the robot's head camera.

    `bottles` overrides the scene's bottle list (the world passes current
    poses); indices in `skip` are not rendered.
    """
    model = model or default_model()
    cam = camera_pose_world(state, model, scene.camera_mount)
    specs = scene.bottles if bottles is None else bottles
    return render_scene(scene.intrinsics, cam, specs, scene.ground_z, skip)


def ee_pose_world(state: RobotState, model: ChainModel) -> Pose:
    return state.planar_pose().compose(forward_kinematics(model, state.q(), "end_effector"))


def check_grasp(state: RobotState, bottle: BottleSpec, model: ChainModel = None) -> bool:
    """Grasp succeeds when the end-effector sits on the bottle center and the
    closing axis (gripper +Y) is perpendicular to the bottle axis within
    tolerance."""
    model = model or default_model()
    ee = ee_pose_world(state, model)
    if np.linalg.norm(ee.translation - bottle.center) > GRASP_POS_TOL:
        return False
    closing = ee.rotation[:, 1]
    return abs(float(closing @ bottle.axis)) <= math.sin(math.radians(GRASP_ALIGN_DEG))


@dataclass
class _BottleState:
    spec: BottleSpec
    attached: bool = False
    loaded: bool = False
    rel_center: np.ndarray = None  # grip-relative center while attached
    rel_axis: np.ndarray = None


class _Playback:
    """Replays a primitive's keypoints on a dwell clock."""

    def __init__(self, primitive: Primitive, keypoints):
        self.primitive = primitive
        self.keypoints = keypoints
        self.index = 0
        self.elapsed = 0.0
        self.done = False

    def current(self) -> Keypoint:
        return self.keypoints[self.index]

    def advance(self, dt: float) -> None:
        if self.done:
            return
        self.elapsed += dt
        while not self.done and self.elapsed >= self.current().dwell_s:
            self.elapsed -= self.current().dwell_s
            self.index += 1
            if self.index >= len(self.keypoints):
                self.index = len(self.keypoints) - 1
                self.done = True

    def progress(self) -> float:
        if self.done:
            return 1.0
        total = sum(kp.dwell_s for kp in self.keypoints)
        spent = sum(kp.dwell_s for kp in self.keypoints[: self.index]) + min(
            self.elapsed, self.current().dwell_s
        )
        return min(1.0, spent / total)


class SimWorld:
    """Authoritative simulation state; advance with tick()."""

    def __init__(
        self,
        scene: SceneConfig,
        model: ChainModel = None,
        library: PrimitiveLibrary = None,
        control_dt: float = CONTROL_DT,
        perception_period: float = PERCEPTION_PERIOD,
        beta: float = 0.4,
    ):
        self.scene = scene
        self.model = model or default_model()
        self.library = library or default_primitive_library()
        self.library.validate_against(self.model)
        self.control_dt = control_dt
        self.perception_every = max(1, int(round(perception_period / control_dt)))
        self.robot = RobotState()
        self.bottles = [_BottleState(BottleSpec(b.center.copy(), b.axis.copy(), b.radius, b.half_length))
                        for b in scene.bottles]
        self.phase = MissionPhase.REST
        self.stabilizer = StabilizerState(beta=beta)
        self.estimate_world = None  # latest estimate anchored in the world frame
        self.estimate_age = math.inf
        self.detected_bottle = None
        self.bin_lift = 0.0
        self.playback = None
        self.arm_target = self.robot.arm.copy()
        self.gripper_target = self.robot.gripper
        self.h_ref = self.robot.h
        self.theta_ref = self.robot.theta
        self.ik_residual = math.inf
        self.tick_count = 0
        self.events = []
        self.grasp_outcomes = []
        self.loads = 0
        self.unload_done = False
        self.bin_peak = (0.0, 0.0)
        self.posture_target = join_base_refs(defaults.H_NOMINAL, 0.0, defaults.rest_arm())

    # ------------------------------------------------------------------
    def log(self, kind: str, **detail):
        self.events.append({"t": round(self.robot.t, 6), "event": kind, **detail})

    def visible_bottles(self):
        return [i for i, b in enumerate(self.bottles) if not (b.attached or b.loaded)]

    def current_bottle_specs(self):
        return [b.spec for b in self.bottles]

    def render(self):
        skip = tuple(i for i, b in enumerate(self.bottles) if b.loaded)
        return render_depth(
            self.scene, self.robot, self.model,
            bottles=self.current_bottle_specs(), skip=skip,
        )

    # ------------------------------------------------------------------
    def _perceive(self):
        """Render a frame and refresh the world-frame bottle estimate."""
        candidates = self.visible_bottles()
        if not candidates:
            return
        depth, masks = self.render()
        cam_world = camera_pose_world(self.robot, self.model, self.scene.camera_mount)
        base_world = self.robot.planar_pose()
        cam_in_base = base_world.inverse().compose(cam_world)

        # nearest visible bottle with a usable silhouette plays the role of
        # the detector output
        best = None
        ee = ee_pose_world(self.robot, self.model).translation
        for i in sorted(candidates, key=lambda i: float(np.linalg.norm(self.bottles[i].spec.center - ee))):
            mask = refine_mask(masks.get(i, np.zeros_like(depth, dtype=bool)))
            if mask.sum() < 8:
                continue
            est = estimate_axis_3d(mask, depth, self.scene.intrinsics)
            if est.valid:
                best = (i, est)
                break
        if best is None:
            return
        i, est = best
        base_est = to_base_frame(est, cam_in_base)
        world_est = BottleEstimate(
            center=base_world.apply(base_est.center),
            axis=base_world.rotate(base_est.axis),
            frame="world",
        )
        self.estimate_world = stabilize(self.stabilizer, world_est)
        self.estimate_age = 0.0
        self.detected_bottle = i

    def current_estimate(self) -> BottleEstimate:
        """Latest estimate mapped into the current base frame, or None."""
        if self.estimate_world is None:
            return None
        inv = self.robot.planar_pose().inverse()
        return BottleEstimate(
            center=inv.apply(self.estimate_world.center),
            axis=inv.rotate(self.estimate_world.axis),
            frame=BASE_FRAME,
        )

    def _detection_valid(self) -> bool:
        est = self.current_estimate()
        return (
            est is not None
            and self.estimate_age < DETECTION_STALE_S
            and float(np.linalg.norm(est.center)) <= DETECTION_RANGE
        )

    def _start_playback(self, primitive: Primitive):
        self.playback = _Playback(primitive, primitive_waypoints(self.library, primitive))
        self._apply_keypoint()

    def _apply_keypoint(self):
        kp = self.playback.current()
        if kp.joints is not None:
            self.arm_target = kp.joints.copy()
        self.gripper_target = kp.gripper

    def _ik_tick(self):
        """One differential-IK step toward the current grasp target."""
        try:
            target = grasp_pose_from_estimate(self.current_estimate())
        except DegenerateApproach:
            self.ik_residual = math.inf
            return
        q = self.robot.q()
        problem = IKProblem(
            self.model,
            [
                Task.pose(target, gain=defaults.IK_EE_GAIN),
                Task.posture(self.posture_target, weight=defaults.IK_REG_WEIGHT, gain=defaults.IK_REG_GAIN),
            ],
            dt=self.control_dt,
        )
        qdot, norms = ik_step(problem, q)
        self.ik_residual = norms[0]
        q_cmd = np.clip(q + qdot * self.control_dt, problem.lower, problem.upper)
        self.h_ref, self.theta_ref, self.arm_target = split_base_refs(q_cmd)

    def _attach_nearest(self) -> bool:
        ee = ee_pose_world(self.robot, self.model)
        candidates = self.visible_bottles()
        if not candidates:
            self.grasp_outcomes.append(False)
            self.log("grasp", success=False, reason="no bottle")
            return False
        i = min(candidates, key=lambda i: float(np.linalg.norm(self.bottles[i].spec.center - ee.translation)))
        b = self.bottles[i]
        ok = check_grasp(self.robot, b.spec, self.model)
        self.grasp_outcomes.append(ok)
        detail = {}
        if self.estimate_world is not None:
            dot = abs(float(self.estimate_world.axis @ b.spec.axis))
            detail["axis_error_deg"] = round(math.degrees(math.acos(min(1.0, dot))), 3)
            detail["center_error_m"] = round(
                float(np.linalg.norm(self.estimate_world.center - b.spec.center)), 5
            )
        self.log("grasp", success=ok, bottle=i, **detail)
        if ok:
            b.attached = True
            b.rel_center = ee.inverse().apply(b.spec.center)
            b.rel_axis = ee.inverse().rotate(b.spec.axis)
            self.robot.attached = i
        return ok

    def _update_attached(self):
        if self.robot.attached is None:
            return
        b = self.bottles[self.robot.attached]
        ee = ee_pose_world(self.robot, self.model)
        b.spec.center = ee.apply(b.rel_center)
        b.spec.axis = ee.rotate(b.rel_axis)

    def _release_attached(self, into_bin: bool):
        if self.robot.attached is None:
            return
        b = self.bottles[self.robot.attached]
        b.attached = False
        if into_bin:
            b.loaded = True
            self.loads += 1
            self.log("load", bottle=self.robot.attached, total=self.loads)
        self.robot.attached = None

    # ------------------------------------------------------------------
    def tick(self, cmd_vel=(0.0, 0.0, 0.0), trigger: str = None):
        """Advance one control step; returns the new robot state."""
        if trigger == "reset":
            self.reset()
            return self.robot

    # perception at its own cadence, only in phases that use it
        if self.phase in (MissionPhase.REST, MissionPhase.GRASPING):
            if self.tick_count % self.perception_every == 0:
                self._perceive()

        events = MissionEvents(
            detection_valid=self._detection_valid(),
            ik_converged=self.ik_residual < SIM_IK_TOL,
            primitive_done=self.playback.done if self.playback else False,
            operator_trigger=trigger,
        )
        prev_phase = self.phase
        self.phase, command = step_mission(self.phase, events)
        if self.phase != prev_phase:
            self.log("phase", phase=self.phase.value)
            if prev_phase == MissionPhase.GRASPING and self.phase == MissionPhase.CLOSING:
                self._attach_nearest()
            if prev_phase == MissionPhase.LOADING and self.phase == MissionPhase.RELEASING:
                self._release_attached(into_bin=True)
            if self.phase == MissionPhase.REST:
                if prev_phase == MissionPhase.UNLOAD_OPEN:
                    self.unload_done = True
                self.bin_lift = 0.0  # gravity resets the mechanism
                self.ik_residual = math.inf
                self.estimate_world = None
                self.estimate_age = math.inf
                self.stabilizer.previous = None
                # rest posture includes the walking base pose
                self.h_ref = defaults.H_NOMINAL
                self.theta_ref = 0.0

        if isinstance(command, Primitive):
            self._start_playback(command)
        elif isinstance(command, IkTrack):
            self._ik_tick()

        if self.playback and not self.playback.done:
            self.playback.advance(self.control_dt)
            self._apply_keypoint()
            if self.playback.primitive == Primitive.BOX_OPENING:
                # the arm tops out before the dwell expires: full lift is
                # reached at 70% of the playback and held until gravity
                # resets the mechanism on the way back to rest
                ramp = min(1.0, self.playback.progress() / 0.7)
                self.bin_lift = HANDLE_TRAVEL_M * ramp
                angles = bin_linkage(self.bin_lift)
                if angles[0] > self.bin_peak[0]:
                    self.bin_peak = angles

        self.robot = step_sim(
            self.robot,
            cmd_vel,
            (self.h_ref, self.theta_ref),
            (self.arm_target, self.gripper_target),
            self.control_dt,
            self.model,
        )
        self._update_attached()
        self.estimate_age += self.control_dt
        self.tick_count += 1
        return self.robot

    def reset(self):
        self.__init__(
            self.scene, self.model, self.library,
            self.control_dt, self.perception_every * self.control_dt,
            self.stabilizer.beta,
        )

    def bin_angles(self) -> tuple[float, float]:
        return bin_linkage(self.bin_lift)

    def snapshot(self) -> dict:
        """Serializable world summary for the teleop stream."""
        basket, door = self.bin_angles()
        est = self.current_estimate()
        return {
            "t": self.robot.t,
            "base": {"x": self.robot.x, "y": self.robot.y, "yaw": self.robot.yaw},
            "h": self.robot.h,
            "theta": self.robot.theta,
            "arm": [float(v) for v in self.robot.arm],
            "gripper": self.robot.gripper,
            "phase": self.phase.value,
            "estimate": est.to_dict() if est is not None else None,
            "bottles": [
                {
                    **b.spec.to_dict(),
                    "attached": b.attached,
                    "loaded": b.loaded,
                }
                for b in self.bottles
            ],
            "bin": {"basket_deg": basket, "door_deg": door, "lift_m": self.bin_lift},
            "loads": self.loads,
            "events": self.events[-5:],
        }


class ScriptedPolicy:
    """Stationary collection script: wait for the grasp pipeline, then
    trigger the unload sequence once a load completes."""

    def __init__(self, unload_after_load: bool = True):
        self.unload_after_load = unload_after_load
        self._unload_sent = False

    def __call__(self, world: SimWorld):
        trigger = None
        if (
            self.unload_after_load
            and not self._unload_sent
            and world.loads > 0
            and world.phase == MissionPhase.REST
        ):
            trigger = "unload"
            self._unload_sent = True
        return (0.0, 0.0, 0.0), trigger

    def finished(self, world: SimWorld) -> bool:
        if not self.unload_after_load:
            return world.loads > 0 and world.phase == MissionPhase.REST
        return world.unload_done and world.phase == MissionPhase.REST


def run_episode(scene: SceneConfig, policy=None, max_time: float = 60.0,
                model: ChainModel = None, library: PrimitiveLibrary = None) -> dict:
    """Headless episode; deterministic for a given scene and policy."""
    world = SimWorld(scene, model=model, library=library)
    policy = policy or ScriptedPolicy()
    phase_entry = {MissionPhase.REST.value: 0.0}
    phase_time = {}
    last_phase = world.phase
    last_t = 0.0
    trajectory = []
    sample_every = max(1, int(round(0.1 / world.control_dt)))

    while world.robot.t < max_time:
        cmd_vel, trigger = policy(world)
        if world.tick_count % sample_every == 0:
            trajectory.append(
                {
                    "t": round(world.robot.t, 6),
                    "base": [world.robot.x, world.robot.y, world.robot.yaw],
                    "h": world.robot.h,
                    "theta": world.robot.theta,
                    "phase": world.phase.value,
                }
            )
        world.tick(cmd_vel, trigger)
        if world.phase != last_phase:
            phase_time[last_phase.value] = phase_time.get(last_phase.value, 0.0) + (world.robot.t - last_t)
            phase_entry.setdefault(world.phase.value, world.robot.t)
            last_phase = world.phase
            last_t = world.robot.t
        if policy.finished(world) if hasattr(policy, "finished") else False:
            break
    phase_time[last_phase.value] = phase_time.get(last_phase.value, 0.0) + (world.robot.t - last_t)

    grasp_times = [e["t"] for e in world.events if e["event"] == "grasp" and e.get("success")]
    basket, door = world.bin_peak if world.bin_peak != (0.0, 0.0) else world.bin_angles()
    return {
        "seed": scene.seed,
        "duration_s": round(world.robot.t, 6),
        "grasp_outcomes": world.grasp_outcomes,
        "loads": world.loads,
        "load_success": world.loads > 0,
        "unload_done": world.unload_done,
        "time_to_grasp_s": grasp_times[0] if grasp_times else None,
        "bin_peak_deg": [basket, door],
        "phase_times": {k: round(v, 6) for k, v in sorted(phase_time.items())},
        "events": world.events,
        "trajectory": trajectory,
        "timeout": world.robot.t >= max_time,
    }


def sample_scene(seed: int, intrinsics: Intrinsics = None) -> SceneConfig:
    """One bottle placed inside the grasp workspace, deterministic per seed."""
    rng = np.random.default_rng(seed)
    rang = rng.uniform(0.54, 0.68)
    bearing = rng.uniform(-0.25, 0.25)
    # the estimate sits on the visible surface, a bias of roughly one radius;
    # slim bottles keep that bias inside the grasp position gate
    radius = rng.uniform(0.007, 0.010)
    aspect = rng.uniform(3.5, 6.0)
    center = np.array([rang * math.cos(bearing), rang * math.sin(bearing), radius])
    # keep the axis well away from the bearing so the approach frame stays
    # graspable (near-parallel placements force a vertical approach)
    for _ in range(100):
        phi = rng.uniform(0, 2 * math.pi)
        axis = np.array([math.cos(phi), math.sin(phi), 0.0])
        d = center / np.linalg.norm(center)
        if abs(float(axis @ d)) < math.cos(math.radians(30.0)):
            break
    # 320x240 rendering: the tiny desk-scale bottles need a few more pixels
    # across than the teleop default for a stable two-point axis
    return SceneConfig(
        bottles=[BottleSpec(center, axis, radius, aspect * radius)],
        intrinsics=intrinsics or defaults.default_intrinsics(320, 240),
        seed=seed,
    )
