"""Kinematic chain, forward kinematics, and geometric Jacobians.

The default model has 8 actuated joints ordered (base height, base pitch,
6 arm joints): the two virtual base joints let the solver trade arm motion
against body posture. Chains of any length are supported so tests can build
small custom models.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import LitterbotError
from .geometry import Pose, matrix_from_rotvec


class UnknownFrame(LitterbotError):
    """Requested frame is not part of the model."""


REVOLUTE = "revolute"
PRISMATIC = "prismatic"


@dataclass(frozen=True)
class Joint:
    name: str
    kind: str  # REVOLUTE or PRISMATIC
    axis: np.ndarray  # unit 3-vector in the parent frame
    origin: Pose  # fixed parent-to-joint transform
    lower: float
    upper: float
    velocity_limit: float

    def __post_init__(self):
        if self.kind not in (REVOLUTE, PRISMATIC):
            raise ValueError(f"unknown joint kind {self.kind!r}")
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        n = np.linalg.norm(axis)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"joint {self.name}: axis must be a unit vector")
        object.__setattr__(self, "axis", axis)
        if not self.lower < self.upper:
            raise ValueError(f"joint {self.name}: requires lower < upper")
        if self.velocity_limit <= 0:
            raise ValueError(f"joint {self.name}: velocity limit must be positive")

    def motion(self, q: float) -> Pose:
        if self.kind == PRISMATIC:
            return Pose(np.eye(3), self.axis * q)
        return Pose(matrix_from_rotvec(self.axis * q), np.zeros(3))


@dataclass(frozen=True)
class ChainModel:
    """Serial chain rooted at the robot base frame (x forward, z up)."""

    joints: tuple
    ee_offset: Pose = field(default_factory=Pose.identity)
    camera_mount: Pose = field(default_factory=Pose.identity)
    camera_parent: int = 1  # camera rides the frame after this joint (the trunk)

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        if not self.joints:
            raise ValueError("model needs at least one joint")
        if not (0 <= self.camera_parent < len(self.joints)):
            raise ValueError("camera_parent out of range")

    @property
    def n(self) -> int:
        return len(self.joints)

    @property
    def lower(self) -> np.ndarray:
        return np.array([j.lower for j in self.joints])

    @property
    def upper(self) -> np.ndarray:
        return np.array([j.upper for j in self.joints])

    @property
    def velocity_limits(self) -> np.ndarray:
        return np.array([j.velocity_limit for j in self.joints])

    def clamp(self, q) -> np.ndarray:
        return np.clip(np.asarray(q, dtype=float), self.lower, self.upper)

    def is_feasible(self, q, tol: float = 0.0) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.lower - tol) and np.all(q <= self.upper + tol))

    def frame_index(self, frame) -> tuple[int, Pose]:
        """Resolve a frame spec to (last contributing joint index, fixed tail transform)."""
        if isinstance(frame, (int, np.integer)):
            if not (0 <= frame < self.n):
                raise UnknownFrame(f"joint index {frame} out of range")
            return int(frame), Pose.identity()
        if frame in ("ee", "end_effector"):
            return self.n - 1, self.ee_offset
        if frame == "camera":
            return self.camera_parent, self.camera_mount
        raise UnknownFrame(f"unknown frame {frame!r}")

    def to_dict(self) -> dict:
        return {
            "joints": [
                {
                    "name": j.name,
                    "type": j.kind,
                    "axis": [float(x) for x in j.axis],
                    "origin": j.origin.to_dict(),
                    "limits": [j.lower, j.upper],
                    "velocity_limit": j.velocity_limit,
                }
                for j in self.joints
            ],
            "ee_offset": self.ee_offset.to_dict(),
            "camera_mount": self.camera_mount.to_dict(),
            "camera_parent": self.camera_parent,
        }

    @staticmethod
    def from_dict(d: dict) -> "ChainModel":
        joints = tuple(
            Joint(
                name=jd.get("name", f"joint{i}"),
                kind=jd["type"],
                axis=np.asarray(jd["axis"], dtype=float),
                origin=Pose.from_dict(jd["origin"]),
                lower=float(jd["limits"][0]),
                upper=float(jd["limits"][1]),
                velocity_limit=float(jd.get("velocity_limit", 1.0)),
            )
            for i, jd in enumerate(d["joints"])
        )
        return ChainModel(
            joints=joints,
            ee_offset=Pose.from_dict(d["ee_offset"]) if "ee_offset" in d else Pose.identity(),
            camera_mount=Pose.from_dict(d["camera_mount"]) if "camera_mount" in d else Pose.identity(),
            camera_parent=int(d.get("camera_parent", min(1, len(joints) - 1))),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    @staticmethod
    def load(path) -> "ChainModel":
        with open(path, "r", encoding="utf-8") as f:
            return ChainModel.from_dict(json.load(f))


def _check_q(model: ChainModel, q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape[0] != model.n:
        raise ValueError(f"expected {model.n} joint values, got {q.shape[0]}")
    return q


def joint_frames(model: ChainModel, q) -> list[Pose]:
    """Pose of the frame after each joint, in the base frame."""
    q = _check_q(model, q)
    frames = []
    t = Pose.identity()
    for joint, qi in zip(model.joints, q):
        t = t.compose(joint.origin).compose(joint.motion(float(qi)))
        frames.append(t)
    return frames


def forward_kinematics(model: ChainModel, q, frame="end_effector") -> Pose:
    """Pose of the requested frame in the base frame."""
    idx, tail = model.frame_index(frame)
    return joint_frames(model, q)[idx].compose(tail)


def jacobian(model: ChainModel, q, frame="end_effector") -> np.ndarray:
    """Geometric Jacobian of the frame, 6 x n.

    Rows are (linear velocity, angular velocity) of the frame per unit joint
    rate, expressed in the base frame. Joints past the frame get zero columns.
    """
    idx, tail = model.frame_index(frame)
    frames = joint_frames(model, q)
    p = frames[idx].compose(tail).translation
    J = np.zeros((6, model.n))
    t = Pose.identity()
    for i, joint in enumerate(model.joints):
        if i > idx:
            break
        # the joint moves in the frame *before* its own motion is applied
        pre = t.compose(joint.origin)
        axis_w = pre.rotation @ joint.axis
        if joint.kind == PRISMATIC:
            J[:3, i] = axis_w
        else:
            J[:3, i] = np.cross(axis_w, p - pre.translation)
            J[3:, i] = axis_w
        t = frames[i]
    return J
