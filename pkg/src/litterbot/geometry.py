"""Rigid-body transforms and the pinhole camera model.

Conventions used throughout the package:
  - rotations are stored as 3x3 orthonormal matrices; quaternions (w, x, y, z)
    appear only in file formats,
  - camera frame: +Z forward along the optical axis, +X right, +Y down,
  - pixel coordinates (u, v) index (column, row), with integer pixel centers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import LitterbotError


class InvalidDepth(LitterbotError):
    """Back-projection requested at a non-positive depth."""


class OutOfImage(LitterbotError):
    """Pixel coordinates fall outside the image bounds."""


class BehindCamera(LitterbotError):
    """Projection requested for a point with Z <= 0."""


_ORTHO_TOL = 1e-9


def _check_rotation(rotation: np.ndarray) -> np.ndarray:
    rotation = np.asarray(rotation, dtype=float)
    if rotation.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {rotation.shape}")
    err = np.abs(rotation.T @ rotation - np.eye(3)).max()
    if err > 1e-8:
        raise ValueError(f"rotation is not orthonormal (|R^T R - I| = {err:.3g})")
    if abs(np.linalg.det(rotation) - 1.0) > 1e-8:
        raise ValueError("rotation must have determinant +1")
    return rotation


@dataclass(frozen=True)
class Pose:
    """Rigid transform: p_parent = rotation @ p_child + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    @staticmethod
    def from_parts(rotation, translation) -> "Pose":
        """Construct with validation; use for data coming from outside the package."""
        rotation = _check_rotation(rotation)
        translation = np.asarray(translation, dtype=float).reshape(3)
        return Pose(rotation, translation)

    @staticmethod
    def from_quat(quat, translation=(0.0, 0.0, 0.0)) -> "Pose":
        return Pose(matrix_from_quat(quat), np.asarray(translation, dtype=float).reshape(3))

    @staticmethod
    def from_axis_angle(axis, angle: float, translation=(0.0, 0.0, 0.0)) -> "Pose":
        axis = np.asarray(axis, dtype=float)
        return Pose(
            matrix_from_rotvec(axis / np.linalg.norm(axis) * angle),
            np.asarray(translation, dtype=float).reshape(3),
        )

    def compose(self, other: "Pose") -> "Pose":
        return Pose(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)

    def apply(self, point) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=float) + self.translation

    def rotate(self, direction) -> np.ndarray:
        """Rotate a direction vector (translation-invariant)."""
        return self.rotation @ np.asarray(direction, dtype=float)

    def quat(self) -> np.ndarray:
        return quat_from_matrix(self.rotation)

    def to_dict(self) -> dict:
        return {
            "quaternion": [float(x) for x in self.quat()],
            "translation": [float(x) for x in self.translation],
        }

    @staticmethod
    def from_dict(d: dict) -> "Pose":
        return Pose.from_quat(d["quaternion"], d.get("translation", (0.0, 0.0, 0.0)))


def compose(a: Pose, b: Pose) -> Pose:
    return a.compose(b)


def inverse(p: Pose) -> Pose:
    return p.inverse()


def transform_point(p: Pose, point) -> np.ndarray:
    return p.apply(point)


def matrix_from_quat(quat) -> np.ndarray:
    """Rotation matrix from a (w, x, y, z) quaternion; normalizes first."""
    q = np.asarray(quat, dtype=float).reshape(4)
    n = np.linalg.norm(q)
    if n < 1e-12:
        raise ValueError("zero quaternion")
    w, x, y, z = q / n
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(R: np.ndarray) -> np.ndarray:
    """(w, x, y, z) quaternion with w >= 0 from a rotation matrix."""
    R = np.asarray(R, dtype=float)
    t = np.trace(R)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2.0
        w = 0.25 * s
        x = (R[2, 1] - R[1, 2]) / s
        y = (R[0, 2] - R[2, 0]) / s
        z = (R[1, 0] - R[0, 1]) / s
    else:
        i = int(np.argmax(np.diag(R)))
        if i == 0:
            s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
            w = (R[2, 1] - R[1, 2]) / s
            x = 0.25 * s
            y = (R[0, 1] + R[1, 0]) / s
            z = (R[0, 2] + R[2, 0]) / s
        elif i == 1:
            s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
            w = (R[0, 2] - R[2, 0]) / s
            x = (R[0, 1] + R[1, 0]) / s
            y = 0.25 * s
            z = (R[1, 2] + R[2, 1]) / s
        else:
            s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
            w = (R[1, 0] - R[0, 1]) / s
            x = (R[0, 2] + R[2, 0]) / s
            y = (R[1, 2] + R[2, 1]) / s
            z = 0.25 * s
    q = np.array([w, x, y, z])
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


def hat(v) -> np.ndarray:
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def matrix_from_rotvec(w) -> np.ndarray:
    """SO(3) exponential of a rotation vector (axis * angle)."""
    w = np.asarray(w, dtype=float).reshape(3)
    th = float(np.linalg.norm(w))
    W = hat(w)
    if th < 1e-10:
        return np.eye(3) + W + 0.5 * (W @ W)
    a = math.sin(th) / th
    b = (1.0 - math.cos(th)) / (th * th)
    return np.eye(3) + a * W + b * (W @ W)


def rotvec_from_matrix(R: np.ndarray) -> np.ndarray:
    """SO(3) log map: rotation vector of R, |result| in [0, pi]."""
    R = np.asarray(R, dtype=float)
    c = np.clip((np.trace(R) - 1.0) * 0.5, -1.0, 1.0)
    th = math.acos(c)
    if th < 1e-10:
        # first-order: skew part already is the rotation vector
        return np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) * 0.5
    if math.pi - th < 1e-6:
        # near pi the skew part degenerates; recover the axis from R + I
        A = R + np.eye(3)
        axis = A[:, int(np.argmax(np.diag(A)))]
        axis = axis / np.linalg.norm(axis)
        # fix the sign so that exp matches R's skew part when it is not exactly pi
        skew = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
        if np.dot(axis, skew) < 0:
            axis = -axis
        return axis * th
    skew = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return skew * (th / (2.0 * math.sin(th)))


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics; focal lengths and principal point in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    def to_dict(self) -> dict:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
        }

    @staticmethod
    def from_dict(d: dict) -> "Intrinsics":
        return Intrinsics(
            fx=float(d["fx"]),
            fy=float(d["fy"]),
            cx=float(d["cx"]),
            cy=float(d["cy"]),
            width=int(d["width"]),
            height=int(d["height"]),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    @staticmethod
    def load(path) -> "Intrinsics":
        with open(path, "r", encoding="utf-8") as f:
            return Intrinsics.from_dict(json.load(f))


def back_project(u: float, v: float, z: float, k: Intrinsics) -> np.ndarray:
    """Lift pixel (u, v) at depth z to a camera-frame 3D point."""
    if z <= 0:
        raise InvalidDepth(f"depth must be positive, got {z}")
    if not (0 <= u < k.width and 0 <= v < k.height):
        raise OutOfImage(f"pixel ({u}, {v}) outside {k.width}x{k.height} image")
    return np.array([(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z])


def project(p, k: Intrinsics) -> tuple[float, float, float]:
    """Project a camera-frame point to (u, v, Z). Inverse of back_project."""
    x, y, z = np.asarray(p, dtype=float)
    if z <= 0:
        raise BehindCamera(f"point has Z = {z}")
    return (k.fx * x / z + k.cx, k.fy * y / z + k.cy, z)
