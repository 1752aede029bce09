"""Built-in nominal configurations.

The kinematic dimensions below are plausible values for a 6-DoF elbow
manipulator on a quadruped trunk; they are nominal, not measured from any
hardware, and every one of them can be overridden through the JSON model
file format.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import Pose, Intrinsics
from .kinematics import ChainModel, Joint, PRISMATIC, REVOLUTE

Z = (0.0, 0.0, 1.0)
Y = (0.0, 1.0, 0.0)
X = (1.0, 0.0, 0.0)

# Base height travel and pitch range, also exposed as model file entries.
H_LIMITS = (0.25, 0.45)
THETA_LIMITS = (-0.4, 0.4)
H_NOMINAL = 0.35

CAMERA_PITCH_DOWN = math.radians(25.0)
CAMERA_FORWARD = 0.18


def _camera_mount() -> Pose:
    # camera frame (+Z forward, +X right, +Y down) mapped into the trunk
    # frame (+X forward, +Z up), then pitched down
    level = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
    c, s = math.cos(CAMERA_PITCH_DOWN), math.sin(CAMERA_PITCH_DOWN)
    pitch_down = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return Pose(pitch_down @ level, np.array([CAMERA_FORWARD, 0.0, 0.0]))


def default_model() -> ChainModel:
    """Nominal 8-DoF chain: base height, base pitch, then 6 arm joints."""
    t = lambda *v: Pose(np.eye(3), np.array(v, dtype=float))
    joints = (
        Joint("base_height", PRISMATIC, Z, Pose.identity(), *H_LIMITS, 0.2),
        Joint("base_pitch", REVOLUTE, Y, Pose.identity(), *THETA_LIMITS, 1.0),
        Joint("arm_yaw", REVOLUTE, Z, t(0.15, 0.0, 0.05), -2.6, 2.6, 3.0),
        Joint("arm_shoulder", REVOLUTE, Y, t(0.0, 0.0, 0.06), -2.0, 2.0, 3.0),
        Joint("arm_elbow", REVOLUTE, Y, t(0.30, 0.0, 0.0), -2.6, 2.6, 3.0),
        Joint("arm_wrist_pitch", REVOLUTE, Y, t(0.25, 0.0, 0.0), -2.0, 2.0, 3.0),
        Joint("arm_wrist_yaw", REVOLUTE, Z, t(0.07, 0.0, 0.0), -2.6, 2.6, 3.0),
        Joint("arm_wrist_roll", REVOLUTE, X, t(0.05, 0.0, 0.0), -2.6, 2.6, 3.0),
    )
    return ChainModel(
        joints=joints,
        ee_offset=t(0.08, 0.0, 0.0),
        camera_mount=_camera_mount(),
        camera_parent=1,
    )


def nominal_q(model: ChainModel = None) -> np.ndarray:
    """Mid-range configuration."""
    model = model or default_model()
    return 0.5 * (model.lower + model.upper)


def ready_q() -> np.ndarray:
    """Elbow-bent working posture; keeps the solver off the straight-arm
    singularity that the mid-range configuration sits on."""
    return np.array([H_NOMINAL, 0.0, 0.0, 0.6, -1.2, 0.6, 0.0, 0.0])


def rest_arm() -> np.ndarray:
    """Folded arm posture held while walking."""
    return np.array([0.0, 1.2, -2.2, 1.0, 0.0, 0.0])


def default_intrinsics(width: int = 160, height: int = 120) -> Intrinsics:
    f = 0.8125 * width  # ~63 deg horizontal field of view
    return Intrinsics(fx=f, fy=f, cx=width / 2.0, cy=height / 2.0, width=width, height=height)


# IK task weighting. The body-pose entries of the regularizer are weighted
# 100x the arm entries so the solver moves the base only when the arm alone
# cannot reach; the overall regularizer scale is kept small so the
# end-effector task still converges to millimeter accuracy.
IK_EE_GAIN = 10.0
IK_REG_GAIN = 1.0
IK_REG_WEIGHT = 1e-4 * np.array([100.0, 100.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0])
IK_DT = 0.02
IK_TOL = 1e-3
IK_MAX_ITERS = 200
