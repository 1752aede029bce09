"""Mission sequencing: primitives, the collection/unload state machine,
and the bin linkage model.

The machine switches between replayed joint-space primitives and the IK
layer: a valid detection in Rest starts the grasp, IK convergence triggers
the gripper, and scripted primitive chains handle loading and unloading.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import LitterbotError

log = logging.getLogger(__name__)


class MissingPrimitive(LitterbotError):
    """Primitive absent from the library."""


class OutOfTravel(LitterbotError):
    """Bin handle lift outside the mechanism's travel."""


class Primitive(str, enum.Enum):
    LITTER_LOADING = "litter-loading"
    BOX_REACHING = "box-reaching"
    BOX_OPENING = "box-opening"
    REST_POSE = "rest-pose"
    OPEN_GRIPPER = "open-gripper"
    CLOSE_GRIPPER = "close-gripper"


class MissionPhase(str, enum.Enum):
    REST = "Rest"
    GRASPING = "Grasping"
    CLOSING = "Closing"
    LOADING = "Loading"
    RELEASING = "Releasing"
    UNLOAD_REACH = "UnloadReach"
    UNLOAD_GRIP = "UnloadGrip"
    UNLOAD_OPEN = "UnloadOpen"


@dataclass(frozen=True)
class Keypoint:
    joints: np.ndarray  # 6 arm values (rad), or None to hold the current arm posture
    gripper: float  # opening in [0, 1]
    dwell_s: float

    def __post_init__(self):
        if self.joints is not None:
            object.__setattr__(self, "joints", np.asarray(self.joints, dtype=float).reshape(6))
        if not 0.0 <= self.gripper <= 1.0:
            raise ValueError(f"gripper opening must be in [0, 1], got {self.gripper}")
        if self.dwell_s <= 0:
            raise ValueError("keypoint dwell must be positive")


@dataclass
class PrimitiveLibrary:
    keypoints: dict  # Primitive -> list[Keypoint]

    def __post_init__(self):
        self.keypoints = {Primitive(k): list(v) for k, v in self.keypoints.items()}

    def validate_against(self, model) -> None:
        """Check every keypoint against the model's arm joint limits."""
        lower, upper = model.lower[2:], model.upper[2:]
        for prim, kps in self.keypoints.items():
            for i, kp in enumerate(kps):
                if kp.joints is None:
                    continue
                if np.any(kp.joints < lower) or np.any(kp.joints > upper):
                    raise ValueError(f"{prim.value} keypoint {i} violates arm limits")

    def to_dict(self) -> dict:
        return {
            prim.value: [
                {
                    "joints": None if kp.joints is None else [float(x) for x in kp.joints],
                    "gripper": kp.gripper,
                    "dwell_s": kp.dwell_s,
                }
                for kp in kps
            ]
            for prim, kps in self.keypoints.items()
        }

    @staticmethod
    def from_dict(d: dict) -> "PrimitiveLibrary":
        table = {}
        for name, kps in d.items():
            try:
                prim = Primitive(name)
            except ValueError:
                raise MissingPrimitive(f"unknown primitive id {name!r} in library") from None
            table[prim] = [
                Keypoint(kp["joints"], float(kp["gripper"]), float(kp["dwell_s"])) for kp in kps
            ]
        return PrimitiveLibrary(table)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    @staticmethod
    def load(path) -> "PrimitiveLibrary":
        with open(path, "r", encoding="utf-8") as f:
            return PrimitiveLibrary.from_dict(json.load(f))


def primitive_waypoints(library: PrimitiveLibrary, primitive: Primitive) -> list[Keypoint]:
    """Configured keypoints, verbatim; playback is the simulator's job."""
    primitive = Primitive(primitive)
    if primitive not in library.keypoints:
        raise MissingPrimitive(f"library has no keypoints for {primitive.value}")
    return list(library.keypoints[primitive])


@dataclass
class MissionEvents:
    detection_valid: bool = False
    ik_converged: bool = False
    primitive_done: bool = False
    operator_trigger: str = None  # grasp | unload | rest | reset


@dataclass
class IkTrack:
    """Command marker: drive the arm from the IK layer this tick."""


# (phase, primitive_done) chain transitions
_DONE_CHAIN = {
    MissionPhase.CLOSING: (MissionPhase.LOADING, Primitive.LITTER_LOADING),
    MissionPhase.LOADING: (MissionPhase.RELEASING, Primitive.OPEN_GRIPPER),
    MissionPhase.RELEASING: (MissionPhase.REST, Primitive.REST_POSE),
    MissionPhase.UNLOAD_REACH: (MissionPhase.UNLOAD_GRIP, Primitive.CLOSE_GRIPPER),
    MissionPhase.UNLOAD_GRIP: (MissionPhase.UNLOAD_OPEN, Primitive.BOX_OPENING),
    MissionPhase.UNLOAD_OPEN: (MissionPhase.REST, Primitive.REST_POSE),
}


def step_mission(phase: MissionPhase, events: MissionEvents):
    """One transition of the collection machine.

    Returns (next phase, command) where command is a Primitive to replay,
    an IkTrack marker, or None. Undefined (phase, event) pairs stay put
    and are logged at debug level.
    """
    if events.operator_trigger == "rest":
        return MissionPhase.REST, Primitive.REST_POSE

    if phase == MissionPhase.REST:
        if events.operator_trigger == "unload":
            return MissionPhase.UNLOAD_REACH, Primitive.BOX_REACHING
        if events.detection_valid:
            return MissionPhase.GRASPING, Primitive.OPEN_GRIPPER
        if events.operator_trigger == "grasp":
            log.debug("grasp trigger ignored: no valid detection")
        return MissionPhase.REST, None

    if phase == MissionPhase.GRASPING:
        if not events.detection_valid:
            log.debug("detection lost while grasping; returning to rest")
            return MissionPhase.REST, Primitive.REST_POSE
        if events.ik_converged:
            return MissionPhase.CLOSING, Primitive.CLOSE_GRIPPER
        return MissionPhase.GRASPING, IkTrack()

    if phase in _DONE_CHAIN:
        if events.primitive_done:
            return _DONE_CHAIN[phase]
        return phase, None

    log.debug("no transition defined for %s with %s", phase, events)
    return phase, None


# bin linkage travel measured on the mechanism: full 114 mm handle lift
# rotates the basket 26 degrees and swings the door 48 degrees
HANDLE_TRAVEL_M = 0.114
BASKET_FULL_DEG = 26.0
DOOR_FULL_DEG = 48.0


def bin_linkage(handle_lift: float) -> tuple[float, float]:
    """(basket angle, door angle) in degrees for a handle lift in meters.

    Linear between the closed and fully-open states; gravity resets the
    mechanism, so lift = 0 is the rest state.
    """
    if not 0.0 <= handle_lift <= HANDLE_TRAVEL_M:
        raise OutOfTravel(f"handle lift {handle_lift} outside [0, {HANDLE_TRAVEL_M}]")
    s = handle_lift / HANDLE_TRAVEL_M
    return BASKET_FULL_DEG * s, DOOR_FULL_DEG * s


def default_primitive_library() -> PrimitiveLibrary:
    """Nominal keypoints for the six primitives (desk-scale postures)."""
    rest = [0.0, 1.2, -2.2, 1.0, 0.0, 0.0]
    over_bin = [2.4, 0.7, -1.9, 1.2, 0.0, 0.0]
    at_handle = [2.4, 0.9, -1.7, 0.8, 0.0, 0.0]
    handle_up = [2.4, 0.4, -1.3, 0.9, 0.0, 0.0]
    return PrimitiveLibrary(
        {
            Primitive.LITTER_LOADING: [
                Keypoint([0.0, 0.6, -1.4, 0.8, 0.0, 0.0], 0.0, 0.6),
                Keypoint(over_bin, 0.0, 0.8),
            ],
            Primitive.BOX_REACHING: [
                Keypoint(over_bin, 1.0, 0.8),
                Keypoint(at_handle, 1.0, 0.6),
            ],
            Primitive.BOX_OPENING: [
                Keypoint(handle_up, 0.0, 1.2),
            ],
            Primitive.REST_POSE: [Keypoint(rest, 0.0, 0.8)],
            Primitive.OPEN_GRIPPER: [Keypoint(None, 1.0, 0.4)],
            Primitive.CLOSE_GRIPPER: [Keypoint(None, 0.0, 0.4)],
        }
    )
