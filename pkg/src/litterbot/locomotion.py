"""Locomotion environment math: observations, gait clock, reward terms.

Everything here is a pure function so each quantity can be checked in
isolation. No learner lives in this package; the reward terms exist as
verifiable definitions of the walking objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LitterbotError


class DimensionError(LitterbotError):
    """Input vector has the wrong length."""


class InvalidGaitParams(LitterbotError):
    """Gait clock parameter outside its valid range."""


class MissingWeight(LitterbotError):
    """A reward term has no entry in the weight map."""


def _vec(x, n, name) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != n:
        raise DimensionError(f"{name} must have {n} entries, got {x.shape[0]}")
    return x


@dataclass
class ProprioState:
    v: np.ndarray  # base linear velocity, m/s
    w: np.ndarray  # base angular velocity, rad/s
    q_leg: np.ndarray  # 12 leg joint positions, rad
    qdot_leg: np.ndarray  # 12 leg joint velocities, rad/s
    q_arm: np.ndarray  # 6 arm joint positions, rad

    def __post_init__(self):
        self.v = _vec(self.v, 3, "v")
        self.w = _vec(self.w, 3, "w")
        self.q_leg = _vec(self.q_leg, 12, "q_leg")
        self.qdot_leg = _vec(self.qdot_leg, 12, "qdot_leg")
        self.q_arm = _vec(self.q_arm, 6, "q_arm")

    @staticmethod
    def zero() -> "ProprioState":
        return ProprioState(np.zeros(3), np.zeros(3), np.zeros(12), np.zeros(12), np.zeros(6))


@dataclass
class ReferenceCmd:
    v_des: np.ndarray = field(default_factory=lambda: np.zeros(3))
    w_des: np.ndarray = field(default_factory=lambda: np.zeros(3))
    h_des: float = 0.0
    theta_des: float = 0.0

    def __post_init__(self):
        self.v_des = _vec(self.v_des, 3, "v_des")
        self.w_des = _vec(self.w_des, 3, "w_des")
        if not np.isfinite([self.h_des, self.theta_des]).all():
            raise DimensionError("references must be finite")


@dataclass
class DynamicsSample:
    """Per-step quantities the reward terms consume.

    Joint velocities ride along with torques because the energy term needs
    their product.
    """

    tau: np.ndarray  # 12 joint torques, N*m
    qddot: np.ndarray  # 12 joint accelerations, rad/s^2
    qdot: np.ndarray  # 12 joint velocities, rad/s
    base_collisions: int
    contact: np.ndarray  # 4 booleans, measured foot contact
    foot_z: np.ndarray  # 4 foot heights, m, world frame
    foot_to_hip_xy: np.ndarray  # 4x2 horizontal offsets, m
    theta: float  # base pitch, rad
    h: float  # base height, m

    def __post_init__(self):
        self.tau = _vec(self.tau, 12, "tau")
        self.qddot = _vec(self.qddot, 12, "qddot")
        self.qdot = _vec(self.qdot, 12, "qdot")
        self.contact = np.asarray(self.contact, dtype=bool).reshape(4)
        self.foot_z = _vec(self.foot_z, 4, "foot_z")
        self.foot_to_hip_xy = np.asarray(self.foot_to_hip_xy, dtype=float).reshape(4, 2)

    @staticmethod
    def zero() -> "DynamicsSample":
        return DynamicsSample(
            np.zeros(12), np.zeros(12), np.zeros(12), 0, np.zeros(4, dtype=bool),
            np.zeros(4), np.zeros((4, 2)), 0.0, 0.0,
        )


@dataclass
class TerrainSample:
    theta_terrain: float = 0.0
    h_terrain: np.ndarray = field(default_factory=lambda: np.zeros(4))  # per foot

    def __post_init__(self):
        self.h_terrain = _vec(self.h_terrain, 4, "h_terrain")


@dataclass
class ActionHistory:
    q_k: np.ndarray
    q_k1: np.ndarray  # previous step
    q_k2: np.ndarray  # two steps back

    def __post_init__(self):
        self.q_k = _vec(self.q_k, 12, "q_k")
        self.q_k1 = _vec(self.q_k1, 12, "q_k1")
        self.q_k2 = _vec(self.q_k2, 12, "q_k2")

    @staticmethod
    def zero() -> "ActionHistory":
        return ActionHistory(np.zeros(12), np.zeros(12), np.zeros(12))


# per-frame observation layout; 44 values, stacked 5 deep = 220
FRAME_LAYOUT = (
    ("v", 3),
    ("w", 3),
    ("q_leg", 12),
    ("qdot_leg", 12),
    ("q_arm", 6),
    ("v_des", 3),
    ("w_des", 3),
    ("h_des", 1),
    ("theta_des", 1),
)
FRAME_SIZE = sum(n for _, n in FRAME_LAYOUT)
STACK_DEPTH = 5


def frame_vector(p: ProprioState, r: ReferenceCmd) -> np.ndarray:
    """Single observation frame, 44 values in the FRAME_LAYOUT order."""
    return np.concatenate(
        [p.v, p.w, p.q_leg, p.qdot_leg, p.q_arm, r.v_des, r.w_des, [r.h_des], [r.theta_des]]
    )


def assemble_observation(p: ProprioState, r: ReferenceCmd, history=()) -> np.ndarray:
    """Stack of the last 5 frames, newest last; 220 values.

    history holds earlier frame vectors (oldest first). On a cold start the
    oldest available frame is repeated to pad the stack.
    """
    frames = [np.asarray(f, dtype=float) for f in history]
    if len(frames) > STACK_DEPTH:
        raise DimensionError(f"history holds {len(frames)} frames, at most {STACK_DEPTH}")
    for f in frames:
        if f.shape != (FRAME_SIZE,):
            raise DimensionError(f"history frame has shape {f.shape}, expected ({FRAME_SIZE},)")
    frames.append(frame_vector(p, r))
    frames = frames[-STACK_DEPTH:]
    while len(frames) < STACK_DEPTH:
        frames.insert(0, frames[0])
    return np.concatenate(frames)


def split_observation(obs) -> list[dict]:
    """Inverse of assemble_observation: 5 dicts of named slices, oldest first."""
    obs = np.asarray(obs, dtype=float).reshape(-1)
    if obs.shape[0] != FRAME_SIZE * STACK_DEPTH:
        raise DimensionError(f"expected {FRAME_SIZE * STACK_DEPTH} values, got {obs.shape[0]}")
    out = []
    for k in range(STACK_DEPTH):
        frame = obs[k * FRAME_SIZE : (k + 1) * FRAME_SIZE]
        fields = {}
        i = 0
        for name, n in FRAME_LAYOUT:
            fields[name] = frame[i : i + n].copy()
            i += n
        out.append(fields)
    return out


TROT_OFFSETS = (0.0, 0.5, 0.5, 0.0)


def contact_schedule(t: float, step_freq: float = 1.4, duty: float = 0.6, offsets=TROT_OFFSETS) -> np.ndarray:
    """Commanded stance flags: foot i is in stance iff
    frac(t * step_freq + offset_i) < duty."""
    if step_freq <= 0:
        raise InvalidGaitParams(f"step frequency must be positive, got {step_freq}")
    if not 0 < duty < 1:
        raise InvalidGaitParams(f"duty factor must be in (0, 1), got {duty}")
    offsets = _vec(offsets, 4, "offsets")
    if np.any(offsets < 0) or np.any(offsets >= 1):
        raise InvalidGaitParams("phase offsets must lie in [0, 1)")
    phase = np.mod(t * step_freq + offsets, 1.0)
    return phase < duty


REWARD_NAMES = (
    "base_linear_velocity",
    "base_angular_velocity",
    "base_orientation",
    "base_height",
    "joints_torque",
    "joints_acceleration",
    "joints_energy",
    "undesired_contact",
    "action_rate",
    "action_smoothness",
    "feet_contact_suggestion",
    "feet_height_clearance",
    "feet_to_hips_position",
)

DEFAULT_FOOT_CLEARANCE = 0.08  # commanded swing apex above the terrain, m


def compute_rewards(
    sample: DynamicsSample,
    refs: ReferenceCmd,
    v,
    w,
    terrain: TerrainSample,
    actions: ActionHistory,
    c_des,
    foot_z_des: float = DEFAULT_FOOT_CLEARANCE,
    foot_to_hip_ref=None,
    signed_contact_term: bool = False,
) -> dict:
    """All thirteen reward terms, one dict entry per term.

    Vector squares are squared Euclidean norms. The contact-suggestion term
    defaults to the mismatch penalty -sum |c_des - c|; the signed form
    -sum (c_des - c) is available behind the flag (it pays a bonus for
    contact during commanded swing, which defeats its purpose, but is kept
    reachable for comparison). The clearance term only scores feet in
    commanded swing.
    """
    v = _vec(v, 3, "v")
    w = _vec(w, 3, "w")
    c_des = np.asarray(c_des, dtype=bool).reshape(4)
    hip_ref = (
        np.zeros((4, 2))
        if foot_to_hip_ref is None
        else np.asarray(foot_to_hip_ref, dtype=float).reshape(4, 2)
    )

    c = sample.contact.astype(float)
    cd = c_des.astype(float)
    if signed_contact_term:
        contact_term = float(-(cd - c).sum())
    else:
        contact_term = float(-np.abs(cd - c).sum())

    swing = ~c_des
    clearance = float(
        np.sum(
            np.exp(-((foot_z_des + terrain.h_terrain[swing] - sample.foot_z[swing]) ** 2) / 0.01)
        )
    )

    return {
        "base_linear_velocity": float(np.exp(-np.sum((refs.v_des - v) ** 2) / 0.25)),
        "base_angular_velocity": float(-np.sum((refs.w_des - w) ** 2)),
        "base_orientation": float(-((terrain.theta_terrain + refs.theta_des - sample.theta) ** 2)),
        "base_height": float(np.exp(-((refs.h_des - sample.h) ** 2) / 0.01)),
        "joints_torque": float(-np.sum(sample.tau**2)),
        "joints_acceleration": float(-np.sum(sample.qddot**2)),
        "joints_energy": float(-np.sum(np.abs(sample.qdot * sample.tau))),
        "undesired_contact": float(-sample.base_collisions),
        "action_rate": float(-np.sum((actions.q_k - actions.q_k1) ** 2)),
        "action_smoothness": float(-np.sum((actions.q_k - 2 * actions.q_k1 - actions.q_k2) ** 2)),
        "feet_contact_suggestion": contact_term,
        "feet_height_clearance": clearance,
        "feet_to_hips_position": float(-np.sum((hip_ref - sample.foot_to_hip_xy) ** 2)),
    }


def total_reward(terms: dict, weights: dict) -> float:
    """Weighted sum over terms; every term must have a weight."""
    total = 0.0
    for name in sorted(terms):
        if name not in weights:
            raise MissingWeight(f"no weight for reward term {name!r}")
        total += weights[name] * terms[name]
    return total


def default_reward_weights() -> dict:
    """Uniform unit weights; the true training weights are not published."""
    return {name: 1.0 for name in REWARD_NAMES}
