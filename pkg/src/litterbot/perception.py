"""Bottle position and principal-axis estimation from mask + depth.

The pipeline works on a refined binary silhouette: PCA of the mask pixels
gives the in-image axis, two representative points along that axis are
back-projected through the depth map, and their difference/midpoint give
the 3D axis direction and center. A stabilizer enforces sign consistency
across frames and smooths jitter.

Masks are (H, W) boolean arrays; depth maps are (H, W) float arrays in
meters with 0 marking invalid pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import LitterbotError
from .geometry import Intrinsics, Pose, back_project


class EmptyMask(LitterbotError):
    """Operation requires at least one foreground pixel."""


class DegenerateMask(LitterbotError):
    """Operation requires at least two foreground pixels."""


class FrameMismatch(LitterbotError):
    """Estimate is expressed in the wrong frame for this operation."""


class DegenerateApproach(LitterbotError):
    """Bottle axis nearly parallel to the base-to-bottle direction."""


CAMERA_FRAME = "camera"
BASE_FRAME = "base"

_BOX3 = np.ones((3, 3), dtype=bool)

# representative points sit this many standard deviations from the centroid;
# staying inside ~1 sigma keeps the depth samples on the cylinder's lateral
# mid-body, away from end caps whose slanted depth profile corrupts the axis
AXIS_SAMPLE_SIGMA = 0.9
SNAP_RADIUS_PX = 5
MIN_AXIS_LENGTH_M = 1e-3


@dataclass
class BottleEstimate:
    center: np.ndarray  # 3-vector, meters
    axis: np.ndarray  # unit 3-vector
    frame: str = CAMERA_FRAME
    valid: bool = True

    def to_dict(self) -> dict:
        return {
            "center": [float(x) for x in self.center],
            "axis": [float(x) for x in self.axis],
            "frame": self.frame,
            "valid": self.valid,
        }

    @staticmethod
    def from_dict(d: dict) -> "BottleEstimate":
        return BottleEstimate(
            center=np.asarray(d["center"], dtype=float),
            axis=np.asarray(d["axis"], dtype=float),
            frame=d.get("frame", CAMERA_FRAME),
            valid=bool(d.get("valid", True)),
        )

    @staticmethod
    def invalid_estimate(frame: str = CAMERA_FRAME) -> "BottleEstimate":
        return BottleEstimate(np.zeros(3), np.array([1.0, 0.0, 0.0]), frame, valid=False)


@dataclass
class StabilizerState:
    """Holds the previous (smoothed) estimate; beta = 1 disables smoothing."""

    beta: float = 0.4
    previous: BottleEstimate = None

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ValueError("smoothing factor must be in (0, 1]")


def _refine_pass(mask: np.ndarray) -> np.ndarray:
    labels, count = ndimage.label(mask, structure=_BOX3)
    if count > 1:
        sizes = ndimage.sum_labels(mask, labels, index=np.arange(1, count + 1))
        mask = labels == (1 + int(np.argmax(sizes)))
    opened = ndimage.binary_opening(mask, structure=_BOX3)
    return ndimage.binary_closing(opened, structure=_BOX3)


def refine_mask(mask: np.ndarray) -> np.ndarray:
    """Keep the largest 8-connected component, then open and close (3x3).

    The pass repeats until stable: opening can split the selected component,
    in which case a single pass would not be idempotent. Clean silhouettes
    settle in one pass.
    """
    mask = np.asarray(mask).astype(bool)
    for _ in range(8):
        if not mask.any():
            return np.zeros_like(mask)
        out = _refine_pass(mask)
        if np.array_equal(out, mask):
            return out
        mask = out
    return mask


def mask_centroid(mask: np.ndarray) -> np.ndarray:
    """Mean (u, v) of the foreground pixels."""
    vs, us = np.nonzero(np.asarray(mask))
    if us.size == 0:
        raise EmptyMask("mask has no foreground pixels")
    return np.array([us.mean(), vs.mean()])


def mask_covariance(mask: np.ndarray) -> np.ndarray:
    """Sample covariance (1/(N-1)) of the foreground pixel coordinates."""
    vs, us = np.nonzero(np.asarray(mask))
    n = us.size
    if n < 2:
        raise DegenerateMask(f"covariance needs at least 2 pixels, got {n}")
    pts = np.stack([us, vs], axis=1).astype(float)
    centered = pts - pts.mean(axis=0)
    return centered.T @ centered / (n - 1)


def principal_axis_2d(cov: np.ndarray) -> np.ndarray:
    """Unit eigenvector of the larger eigenvalue of a 2x2 covariance.

    Sign convention: u-component >= 0; when u = 0, v >= 0. Exact ties
    resolve to (1, 0).
    """
    a, b, c = float(cov[0, 0]), float(cov[0, 1]), float(cov[1, 1])
    if b == 0.0:
        v = np.array([1.0, 0.0]) if a >= c else np.array([0.0, 1.0])
    else:
        lam = 0.5 * (a + c) + math.hypot(0.5 * (a - c), b)
        v = np.array([b, lam - a])
        v = v / np.linalg.norm(v)
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        v = -v
    return v


def _snap_to_valid(point, mask, depth):
    """Nearest foreground pixel with valid depth within SNAP_RADIUS_PX."""
    h, w = mask.shape
    u0 = int(round(point[0]))
    v0 = int(round(point[1]))
    r = SNAP_RADIUS_PX
    us = np.arange(max(0, u0 - r), min(w, u0 + r + 1))
    vs = np.arange(max(0, v0 - r), min(h, v0 + r + 1))
    if us.size == 0 or vs.size == 0:
        return None
    uu, vv = np.meshgrid(us, vs)
    ok = mask[vv, uu] & (depth[vv, uu] > 0)
    d2 = (uu - point[0]) ** 2 + (vv - point[1]) ** 2
    ok &= d2 <= r * r
    if not ok.any():
        return None
    d2 = np.where(ok, d2, np.inf)
    idx = np.unravel_index(int(np.argmin(d2)), d2.shape)  # row-major tie-break
    return int(uu[idx]), int(vv[idx])


def _median_depth(u, v, mask, depth):
    h, w = mask.shape
    window = depth[max(0, v - 1) : v + 2, max(0, u - 1) : u + 2]
    mwin = mask[max(0, v - 1) : v + 2, max(0, u - 1) : u + 2]
    vals = window[mwin & (window > 0)]
    if vals.size == 0:
        return None
    return float(np.median(vals))


def estimate_axis_3d(mask: np.ndarray, depth: np.ndarray, k: Intrinsics) -> BottleEstimate:
    """Camera-frame bottle estimate from a refined mask and aligned depth.

    Representative image points at centroid +/- AXIS_SAMPLE_SIGMA standard
    deviations along the principal axis are snapped to the nearest valid
    foreground pixel, given the median depth of their 3x3 foreground
    neighborhood, and back-projected; the two 3D points define the axis and
    their midpoint the center. Failures after the mask check surface as
    valid=False.
    """
    mask = np.asarray(mask).astype(bool)
    depth = np.asarray(depth, dtype=float)
    if not mask.any():
        raise EmptyMask("mask has no foreground pixels")
    if mask.sum() < 2:
        return BottleEstimate.invalid_estimate()

    centroid = mask_centroid(mask)
    cov = mask_covariance(mask)
    axis2d = principal_axis_2d(cov)
    lam_max = 0.5 * (cov[0, 0] + cov[1, 1]) + math.hypot(
        0.5 * (cov[0, 0] - cov[1, 1]), cov[0, 1]
    )
    s = AXIS_SAMPLE_SIGMA * math.sqrt(max(0.0, lam_max))

    points = []
    for sign in (-1.0, 1.0):
        snapped = _snap_to_valid(centroid + sign * s * axis2d, mask, depth)
        if snapped is None:
            return BottleEstimate.invalid_estimate()
        z = _median_depth(*snapped, mask, depth)
        if z is None:
            return BottleEstimate.invalid_estimate()
        points.append(back_project(snapped[0], snapped[1], z, k))

    p1, p2 = points
    diff = p2 - p1
    length = float(np.linalg.norm(diff))
    if length < MIN_AXIS_LENGTH_M:
        return BottleEstimate.invalid_estimate()
    return BottleEstimate(center=0.5 * (p1 + p2), axis=diff / length, frame=CAMERA_FRAME)


def stabilize(state: StabilizerState, new: BottleEstimate) -> BottleEstimate:
    """Sign-consistent exponential smoothing; updates state in place."""
    if not new.valid:
        return state.previous if state.previous is not None else new
    if state.previous is None:
        state.previous = new
        return new
    prev = state.previous
    if prev.frame != new.frame:
        raise FrameMismatch(f"cannot smooth {new.frame} estimate against {prev.frame}")
    axis = new.axis if float(np.dot(new.axis, prev.axis)) >= 0 else -new.axis
    beta = state.beta
    blended = beta * axis + (1 - beta) * prev.axis
    out = BottleEstimate(
        center=beta * new.center + (1 - beta) * prev.center,
        axis=blended / np.linalg.norm(blended),
        frame=new.frame,
    )
    state.previous = out
    return out


def to_base_frame(est: BottleEstimate, camera_in_base: Pose) -> BottleEstimate:
    """Map a camera-frame estimate into the robot base frame."""
    if est.frame != CAMERA_FRAME:
        raise FrameMismatch(f"expected a camera-frame estimate, got {est.frame}")
    if not est.valid:
        raise ValueError("cannot transform an invalid estimate")
    return BottleEstimate(
        center=camera_in_base.apply(est.center),
        axis=camera_in_base.rotate(est.axis),
        frame=BASE_FRAME,
    )


def grasp_pose_from_estimate(est: BottleEstimate, approach_offset: float = 0.0) -> Pose:
    """Grasp target aligned with the bottle axis.

    Gripper frame: +X approach (from the base origin toward the bottle,
    projected perpendicular to the bottle axis), +Y closing (perpendicular
    to the bottle axis), +Z along the bottle axis. A positive offset backs
    the target off along -X for a pre-grasp pose.
    """
    if not est.valid:
        raise ValueError("grasp pose requires a valid estimate")
    if est.frame != BASE_FRAME:
        raise FrameMismatch(f"grasp pose needs a base-frame estimate, got {est.frame}")
    a = est.axis / np.linalg.norm(est.axis)
    d = est.center
    d_perp = d - np.dot(d, a) * a
    if np.linalg.norm(d_perp) < np.linalg.norm(d) * math.sin(math.radians(1.0)):
        raise DegenerateApproach("bottle axis within 1 degree of the approach direction")
    x = d_perp / np.linalg.norm(d_perp)
    y = np.cross(a, x)
    rotation = np.stack([x, y, a], axis=1)
    return Pose(rotation, est.center - approach_offset * x)
