"""Weighted multi-task differential inverse kinematics.

Each control step solves a small dense box-constrained QP over joint rates:

    min_qd   sum_tasks || J(q) qd - gain * e(q) ||^2_W
    s.t.     lb <= qd <= ub

with e the task residual (pose error or configuration error), and the box
the tighter of the velocity limits and the position limits reachable in one
step. Integrating the solution drives every residual toward zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LitterbotError
from .geometry import Pose, rotvec_from_matrix
from .kinematics import ChainModel, forward_kinematics, jacobian


class InfeasibleBounds(LitterbotError):
    """Box constraint with lb > ub in some coordinate."""


EE_POSE = "end_effector_pose"
REGULARIZATION = "configuration_regularization"


@dataclass
class Task:
    kind: str
    target: object  # Pose for EE_POSE, joint array for REGULARIZATION
    weight: object = None  # scalar, diagonal vector, or full PSD matrix; None = identity
    gain: float = 1.0

    def __post_init__(self):
        if self.kind not in (EE_POSE, REGULARIZATION):
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.gain <= 0:
            raise ValueError("task gain must be positive")

    @staticmethod
    def pose(target: Pose, weight=None, gain: float = 10.0) -> "Task":
        return Task(EE_POSE, target, weight, gain)

    @staticmethod
    def posture(target, weight=None, gain: float = 1.0) -> "Task":
        return Task(REGULARIZATION, np.asarray(target, dtype=float), weight, gain)


def _weight_matrix(weight, dim: int) -> np.ndarray:
    if weight is None:
        return np.eye(dim)
    w = np.asarray(weight, dtype=float)
    if w.ndim == 0:
        return float(w) * np.eye(dim)
    if w.ndim == 1:
        if w.shape[0] != dim:
            raise ValueError(f"weight diagonal has length {w.shape[0]}, expected {dim}")
        if np.any(w < 0):
            raise ValueError("weight diagonal must be nonnegative")
        return np.diag(w)
    if w.shape != (dim, dim):
        raise ValueError(f"weight matrix must be {dim}x{dim}")
    if np.abs(w - w.T).max() > 1e-9:
        raise ValueError("weight matrix must be symmetric")
    return w


@dataclass
class IKProblem:
    model: ChainModel
    tasks: list
    dt: float = 0.02
    max_iters: int = 200
    tol: float = 1e-3
    lower: np.ndarray = None  # position limits; default from model
    upper: np.ndarray = None
    velocity_limits: np.ndarray = None
    frozen: np.ndarray = None  # boolean mask of joints pinned at their current value
    # fraction of the gap to a position limit closable per step; below 1 the
    # approach to a limit is geometric, which kills overshoot limit cycles
    limit_gain: float = 0.5
    # Levenberg-Marquardt damping scaled by the weighted residual; bounds the
    # step in near-singular directions (stretched-arm workspace boundary)
    lm_damping: float = 1e-2

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0 < self.limit_gain <= 1:
            raise ValueError("limit_gain must be in (0, 1]")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if not self.tasks:
            raise ValueError("at least one task is required")
        n = self.model.n
        self.lower = self.model.lower if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = self.model.upper if self.upper is None else np.asarray(self.upper, dtype=float)
        self.velocity_limits = (
            self.model.velocity_limits
            if self.velocity_limits is None
            else np.asarray(self.velocity_limits, dtype=float)
        )
        if self.frozen is not None:
            self.frozen = np.asarray(self.frozen, dtype=bool).reshape(n)


def solve_box_qp(H, g, lb, ub, tol: float = 1e-10, max_iters: int = None) -> np.ndarray:
    """Minimize 0.5 x'Hx + g'x subject to lb <= x <= ub.

    Active-set iteration for small dense problems: solve the free subsystem,
    clamp violating coordinates to their bounds, release the bound whose
    multiplier has the wrong sign, repeat until the KKT conditions hold.
    H must be symmetric PSD; a 1e-8 diagonal shift is added if the free
    subsystem is singular.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float).reshape(-1)
    n = g.shape[0]
    lb = np.asarray(lb, dtype=float).reshape(n)
    ub = np.asarray(ub, dtype=float).reshape(n)
    if np.any(lb > ub):
        raise InfeasibleBounds("lb > ub in some coordinate")

    Hs = 0.5 * (H + H.T)
    # make sure every free subsystem is solvable: shift until the Cholesky
    # pivots are comfortably positive (handles rank-deficient PSD input)
    shift = 1e-8
    scale = max(1.0, float(np.abs(Hs).max()))
    for _ in range(6):
        try:
            L = np.linalg.cholesky(Hs)
            if float(np.diag(L).min()) ** 2 > 1e-12 * scale:
                break
        except np.linalg.LinAlgError:
            pass
        Hs = Hs + shift * np.eye(n)
        shift *= 100.0

    active = np.zeros(n, dtype=np.int8)  # -1 at lower, +1 at upper, 0 free
    x = np.clip(np.zeros(n), lb, ub)
    if max_iters is None:
        max_iters = 10 * n + 50

    for _ in range(max_iters):
        x = np.where(active == -1, lb, np.where(active == 1, ub, x))
        free = active == 0
        if free.any():
            bound = ~free
            rhs = -(g[free] + Hs[np.ix_(free, bound)] @ x[bound])
            x[free] = np.linalg.solve(Hs[np.ix_(free, free)], rhs)
        lo_viol = free & (x < lb - 1e-12)
        hi_viol = free & (x > ub + 1e-12)
        if lo_viol.any() or hi_viol.any():
            active[lo_viol] = -1
            active[hi_viol] = 1
            x = np.clip(x, lb, ub)
            continue
        grad = Hs @ x + g
        rel_lo = (active == -1) & (grad < -tol)
        rel_hi = (active == 1) & (grad > tol)
        if not (rel_lo.any() or rel_hi.any()):
            return np.clip(x, lb, ub)
        score = np.where(rel_lo, -grad, 0.0) + np.where(rel_hi, grad, 0.0)
        active[int(np.argmax(score))] = 0

    # safety net: projected Gauss-Seidel, globally convergent for PD H
    x = np.clip(x, lb, ub)
    diag = np.diag(Hs)
    for _ in range(20000):
        x_prev = x.copy()
        for i in range(n):
            r = g[i] + Hs[i] @ x - diag[i] * x[i]
            x[i] = min(max(-r / diag[i], lb[i]), ub[i])
        if np.abs(x - x_prev).max() < 1e-14:
            break
    return x


def kkt_residual(H, g, lb, ub, x, atol: float = 1e-9) -> float:
    """Largest per-coordinate KKT violation of a candidate box-QP solution."""
    H = np.asarray(H, dtype=float)
    grad = 0.5 * (H + H.T) @ x + np.asarray(g, dtype=float)
    res = 0.0
    for i in range(len(grad)):
        at_lo = x[i] <= lb[i] + atol
        at_hi = x[i] >= ub[i] - atol
        if at_lo and at_hi:
            continue  # pinned coordinate, any gradient is consistent
        if at_lo:
            res = max(res, max(0.0, -grad[i]))
        elif at_hi:
            res = max(res, max(0.0, grad[i]))
        else:
            res = max(res, abs(grad[i]))
    return res


def task_residual(task: Task, model: ChainModel, q) -> tuple[np.ndarray, np.ndarray]:
    """(residual e, task Jacobian J) such that J qd ~ -de/dt."""
    if task.kind == EE_POSE:
        current = forward_kinematics(model, q, "end_effector")
        target: Pose = task.target
        e = np.concatenate(
            [
                target.translation - current.translation,
                rotvec_from_matrix(target.rotation @ current.rotation.T),
            ]
        )
        return e, jacobian(model, q, "end_effector")
    e = np.asarray(task.target, dtype=float) - np.asarray(q, dtype=float)
    return e, np.eye(model.n)


def ik_step(problem: IKProblem, q) -> tuple[np.ndarray, list[float]]:
    """One differential-IK step: returns (joint rates, per-task residual norms).

    Residual norms are weighted: sqrt(e' W e), so zero-weighted components do
    not count toward convergence.
    """
    q = np.asarray(q, dtype=float)
    n = problem.model.n
    H = np.zeros((n, n))
    g = np.zeros(n)
    norms = []
    for task in problem.tasks:
        e, J = task_residual(task, problem.model, q)
        W = _weight_matrix(task.weight, e.shape[0])
        H += J.T @ W @ J
        g -= task.gain * (J.T @ (W @ e))
        norms.append(float(np.sqrt(max(0.0, e @ (W @ e)))))
    if problem.lm_damping > 0:
        H = H + problem.lm_damping * sum(r * r for r in norms) * np.eye(n)

    k = problem.limit_gain / problem.dt
    lb = np.maximum(-problem.velocity_limits, (problem.lower - q) * k)
    ub = np.minimum(problem.velocity_limits, (problem.upper - q) * k)
    if problem.frozen is not None:
        lb = np.where(problem.frozen, 0.0, lb)
        ub = np.where(problem.frozen, 0.0, ub)
    qdot = solve_box_qp(H, g, lb, ub)
    return qdot, norms


def _converged(problem: IKProblem, norms: list[float]) -> bool:
    pose_norms = [r for t, r in zip(problem.tasks, norms) if t.kind == EE_POSE]
    checked = pose_norms if pose_norms else norms
    return max(checked) < problem.tol


def ik_solve(problem: IKProblem, q0) -> tuple[np.ndarray, bool, int]:
    """Iterate ik_step from q0 until the pose residual drops below tol.

    Returns (q_star, converged, iterations); q_star is always within the
    position limits.
    """
    q = np.clip(np.asarray(q0, dtype=float), problem.lower, problem.upper)
    for it in range(problem.max_iters):
        qdot, norms = ik_step(problem, q)
        if _converged(problem, norms):
            return q, True, it
        q = np.clip(q + qdot * problem.dt, problem.lower, problem.upper)
    _, norms = ik_step(problem, q)
    return q, _converged(problem, norms), problem.max_iters


def split_base_refs(q) -> tuple[float, float, np.ndarray]:
    """Split an 8-DoF solution into (base height ref, base pitch ref, arm command)."""
    q = np.asarray(q, dtype=float).reshape(8)
    return float(q[0]), float(q[1]), q[2:].copy()


def join_base_refs(h: float, theta: float, arm) -> np.ndarray:
    arm = np.asarray(arm, dtype=float).reshape(6)
    return np.concatenate([[h, theta], arm])
