"""Planar n-link revolute arm: kinematics, link geometry, and inverse kinematics."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .geometry import ConvexShape, Pose2, normalize_angle, wrap_angles

IK_POSITION_TOL = 1e-4   # meters
IK_HEADING_TOL = 1e-3    # radians


@dataclass(frozen=True)
class EEPose:
    """Workspace goal for the arm tip. Heading is only a constraint when
    ``heading_matters`` is set."""

    x: float
    y: float
    heading: float = 0.0
    heading_matters: bool = False

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "heading", normalize_angle(float(self.heading)))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class ArmModel:
    """Serial chain of rectangular links joined by revolute joints.

    links: (length, half_width) pairs from proximal to distal, meters.
    joint_limits: (lo, hi) bounds per joint, radians.
    """

    base: Pose2
    links: tuple[tuple[float, float], ...]
    joint_limits: tuple[tuple[float, float], ...]

    def __post_init__(self):
        links = tuple((float(l), float(w)) for l, w in self.links)
        limits = tuple((float(lo), float(hi)) for lo, hi in self.joint_limits)
        k = len(links)
        if not 3 <= k <= 8:
            raise ValueError(f"arm must have between 3 and 8 links, got {k}")
        if len(limits) != k:
            raise ValueError("one joint limit pair required per link")
        if any(l <= 0.0 or w <= 0.0 for l, w in links):
            raise ValueError("link lengths and half-widths must be positive")
        if any(lo >= hi for lo, hi in limits):
            raise ValueError("joint limits must satisfy lo < hi")
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "joint_limits", limits)

    @property
    def dof(self) -> int:
        return len(self.links)

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([l for l, _ in self.links])

    @cached_property
    def half_widths(self) -> np.ndarray:
        return np.array([w for _, w in self.links])

    @cached_property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.joint_limits])

    @cached_property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.joint_limits])

    @property
    def reach(self) -> float:
        return float(self.lengths.sum())

    def fingerprint(self) -> tuple:
        return (self.base.x, self.base.y, self.base.heading, self.links, self.joint_limits)


def _check_config(arm: ArmModel, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (arm.dof,):
        raise ValueError(f"configuration must have {arm.dof} joint angles, got shape {q.shape}")
    return q


def within_limits(arm: ArmModel, q) -> bool:
    q = _check_config(arm, q)
    return bool((q >= arm.lower).all() and (q <= arm.upper).all())


def chain_points(arm: ArmModel, Q) -> tuple[np.ndarray, np.ndarray]:
    """Joint origins and cumulative link headings for a batch of configurations.

    Returns (origins, headings) with origins of shape (M, K+1, 2) where row
    K is the arm tip, and headings of shape (M, K). Headings are raw sums,
    not normalized.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape[1] != arm.dof:
        raise ValueError(f"expected {arm.dof} joint angles per configuration")
    headings = arm.base.heading + np.cumsum(Q, axis=1)
    steps = arm.lengths[None, :, None] * np.stack([np.cos(headings), np.sin(headings)], axis=-1)
    origins = np.empty((Q.shape[0], arm.dof + 1, 2))
    origins[:, 0] = (arm.base.x, arm.base.y)
    origins[:, 1:] = origins[:, :1] + np.cumsum(steps, axis=1)
    return origins, headings


def forward_kinematics(arm: ArmModel, q) -> tuple[list[Pose2], EEPose]:
    """Pose of each link frame (proximal joint, link heading) and the tip pose."""
    q = _check_config(arm, q)
    origins, headings = chain_points(arm, q)
    link_poses = [
        Pose2(origins[0, i, 0], origins[0, i, 1], headings[0, i]) for i in range(arm.dof)
    ]
    ee = EEPose(origins[0, -1, 0], origins[0, -1, 1], headings[0, -1])
    return link_poses, ee


def link_shapes(arm: ArmModel, q) -> list[ConvexShape]:
    """One world-frame rectangle per link, length x 2*half_width."""
    link_poses, _ = forward_kinematics(arm, q)
    shapes = []
    for (length, hw), pose in zip(arm.links, link_poses):
        local = ConvexShape([(0.0, -hw), (length, -hw), (length, hw), (0.0, hw)])
        c, s = math.cos(pose.heading), math.sin(pose.heading)
        rot = np.array([[c, -s], [s, c]])
        shapes.append(ConvexShape(local.vertices @ rot.T + np.array([pose.x, pose.y])))
    return shapes


def ee_jacobian(arm: ArmModel, q) -> np.ndarray:
    """Analytic 3xK Jacobian of the tip (x, y, heading) w.r.t. joint angles."""
    q = _check_config(arm, q)
    _, headings = chain_points(arm, q)
    th = headings[0]
    lsin = arm.lengths * np.sin(th)
    lcos = arm.lengths * np.cos(th)
    # column j sums contributions of links j..K-1
    jx = -np.cumsum(lsin[::-1])[::-1]
    jy = np.cumsum(lcos[::-1])[::-1]
    return np.vstack([jx, jy, np.ones(arm.dof)])


def _batch_jacobians(arm: ArmModel, headings: np.ndarray, with_heading: bool) -> np.ndarray:
    lsin = arm.lengths[None, :] * np.sin(headings)
    lcos = arm.lengths[None, :] * np.cos(headings)
    jx = -np.cumsum(lsin[:, ::-1], axis=1)[:, ::-1]
    jy = np.cumsum(lcos[:, ::-1], axis=1)[:, ::-1]
    rows = [jx, jy]
    if with_heading:
        rows.append(np.ones_like(jx))
    return np.stack(rows, axis=1)  # (M, d, K)


def goal_seed(target: EEPose) -> int:
    """Stable 32-bit seed derived from a goal pose, independent of PYTHONHASHSEED."""
    raw = np.array([target.x, target.y, target.heading], dtype=np.float64).tobytes()
    raw += b"\x01" if target.heading_matters else b"\x00"
    return int.from_bytes(hashlib.blake2b(raw, digest_size=4).digest(), "little")


def solve_ik(
    arm: ArmModel,
    target: EEPose,
    restarts: int = 10,
    rng_seed: int = 0,
    max_iters: int = 200,
    damping: float = 1e-3,
) -> list[np.ndarray]:
    """Damped-least-squares IK with random restarts uniform in the joint limits.

    Returns up to ``restarts`` distinct in-limit configurations whose tip
    position error is below 1e-4 m (and heading error below 1e-3 rad when the
    target heading matters). Empty list when nothing converges, which is how
    unreachable targets are reported.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    dist_to_base = math.hypot(target.x - arm.base.x, target.y - arm.base.y)
    if dist_to_base > arm.reach + 1e-9:
        return []

    rng = np.random.default_rng(rng_seed)
    Q = rng.uniform(arm.lower, arm.upper, size=(restarts, arm.dof))
    goal_xy = np.array([target.x, target.y])
    d = 3 if target.heading_matters else 2
    damp = damping * damping * np.eye(d)

    converged = np.zeros(restarts, dtype=bool)
    active = np.arange(restarts)
    best_err = np.full(restarts, np.inf)
    stall_window = 25
    lengths = arm.lengths
    base_heading = arm.base.heading
    lam2 = damping * damping

    for it in range(max_iters):
        ang = base_heading + np.cumsum(Q[active], axis=1)     # (A, K)
        lc = lengths * np.cos(ang)
        ls = lengths * np.sin(ang)
        ex = (target.x - arm.base.x) - lc.sum(axis=1)
        ey = (target.y - arm.base.y) - ls.sum(axis=1)
        if target.heading_matters:
            eh = wrap_angles(target.heading - ang[:, -1])
        pnorm = np.hypot(ex, ey)
        done = pnorm < IK_POSITION_TOL * 0.5
        if target.heading_matters:
            done &= np.abs(eh) < IK_HEADING_TOL * 0.5
        if done.any():
            converged[active[done]] = True
            keep = ~done
            active = active[keep]
            if len(active) == 0:
                break
            ex, ey, pnorm, lc, ls = ex[keep], ey[keep], pnorm[keep], lc[keep], ls[keep]
            if target.heading_matters:
                eh = eh[keep]
        # drop restarts that stopped making progress toward the target
        if it and it % stall_window == 0:
            hopeful = (pnorm < 0.99 * best_err[active]) | (pnorm < 10 * IK_POSITION_TOL)
            best_err[active] = np.minimum(best_err[active], pnorm)
            if not hopeful.all():
                active = active[hopeful]
                if len(active) == 0:
                    break
                ex, ey, lc, ls = ex[hopeful], ey[hopeful], lc[hopeful], ls[hopeful]
                if target.heading_matters:
                    eh = eh[hopeful]
        else:
            best_err[active] = np.minimum(best_err[active], pnorm)
        jx = -np.cumsum(ls[:, ::-1], axis=1)[:, ::-1]          # (A, K)
        jy = np.cumsum(lc[:, ::-1], axis=1)[:, ::-1]
        if target.heading_matters:
            J = np.stack([jx, jy, np.ones_like(jx)], axis=1)   # (A, 3, K)
            err = np.stack([ex, ey, eh], axis=1)
            A = J @ np.transpose(J, (0, 2, 1)) + lam2 * np.eye(3)[None]
            y = np.linalg.solve(A, err[:, :, None])
            dq = (np.transpose(J, (0, 2, 1)) @ y)[:, :, 0]
        else:
            # closed-form damped 2x2 normal equations
            a11 = (jx * jx).sum(axis=1) + lam2
            a12 = (jx * jy).sum(axis=1)
            a22 = (jy * jy).sum(axis=1) + lam2
            det = a11 * a22 - a12 * a12
            y1 = (a22 * ex - a12 * ey) / det
            y2 = (a11 * ey - a12 * ex) / det
            dq = jx * y1[:, None] + jy * y2[:, None]
        norms = np.sqrt((dq * dq).sum(axis=1))
        scale = np.minimum(1.0, 0.5 / np.where(norms < 1e-12, 1.0, norms))
        Q[active] = np.clip(Q[active] + dq * scale[:, None], arm.lower, arm.upper)

    origins, headings = chain_points(arm, Q)
    err_p = np.linalg.norm(goal_xy[None, :] - origins[:, -1], axis=1)
    ok = err_p < IK_POSITION_TOL
    if target.heading_matters:
        err_h = np.abs(wrap_angles(target.heading - headings[:, -1]))
        ok &= err_h < IK_HEADING_TOL

    solutions: list[np.ndarray] = []
    for i in np.flatnonzero(ok):
        q = Q[i]
        if all(np.abs(q - s).max() > 1e-6 for s in solutions):
            solutions.append(q.copy())
    return solutions
