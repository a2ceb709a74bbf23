"""Sequential-convex trajectory optimizer.

Smooths and shortens a fixed-length waypoint trajectory under a hinge
collision penalty: an exact-penalty outer loop escalates the penalty
coefficient while a box trust-region inner loop takes steps along the
gradient of the linearized merit function. Endpoints stay fixed, joint
limits hold at every accepted iterate, and accepted steps never increase
the merit. Whether the result is actually collision-free is decided by the
independent trajectory checker, never by inspecting cost values.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .collision import Scene, config_in_collision, pair_signed_distances, trajectory_in_collision
from .robot import ArmModel

_FD_STEP = 1e-6


@dataclass(frozen=True)
class OptParams:
    d_safe: float = 0.05             # clearance margin for the hinge penalty, meters
    mu0: float = 10.0                # initial penalty coefficient
    mu_growth: float = 10.0
    max_penalty_rounds: int = 5
    trust_region_init: float = 0.1   # rad, box radius on waypoint updates
    trust_shrink: float = 0.5
    trust_expand: float = 1.5
    trust_min: float = 1e-4
    convergence_tol: float = 1e-4    # stop when merit decrease falls below this
    max_inner_iters: int = 50
    vmax: float | None = None        # optional per-step displacement bound, rad

    def __post_init__(self):
        positive = (
            self.d_safe, self.mu0, self.max_penalty_rounds, self.trust_region_init,
            self.trust_shrink, self.trust_expand, self.trust_min,
            self.convergence_tol, self.max_inner_iters,
        )
        if any(v <= 0 for v in positive) or self.mu_growth <= 1.0:
            raise ValueError("optimizer parameters must be positive with mu_growth > 1")
        if self.vmax is not None and self.vmax <= 0.0:
            raise ValueError("vmax must be positive when set")


@dataclass
class OptResult:
    trajectory: np.ndarray
    converged: bool
    collision_free: bool      # verdict of the independent trajectory checker
    final_cost: float
    iterations: int
    wall_time: float
    merit_log: tuple[tuple[float, ...], ...] = ()


def smoothness_cost(traj) -> float:
    """Sum of squared adjacent waypoint displacements."""
    t = np.asarray(traj, dtype=float)
    d = np.diff(t, axis=0)
    return float((d * d).sum())


def _hinge_sums(arm: ArmModel, scene: Scene, Q: np.ndarray, d_safe: float) -> np.ndarray:
    """Per-configuration sum of hinge penalties over all (link, obstacle) pairs."""
    sd = pair_signed_distances(arm, scene, Q, far_cutoff=d_safe)
    return np.maximum(0.0, d_safe - sd).sum(axis=(1, 2))


def collision_penalty(traj, arm: ArmModel, scene: Scene, d_safe: float) -> float:
    """Sum over waypoints and (link, obstacle) pairs of max(0, d_safe - sd)."""
    t = np.atleast_2d(np.asarray(traj, dtype=float))
    return float(_hinge_sums(arm, scene, t, d_safe).sum())


def velocity_limit_satisfied(traj, vmax: float) -> bool:
    """True when every per-step displacement satisfies the infinity-norm bound."""
    if vmax <= 0.0:
        raise ValueError("vmax must be positive")
    t = np.asarray(traj, dtype=float)
    if len(t) < 2:
        return True
    return bool(np.abs(np.diff(t, axis=0)).max() <= vmax)


def _velocity_violation(traj: np.ndarray, vmax: float | None) -> float:
    if vmax is None or len(traj) < 2:
        return 0.0
    steps = np.abs(np.diff(traj, axis=0)).max(axis=1)
    return float(np.maximum(0.0, steps - vmax).sum())


def _smoothness_gradient_interior(traj: np.ndarray) -> np.ndarray:
    return 2.0 * (2.0 * traj[1:-1] - traj[:-2] - traj[2:])


def _penalty_gradient_interior(arm, scene, traj, d_safe: float) -> np.ndarray:
    """Central finite differences of the per-waypoint hinge sums, batched."""
    interior = traj[1:-1]
    ti, k = interior.shape
    eye = np.eye(k) * _FD_STEP
    plus = interior[:, None, :] + eye[None, :, :]
    minus = interior[:, None, :] - eye[None, :, :]
    batch = np.concatenate([plus.reshape(-1, k), minus.reshape(-1, k)], axis=0)
    sums = _hinge_sums(arm, scene, batch, d_safe)
    p = sums[: ti * k].reshape(ti, k)
    m = sums[ti * k:].reshape(ti, k)
    return (p - m) / (2.0 * _FD_STEP)


def merit_gradient(traj, arm: ArmModel, scene: Scene, mu: float, d_safe: float) -> np.ndarray:
    """Gradient of smoothness + mu * collision penalty w.r.t. the interior
    waypoints; the quantity the inner loop steps along."""
    t = np.asarray(traj, dtype=float)
    return _smoothness_gradient_interior(t) + mu * _penalty_gradient_interior(arm, scene, t, d_safe)


def optimize(seed, arm: ArmModel, scene: Scene, params: OptParams = OptParams()) -> OptResult:
    """Optimize a seed trajectory with fixed endpoints and waypoint count.

    Outer loop: penalty escalation until the hinge penalty is zero or the
    round budget runs out. Inner loop: steepest descent on the merit with a
    backtracking line search inside a shrinking/expanding trust-region box
    intersected with the joint limits. A candidate is accepted only if it
    strictly decreases the merit (and never worsens a velocity-bound
    violation when vmax is set), so accepted merits are non-increasing
    within a round. The optimizer always returns its best iterate; converged
    is True only when progress stalled with zero penalty.
    """
    t0 = time.perf_counter()
    X = np.array(seed, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] != arm.dof:
        raise ValueError(f"seed must be a (T, {arm.dof}) waypoint matrix with T >= 2")
    for endpoint in (X[0], X[-1]):
        if config_in_collision(arm, scene, endpoint):
            raise ValueError("seed endpoints must be collision-free")
    X[1:-1] = np.clip(X[1:-1], arm.lower, arm.upper)

    def interior_penalty(traj: np.ndarray) -> float:
        # endpoint hinge terms are constants of the optimization; keeping them
        # out lets the penalty reach zero even when a fixed endpoint sits
        # inside the safety margin
        return float(_hinge_sums(arm, scene, traj[1:-1], params.d_safe).sum())

    def merit(traj: np.ndarray, mu: float) -> float:
        return smoothness_cost(traj) + mu * interior_penalty(traj)

    mu = params.mu0
    iterations = 0
    merit_log: list[tuple[float, ...]] = []
    converged = False

    if X.shape[0] > 2:
        for _ in range(params.max_penalty_rounds):
            trust = params.trust_region_init
            m_cur = merit(X, mu)
            v_cur = _velocity_violation(X, params.vmax)
            round_merits = [m_cur]
            stalled = False
            for _ in range(params.max_inner_iters):
                iterations += 1
                g = merit_gradient(X, arm, scene, mu, params.d_safe)
                gmax = float(np.abs(g).max())
                if gmax < 1e-12:
                    stalled = True
                    break
                accepted = None
                alpha = trust / gmax
                for _ in range(6):
                    cand = X.copy()
                    step = np.clip(-alpha * g, -trust, trust)
                    cand[1:-1] = np.clip(X[1:-1] + step, arm.lower, arm.upper)
                    if params.vmax is not None:
                        if _velocity_violation(cand, params.vmax) > v_cur + 1e-12:
                            alpha *= 0.5
                            continue
                    m_cand = merit(cand, mu)
                    if m_cand < m_cur - 1e-12:
                        accepted = (cand, m_cand)
                        break
                    alpha *= 0.5
                if accepted is None:
                    trust *= params.trust_shrink
                    if trust < params.trust_min:
                        stalled = True
                        break
                    continue
                X, m_new = accepted
                decrease = m_cur - m_new
                m_cur = m_new
                v_cur = _velocity_violation(X, params.vmax)
                round_merits.append(m_cur)
                trust = min(trust * params.trust_expand, 10.0 * params.trust_region_init)
                if decrease < params.convergence_tol:
                    stalled = True
                    break
            merit_log.append(tuple(round_merits))
            if interior_penalty(X) <= 0.0 and _velocity_violation(X, params.vmax) <= 0.0:
                converged = stalled
                break
            mu *= params.mu_growth
    else:
        converged = True  # nothing to optimize with only fixed endpoints

    wall = time.perf_counter() - t0
    in_collision, _ = trajectory_in_collision(arm, scene, X)
    return OptResult(
        trajectory=X,
        converged=converged,
        collision_free=not in_collision,
        final_cost=merit(X, mu),
        iterations=iterations,
        wall_time=wall,
        merit_log=tuple(merit_log),
    )
