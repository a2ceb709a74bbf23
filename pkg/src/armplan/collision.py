"""Configuration, edge, and trajectory collision predicates.

Checks are vectorized over batches of configurations: link rectangles are
never materialized as polygon objects on the hot path. The boolean tests and
the signed distances share one projection scheme, so ``config_in_collision``
and ``min_clearance`` agree exactly about the zero crossing.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .geometry import ConvexShape, _point_segment_distance
from .robot import ArmModel, chain_points

DEFAULT_EDGE_INTERP = 100

# Clearance reported for a configuration that nothing constrains.
NO_OBSTACLE_CLEARANCE = float("inf")


class _SceneGeom:
    """Flattened obstacle arrays for batched projection queries.

    Obstacle edge normals are deduplicated into unique axis directions (sign
    canonicalized); projections onto a negated axis are exact negations, so
    the grouped tests agree bit-for-bit with the dense per-normal ones.
    """

    __slots__ = (
        "n_obstacles", "verts", "vert_list", "vert_starts", "normals", "norm_starts",
        "own_min", "own_max", "aabbs", "axes", "axis_groups",
    )

    def __init__(self, obstacles: tuple[ConvexShape, ...]):
        self.n_obstacles = len(obstacles)
        if self.n_obstacles == 0:
            return
        verts = [ob.vertices for ob in obstacles]
        normals = [ob.edge_normals() for ob in obstacles]
        self.verts = np.vstack(verts)
        self.vert_list = verts
        self.vert_starts = np.cumsum([0] + [len(v) for v in verts])
        self.normals = np.vstack(normals)
        self.norm_starts = np.cumsum([0] + [len(n) for n in normals])
        own = [v @ n.T for v, n in zip(verts, normals)]
        self.own_min = np.concatenate([o.min(axis=0) for o in own])
        self.own_max = np.concatenate([o.max(axis=0) for o in own])
        self.aabbs = np.array([
            [v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max()] for v in verts
        ])
        axis_ids: dict[bytes, int] = {}
        axes: list[np.ndarray] = []
        assign: dict[tuple[int, int], list[int]] = {}
        for i, nrm in enumerate(self.normals):
            sign = 1 if (nrm[0] > 0.0 or (nrm[0] == 0.0 and nrm[1] > 0.0)) else -1
            canon = sign * nrm
            key = canon.tobytes()
            if key not in axis_ids:
                axis_ids[key] = len(axes)
                axes.append(canon)
            assign.setdefault((axis_ids[key], sign), []).append(i)
        self.axes = np.array(axes)
        self.axis_groups = [
            (aid, sign, np.array(idx)) for (aid, sign), idx in sorted(assign.items())
        ]


@dataclass(frozen=True)
class Scene:
    """Named static obstacle set with optional axis-aligned workspace bounds.

    workspace_bounds is (xmin, ymin, xmax, ymax); None means unbounded.
    """

    name: str
    obstacles: tuple[ConvexShape, ...]
    workspace_bounds: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if self.workspace_bounds is not None:
            xmin, ymin, xmax, ymax = self.workspace_bounds
            if not (xmin < xmax and ymin < ymax):
                raise ValueError("workspace bounds must satisfy xmin < xmax and ymin < ymax")
            object.__setattr__(
                self, "workspace_bounds",
                (float(xmin), float(ymin), float(xmax), float(ymax)),
            )

    @cached_property
    def _geom(self) -> _SceneGeom:
        return _SceneGeom(self.obstacles)


class _RectBatch:
    """Link rectangles for a batch of configurations in implicit (axis) form."""

    __slots__ = ("P", "u", "n", "L", "W", "Pu", "Pn", "xmin", "xmax", "ymin", "ymax")

    def __init__(self, arm: ArmModel, Q: np.ndarray):
        origins, headings = chain_points(arm, Q)
        self.P = origins[:, :-1]                     # (M, K, 2) proximal joint of each link
        cos, sin = np.cos(headings), np.sin(headings)
        self.u = np.stack([cos, sin], axis=-1)       # along-link axis
        self.n = np.stack([-sin, cos], axis=-1)      # across-link axis
        self.L = arm.lengths[None, :]
        self.W = arm.half_widths[None, :]
        self.Pu = (self.P * self.u).sum(-1)          # (M, K)
        self.Pn = (self.P * self.n).sum(-1)
        lux = np.minimum(0.0, self.L * self.u[..., 0])
        luy = np.minimum(0.0, self.L * self.u[..., 1])
        hux = np.maximum(0.0, self.L * self.u[..., 0])
        huy = np.maximum(0.0, self.L * self.u[..., 1])
        wx = self.W * np.abs(self.n[..., 0])
        wy = self.W * np.abs(self.n[..., 1])
        self.xmin = self.P[..., 0] + lux - wx
        self.xmax = self.P[..., 0] + hux + wx
        self.ymin = self.P[..., 1] + luy - wy
        self.ymax = self.P[..., 1] + huy + wy

    def corners(self) -> np.ndarray:
        """Explicit rectangle corners, shape (M, K, 4, 2), counter-clockwise."""
        lu = (self.L[..., None] * self.u)[:, :, None, :]
        wn = (self.W[..., None] * self.n)[:, :, None, :]
        base = self.P[:, :, None, :]
        zero = np.zeros_like(lu)
        along = np.concatenate([zero, lu, lu, zero], axis=2)
        across = np.concatenate([-wn, -wn, wn, wn], axis=2)
        return base + along + across


def _reduceat_any(a: np.ndarray, starts: np.ndarray) -> np.ndarray:
    return np.logical_or.reduceat(a, starts, axis=-1)


def _obstacle_projections(geom: _SceneGeom, rb: _RectBatch):
    """Projection extents needed by both the boolean test and signed distances."""
    # rectangle extents on every obstacle edge normal
    Pn_all = rb.P @ geom.normals.T                       # (M, K, Nt)
    du = rb.u @ geom.normals.T
    dn = np.abs(rb.n @ geom.normals.T) * rb.W[..., None]
    Ldu = rb.L[..., None] * du
    rmin = Pn_all + np.minimum(0.0, Ldu) - dn
    rmax = Pn_all + np.maximum(0.0, Ldu) + dn
    # obstacle extents on both rectangle axes
    vu = rb.u @ geom.verts.T                             # (M, K, Vt)
    vn = rb.n @ geom.verts.T
    starts = geom.vert_starts[:-1]
    vu_min = np.minimum.reduceat(vu, starts, axis=-1)    # (M, K, O)
    vu_max = np.maximum.reduceat(vu, starts, axis=-1)
    vn_min = np.minimum.reduceat(vn, starts, axis=-1)
    vn_max = np.maximum.reduceat(vn, starts, axis=-1)
    return rmin, rmax, vu_min, vu_max, vn_min, vn_max


def _hit_mask(geom: _SceneGeom, rb: _RectBatch, proj) -> np.ndarray:
    """(M, K, O) boolean: link rectangle overlaps or touches obstacle."""
    rmin, rmax, vu_min, vu_max, vn_min, vn_max = proj
    sep_norm = (rmin > geom.own_max) | (rmax < geom.own_min)
    sep = _reduceat_any(sep_norm, geom.norm_starts[:-1])
    Pu = rb.Pu[..., None]
    Pn = rb.Pn[..., None]
    L = rb.L[..., None]
    W = rb.W[..., None]
    sep |= (vu_max < Pu) | (vu_min > Pu + L)
    sep |= (vn_max < Pn - W) | (vn_min > Pn + W)
    return ~sep


def _bounds_margins(scene: Scene, rb: _RectBatch) -> np.ndarray:
    """Per-configuration containment margin; negative means outside bounds."""
    if scene.workspace_bounds is None:
        return np.full(rb.P.shape[0], np.inf)
    xmin, ymin, xmax, ymax = scene.workspace_bounds
    m = np.minimum.reduce([
        rb.xmin - xmin, xmax - rb.xmax, rb.ymin - ymin, ymax - rb.ymax,
    ])
    return m.min(axis=1)


def _hit_mask_fast(geom: _SceneGeom, rb: _RectBatch) -> np.ndarray:
    """(M, K, O) overlap flags, bit-identical to :func:`_hit_mask` but cheaper:
    obstacle-normal axes are tested via the deduplicated direction set and the
    rectangle-axis test runs only on pairs the first test leaves unseparated."""
    m, k = rb.Pu.shape
    nt = len(geom.normals)
    pa = rb.P @ geom.axes.T                                  # (M, K, A)
    du = rb.u @ geom.axes.T
    dn = np.abs(rb.n @ geom.axes.T) * rb.W[..., None]
    ldu = rb.L[..., None] * du
    rmin_a = pa + np.minimum(0.0, ldu) - dn
    rmax_a = pa + np.maximum(0.0, ldu) + dn
    sep_norm = np.empty((m, k, nt), dtype=bool)
    for aid, sign, idx in geom.axis_groups:
        if sign > 0:
            lo, hi = rmin_a[:, :, aid, None], rmax_a[:, :, aid, None]
        else:
            lo, hi = -rmax_a[:, :, aid, None], -rmin_a[:, :, aid, None]
        sep_norm[:, :, idx] = (lo > geom.own_max[idx]) | (hi < geom.own_min[idx])
    sep = _reduceat_any(sep_norm, geom.norm_starts[:-1])     # (M, K, O)

    hit = np.zeros((m, k, geom.n_obstacles), dtype=bool)
    for o in range(geom.n_obstacles):
        mi, ki = np.nonzero(~sep[:, :, o])
        if len(mi) == 0:
            continue
        vo = geom.vert_list[o]
        u_sel = rb.u[mi, ki]
        n_sel = rb.n[mi, ki]
        vu = u_sel @ vo.T
        vn = n_sel @ vo.T
        pu = rb.Pu[mi, ki]
        pn = rb.Pn[mi, ki]
        ln = rb.L[0, ki]
        w = rb.W[0, ki]
        sep2 = (vu.max(axis=1) < pu) | (vu.min(axis=1) > pu + ln)
        sep2 |= (vn.max(axis=1) < pn - w) | (vn.min(axis=1) > pn + w)
        hit[mi, ki, o] = ~sep2
    return hit


def configs_in_collision(arm: ArmModel, scene: Scene, Q) -> np.ndarray:
    """Boolean flags for a batch of configurations of shape (M, K)."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    rb = _RectBatch(arm, Q)
    out = _bounds_margins(scene, rb) <= 0.0
    geom = scene._geom
    if geom.n_obstacles:
        out |= _hit_mask_fast(geom, rb).any(axis=(1, 2))
    return out


def config_in_collision(arm: ArmModel, scene: Scene, q) -> bool:
    return bool(configs_in_collision(arm, scene, q)[0])


def _penetrations(geom: _SceneGeom, rb: _RectBatch, proj) -> np.ndarray:
    """(M, K, O) minimum translation magnitudes; only meaningful where hit."""
    rmin, _, vu_min, vu_max, vn_min, vn_max = proj
    push_norm = np.minimum.reduceat(geom.own_max - rmin, geom.norm_starts[:-1], axis=-1)
    Pu = rb.Pu[..., None]
    Pn = rb.Pn[..., None]
    L = rb.L[..., None]
    W = rb.W[..., None]
    pen = np.minimum.reduce([
        push_norm,
        vu_max - Pu,
        (Pu + L) - vu_min,
        vn_max - (Pn - W),
        (Pn + W) - vn_min,
    ])
    return pen


def _aabb_gap_lower_bound(geom: _SceneGeom, rb: _RectBatch) -> np.ndarray:
    """(M, K, O) lower bound on the separation distance from AABBs."""
    ob = geom.aabbs
    gx = np.maximum(
        np.maximum(ob[None, None, :, 0] - rb.xmax[..., None],
                   rb.xmin[..., None] - ob[None, None, :, 2]),
        0.0,
    )
    gy = np.maximum(
        np.maximum(ob[None, None, :, 1] - rb.ymax[..., None],
                   rb.ymin[..., None] - ob[None, None, :, 3]),
        0.0,
    )
    return np.hypot(gx, gy)


def pair_signed_distances(
    arm: ArmModel, scene: Scene, Q, far_cutoff: float | None = None
) -> np.ndarray:
    """Signed distance for every (configuration, link, obstacle) triple.

    Shape (M, K, O). With ``far_cutoff`` set, pairs whose AABB gap already
    proves a separation of at least the cutoff are reported as that lower
    bound instead of the exact distance; hinge penalties with threshold
    <= far_cutoff are unaffected.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    geom = scene._geom
    if geom.n_obstacles == 0:
        return np.full((Q.shape[0], arm.dof, 0), np.inf)
    rb = _RectBatch(arm, Q)
    proj = _obstacle_projections(geom, rb)
    hit = _hit_mask(geom, rb, proj)
    pen = _penetrations(geom, rb, proj)
    sd = np.where(hit, np.where(pen > 0.0, -pen, 0.0), 0.0)

    lower = _aabb_gap_lower_bound(geom, rb)
    if far_cutoff is None:
        need_exact = ~hit
        sd = np.where(need_exact, 0.0, sd)
    else:
        far = ~hit & (lower >= far_cutoff)
        sd = np.where(far, lower, sd)
        need_exact = ~hit & ~far

    if need_exact.any():
        corners = rb.corners()
        for o in range(geom.n_obstacles):
            mask = need_exact[:, :, o]
            if not mask.any():
                continue
            vo = geom.verts[geom.vert_starts[o]:geom.vert_starts[o + 1]]
            sel = corners[mask]                       # (S, 4, 2)
            b0 = vo
            b1 = np.roll(vo, -1, axis=0)
            d1 = _point_segment_distance(
                sel[:, :, None, :], b0[None, None, :, :], b1[None, None, :, :]
            ).min(axis=(1, 2))
            a0 = sel
            a1 = np.roll(sel, -1, axis=1)
            d2 = _point_segment_distance(
                vo[None, :, None, :], a0[:, None, :, :], a1[:, None, :, :]
            ).min(axis=(1, 2))
            sd[:, :, o][mask] = np.minimum(d1, d2)
    return sd


def min_clearance(arm: ArmModel, scene: Scene, q) -> float:
    """Smallest signed distance over all (link, obstacle) pairs, folded with
    the workspace containment margin. Unconstrained configurations report a
    large sentinel (infinity)."""
    q = np.asarray(q, dtype=float)
    rb = _RectBatch(arm, q[None, :])
    margin = float(_bounds_margins(scene, rb)[0])
    if scene._geom.n_obstacles == 0:
        return min(NO_OBSTACLE_CLEARANCE, margin)
    sd = pair_signed_distances(arm, scene, q[None, :])
    return min(float(sd.min()), margin)


def interpolate_configs(q1, q2, n_interp: int) -> np.ndarray:
    """Endpoints plus n_interp uniformly spaced intermediate configurations."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    t = np.linspace(0.0, 1.0, n_interp + 2)
    return q1[None, :] + t[:, None] * (q2 - q1)[None, :]


def edge_in_collision(arm: ArmModel, scene: Scene, q1, q2, n_interp: int = DEFAULT_EDGE_INTERP) -> bool:
    """True when any of the interpolated configurations along the straight
    joint-space segment (endpoints included) is in collision."""
    return bool(configs_in_collision(arm, scene, interpolate_configs(q1, q2, n_interp)).any())


def trajectory_in_collision(
    arm: ArmModel, scene: Scene, traj, n_interp: int = DEFAULT_EDGE_INTERP
) -> tuple[bool, int | None]:
    """Fine-grained validation of a waypoint trajectory.

    Every adjacent waypoint pair is checked with ``n_interp`` intermediate
    configurations. Returns (flag, index of the first offending segment).
    """
    traj = np.asarray(traj, dtype=float)
    if traj.ndim != 2 or traj.shape[0] < 2:
        raise ValueError("trajectory needs at least 2 waypoints")
    t = np.linspace(0.0, 1.0, n_interp + 2)
    starts = traj[:-1]
    deltas = np.diff(traj, axis=0)
    samples = starts[:, None, :] + t[None, :, None] * deltas[:, None, :]
    flags = configs_in_collision(arm, scene, samples.reshape(-1, traj.shape[1]))
    if not flags.any():
        return False, None
    first = int(np.flatnonzero(flags)[0])
    return True, first // (n_interp + 2)
