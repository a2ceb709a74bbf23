"""Sparse probabilistic roadmap with cached shortest-path and alternate-path queries.

Construction samples collision-free configurations (uniform over the four
most proximal joints, remaining joints held fixed), connects each node to
its nearest neighbors through collision-checked straight edges, prunes
everything outside the largest connected component, and caches an
all-pairs-shortest-paths solution set (per-source distance and next-hop
tables). Loopless alternate paths between node pairs are computed with
Yen's algorithm and memoized, which is what edge invalidation falls back on.
"""

from __future__ import annotations

import heapq
import io
import json
import zipfile
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _sparse_dijkstra

from .collision import Scene, config_in_collision, configs_in_collision, edge_in_collision
from .geometry import wrap_angles
from .robot import ArmModel, EEPose, chain_points, goal_seed, solve_ik

SAMPLED_JOINTS = 4
_SAMPLE_BATCH = 1024
_GOAL_MATCH_POS_TOL = 1e-4
_GOAL_MATCH_HEADING_TOL = 1e-3


class RoadmapBuildError(RuntimeError):
    """Raised when sampling cannot collect the requested number of nodes."""


@dataclass(frozen=True)
class RoadmapParams:
    n_nodes: int = 1000
    k_neighbors: int = 10
    k_paths: int = 3
    rng_seed: int = 0
    # values held by joints beyond the four most proximal while sampling;
    # None means the midpoint of each joint's limits
    distal_values: tuple[float, ...] | None = None
    max_sample_attempts: int = 1_000_000
    connect_scan_limit: int = 50

    def __post_init__(self):
        if self.n_nodes < 2 or self.k_neighbors < 1 or self.k_paths < 1:
            raise ValueError("n_nodes >= 2, k_neighbors >= 1 and k_paths >= 1 required")
        if self.distal_values is not None:
            object.__setattr__(self, "distal_values", tuple(float(v) for v in self.distal_values))


def _edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u <= v else (v, u)


class Roadmap:
    """Immutable-after-build roadmap: nodes, weighted edges and path caches."""

    def __init__(self, nodes, edge_list, edge_weights, apsp_dist, apsp_next,
                 scene_name: str, params: RoadmapParams,
                 ksp_cache: dict | None = None, ksp_kmax: dict | None = None):
        self.nodes = np.asarray(nodes, dtype=float)
        self.edge_list = [(int(u), int(v)) for u, v in edge_list]
        self.edge_weights = np.asarray(edge_weights, dtype=float)
        self.apsp_dist = np.asarray(apsp_dist, dtype=float)
        self.apsp_next = np.asarray(apsp_next, dtype=np.int32)
        self.scene_name = scene_name
        self.params = params
        self.ksp_cache: dict[tuple[int, int], list[tuple[int, ...]]] = ksp_cache or {}
        self._ksp_kmax: dict[tuple[int, int], int] = ksp_kmax or {}
        self._adj: list[list[tuple[int, float]]] | None = None
        self._node_ee: tuple[tuple, np.ndarray, np.ndarray] | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edge_list)

    def adjacency(self) -> list[list[tuple[int, float]]]:
        if self._adj is None:
            adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n_nodes)]
            for (u, v), w in zip(self.edge_list, self.edge_weights):
                adj[u].append((v, float(w)))
                adj[v].append((u, float(w)))
            for lst in adj:
                lst.sort()
            self._adj = adj
        return self._adj

    def shortest_node_path(self, u: int, v: int) -> list[int]:
        """Reconstruct the cached shortest path by walking next-hop entries."""
        path = [u]
        node = u
        while node != v:
            node = int(self.apsp_next[node, v])
            path.append(node)
        return path

    def path_length(self, node_path) -> float:
        pts = self.nodes[list(node_path)]
        return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())

    def node_tip_poses(self, arm: ArmModel) -> tuple[np.ndarray, np.ndarray]:
        """Tip positions (N, 2) and headings (N,) of all nodes, cached per arm."""
        fp = arm.fingerprint()
        if self._node_ee is None or self._node_ee[0] != fp:
            origins, headings = chain_points(arm, self.nodes)
            self._node_ee = (fp, origins[:, -1].copy(), wrap_angles(headings[:, -1]))
        return self._node_ee[1], self._node_ee[2]


def _sample_nodes(scene: Scene, arm: ArmModel, params: RoadmapParams) -> np.ndarray:
    rng = np.random.default_rng(params.rng_seed)
    n_sampled = min(SAMPLED_JOINTS, arm.dof)
    if params.distal_values is not None:
        distal = np.asarray(params.distal_values, dtype=float)
        if len(distal) != arm.dof - n_sampled:
            raise ValueError("distal_values must cover every non-sampled joint")
    else:
        distal = (arm.lower[n_sampled:] + arm.upper[n_sampled:]) / 2.0

    collected: list[np.ndarray] = []
    attempts = 0
    while sum(len(c) for c in collected) < params.n_nodes:
        if attempts >= params.max_sample_attempts:
            raise RoadmapBuildError(
                f"could not sample {params.n_nodes} collision-free nodes for scene "
                f"{scene.name!r} within {params.max_sample_attempts} attempts"
            )
        batch = np.empty((_SAMPLE_BATCH, arm.dof))
        batch[:, :n_sampled] = rng.uniform(
            arm.lower[:n_sampled], arm.upper[:n_sampled], size=(_SAMPLE_BATCH, n_sampled)
        )
        batch[:, n_sampled:] = distal
        attempts += _SAMPLE_BATCH
        free = batch[~configs_in_collision(arm, scene, batch)]
        if len(free):
            collected.append(free)
    return np.vstack(collected)[: params.n_nodes]


def _connect_knn(scene: Scene, arm: ArmModel, nodes: np.ndarray, k: int):
    """Connect each node to its k nearest neighbors reachable by a
    collision-free straight edge. Edge results are cached symmetrically."""
    n = len(nodes)
    diffs = nodes[:, None, :] - nodes[None, :, :]
    dist = np.linalg.norm(diffs, axis=2)
    order = np.argsort(dist, axis=1, kind="stable")
    status: dict[tuple[int, int], bool] = {}
    degree = np.zeros(n, dtype=int)
    edges: list[tuple[int, int]] = []
    weights: list[float] = []
    for i in range(n):
        for j in order[i]:
            if degree[i] >= k:
                break
            j = int(j)
            if j == i:
                continue
            key = _edge_key(i, j)
            known = status.get(key)
            if known is not None:
                continue  # already connected (counted at creation) or known blocked
            ok = not edge_in_collision(arm, scene, nodes[i], nodes[j])
            status[key] = ok
            if ok:
                edges.append(key)
                weights.append(float(dist[i, j]))
                degree[i] += 1
                degree[j] += 1
    return edges, weights


def _largest_component(n: int, edges: list[tuple[int, int]]) -> np.ndarray:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = np.full(n, -1, dtype=int)
    comp = 0
    for root in range(n):
        if seen[root] >= 0:
            continue
        stack = [root]
        seen[root] = comp
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if seen[y] < 0:
                    seen[y] = comp
                    stack.append(y)
        comp += 1
    sizes = np.bincount(seen, minlength=comp)
    best = int(np.argmax(sizes))  # first max wins: lowest-indexed component on ties
    return np.flatnonzero(seen == best)


def _apsp_tables(n: int, edges, weights, adjacency) -> tuple[np.ndarray, np.ndarray]:
    us = np.array([u for u, _ in edges] + [v for _, v in edges], dtype=np.int64)
    vs = np.array([v for _, v in edges] + [u for u, _ in edges], dtype=np.int64)
    ws = np.concatenate([weights, weights])
    graph = csr_matrix((ws, (us, vs)), shape=(n, n))
    dist = _sparse_dijkstra(graph, directed=True)
    nxt = np.full((n, n), -1, dtype=np.int32)
    for u in range(n):
        nbrs = np.array([j for j, _ in adjacency[u]], dtype=np.int64)
        w = np.array([w for _, w in adjacency[u]])
        cand = w[:, None] + dist[nbrs]          # (deg, n)
        nxt[u] = nbrs[np.argmin(cand, axis=0)]  # first minimum: lexicographic tie-break
        nxt[u, u] = u
    return dist, nxt


def build_roadmap(scene: Scene, arm: ArmModel, params: RoadmapParams = RoadmapParams()) -> Roadmap:
    """Build the roadmap for a static scene.

    Sampling, connection, pruning, and the APSP cache are all deterministic
    given (scene, arm, params). Alternate-path entries are memoized on demand
    by :func:`k_shortest_paths` rather than precomputed for every pair.
    """
    nodes = _sample_nodes(scene, arm, params)
    edges, weights = _connect_knn(scene, arm, nodes, params.k_neighbors)
    keep = _largest_component(len(nodes), edges)
    remap = np.full(len(nodes), -1, dtype=int)
    remap[keep] = np.arange(len(keep))
    nodes = nodes[keep]
    kept_edges = []
    kept_weights = []
    for (u, v), w in zip(edges, weights):
        if remap[u] >= 0 and remap[v] >= 0:
            kept_edges.append(_edge_key(int(remap[u]), int(remap[v])))
            kept_weights.append(w)
    rm = Roadmap(
        nodes=nodes,
        edge_list=kept_edges,
        edge_weights=np.array(kept_weights),
        apsp_dist=np.zeros((len(nodes), len(nodes))),
        apsp_next=np.zeros((len(nodes), len(nodes)), dtype=np.int32),
        scene_name=scene.name,
        params=params,
    )
    dist, nxt = _apsp_tables(len(nodes), kept_edges, np.array(kept_weights), rm.adjacency())
    rm.apsp_dist = dist
    rm.apsp_next = nxt
    return rm


# ---------------------------------------------------------------------------
# k shortest loopless paths (Yen)

def _dijkstra_path(adjacency, src: int, dst: int, banned_nodes: set, banned_edges: set):
    """Shortest path carrying the partial path in the heap so that ties break
    on the lexicographically smallest node sequence."""
    heap: list[tuple[float, tuple[int, ...]]] = [(0.0, (src,))]
    done: set[int] = set()
    while heap:
        d, path = heapq.heappop(heap)
        node = path[-1]
        if node in done:
            continue
        if node == dst:
            return d, list(path)
        done.add(node)
        for nbr, w in adjacency[node]:
            if nbr in done or nbr in banned_nodes:
                continue
            if _edge_key(node, nbr) in banned_edges:
                continue
            heapq.heappush(heap, (d + w, path + (nbr,)))
    return float("inf"), None


def _yen(adjacency, weights_of, src: int, dst: int, k: int) -> list[tuple[int, ...]]:
    d0, p0 = _dijkstra_path(adjacency, src, dst, set(), set())
    if p0 is None:
        return []
    paths: list[tuple[float, tuple[int, ...]]] = [(d0, tuple(p0))]
    candidates: list[tuple[float, tuple[int, ...]]] = []
    in_candidates: set[tuple[int, ...]] = set()
    accepted: set[tuple[int, ...]] = {tuple(p0)}
    while len(paths) < k:
        _, prev = paths[-1]
        root_len = 0.0
        for i in range(len(prev) - 1):
            spur = prev[i]
            root = prev[: i + 1]
            banned_edges = {
                _edge_key(p[i], p[i + 1])
                for _, p in paths
                if len(p) > i + 1 and p[: i + 1] == root
            }
            banned_nodes = set(root[:-1])
            ds, ps = _dijkstra_path(adjacency, spur, dst, banned_nodes, banned_edges)
            if ps is not None:
                cand = root[:-1] + tuple(ps)
                if cand not in in_candidates and cand not in accepted:
                    heapq.heappush(candidates, (root_len + ds, cand))
                    in_candidates.add(cand)
            root_len += weights_of(prev[i], prev[i + 1])
        if not candidates:
            break
        length, best = heapq.heappop(candidates)
        in_candidates.discard(best)
        paths.append((length, best))
        accepted.add(best)
    return [p for _, p in paths]


def k_shortest_paths(roadmap: Roadmap, u: int, v: int, k_paths: int | None = None) -> list[list[int]]:
    """Up to k loopless node paths from u to v in non-decreasing length.

    Results are memoized on the roadmap. Ties break on the lexicographically
    smallest node sequence.
    """
    k = roadmap.params.k_paths if k_paths is None else int(k_paths)
    if k < 1:
        raise ValueError("k_paths must be >= 1")
    n = roadmap.n_nodes
    if not (0 <= u < n and 0 <= v < n):
        raise ValueError("nodes out of range")
    if u == v:
        return [[u]]
    key = (u, v)
    if key not in roadmap.ksp_cache or roadmap._ksp_kmax.get(key, 0) < k:
        adjacency = roadmap.adjacency()
        wmap = {edge: float(w) for edge, w in zip(roadmap.edge_list, roadmap.edge_weights)}

        def weight_of(a: int, b: int) -> float:
            return wmap[_edge_key(a, b)]

        roadmap.ksp_cache[key] = [tuple(p) for p in _yen(adjacency, weight_of, u, v, k)]
        roadmap._ksp_kmax[key] = k
    return [list(p) for p in roadmap.ksp_cache[key][:k]]


def invalidate_and_requery(roadmap: Roadmap, blocked_edges, u: int, v: int) -> list[int] | None:
    """First cached alternate path between two nodes that avoids every blocked
    edge, or None when all cached alternatives are blocked. The roadmap graph
    itself is never modified."""
    blocked = {_edge_key(int(a), int(b)) for a, b in blocked_edges}
    for path in k_shortest_paths(roadmap, u, v):
        if all(_edge_key(a, b) not in blocked for a, b in zip(path[:-1], path[1:])):
            return path
    return None


# ---------------------------------------------------------------------------
# query

@dataclass(frozen=True)
class QueryResult:
    """Roadmap query outcome. ``failure`` is one of 'no_ik', 'start_connect',
    'goal_connect' when no path was found."""

    path: np.ndarray | None
    failure: str | None = None
    start_node: int | None = None
    goal_node: int | None = None

    @property
    def ok(self) -> bool:
        return self.path is not None


_CONNECT_CHUNK = 10
_CONNECT_INTERP = 100
# strict subset of the fine interpolation points: a sample blocked here is
# also blocked at full density, so the prescreen can only reject safely
_COARSE_IDX = np.array(list(range(0, _CONNECT_INTERP + 2, 6)) + [_CONNECT_INTERP + 1])


def _nearest_connectable_many(
    roadmap: Roadmap, arm: ArmModel, scene: Scene, qs: np.ndarray
) -> list[int | None]:
    """Nearest connectable node for each query configuration.

    Candidates are scanned in increasing joint-space distance. Every scan
    round prescreens a chunk of candidate edges for all unresolved queries in
    one coarse collision batch; surviving candidates are then verified at
    full edge density, nearest first.
    """
    m, k = qs.shape
    dist = np.linalg.norm(roadmap.nodes[None, :, :] - qs[:, None, :], axis=2)
    order = np.argsort(dist, axis=1, kind="stable")[:, : roadmap.params.connect_scan_limit]
    t_fine = np.linspace(0.0, 1.0, _CONNECT_INTERP + 2)
    t_coarse = t_fine[_COARSE_IDX]
    result: list[int | None] = [None] * m
    # the very nearest node usually connects: try it at full density first
    nearest = order[:, 0]
    deltas0 = roadmap.nodes[nearest] - qs
    samples0 = qs[:, None, :] + t_fine[None, :, None] * deltas0[:, None, :]
    flags0 = configs_in_collision(arm, scene, samples0.reshape(-1, k))
    blocked0 = flags0.reshape(m, len(t_fine)).any(axis=1)
    for qi in np.flatnonzero(~blocked0):
        result[qi] = int(nearest[qi])
    unresolved = [qi for qi in range(m) if result[qi] is None]
    n_rounds = (order.shape[1] + _CONNECT_CHUNK - 1) // _CONNECT_CHUNK
    for r in range(n_rounds):
        if not unresolved:
            break
        lo = r * _CONNECT_CHUNK
        cand = order[unresolved, lo:lo + _CONNECT_CHUNK]          # (U, C)
        u, c = cand.shape
        if c == 0:
            break
        deltas = roadmap.nodes[cand] - qs[unresolved][:, None, :]  # (U, C, K)
        samples = (
            qs[unresolved][:, None, None, :]
            + t_coarse[None, None, :, None] * deltas[:, :, None, :]
        )
        flags = configs_in_collision(arm, scene, samples.reshape(-1, k))
        blocked = flags.reshape(u, c, len(t_coarse)).any(axis=2)
        still = []
        for row, qi in enumerate(unresolved):
            for col in np.flatnonzero(~blocked[row]):
                node = int(cand[row, col])
                if not edge_in_collision(arm, scene, qs[qi], roadmap.nodes[node]):
                    result[qi] = node
                    break
            if result[qi] is None:
                still.append(qi)
        unresolved = still
    return result


def _nearest_connectable(roadmap: Roadmap, arm: ArmModel, scene: Scene, q: np.ndarray) -> int | None:
    return _nearest_connectable_many(roadmap, arm, scene, np.asarray(q, dtype=float)[None, :])[0]


def query(roadmap: Roadmap, arm: ArmModel, scene: Scene, start, goal: EEPose) -> QueryResult:
    """Plan through the roadmap from a start configuration to a tip-pose goal.

    The goal resolves to candidate configurations through IK (collision-free
    solutions only); roadmap nodes whose tip pose already matches the goal
    join the candidate set. Start and each goal candidate connect to the
    nearest node reachable by a collision-free straight edge, and the result
    is start + cached shortest node path + goal for the goal candidate with
    the smallest total length.
    """
    start = np.asarray(start, dtype=float)
    if config_in_collision(arm, scene, start):
        raise ValueError("start configuration is in collision")

    sols = solve_ik(arm, goal, restarts=10, rng_seed=goal_seed(goal))
    candidates = list(sols)
    if candidates:
        flags = configs_in_collision(arm, scene, np.array(candidates))
        candidates = [q for q, bad in zip(candidates, flags) if not bad]
    tip_pos, tip_heading = roadmap.node_tip_poses(arm)
    pos_err = np.linalg.norm(tip_pos - np.array([goal.x, goal.y])[None, :], axis=1)
    matched = pos_err < _GOAL_MATCH_POS_TOL
    if goal.heading_matters:
        dh = np.abs(wrap_angles(tip_heading - goal.heading))
        matched &= dh < _GOAL_MATCH_HEADING_TOL
    candidates.extend(roadmap.nodes[i].copy() for i in np.flatnonzero(matched))
    if not candidates:
        return QueryResult(None, failure="no_ik")

    s_node = _nearest_connectable(roadmap, arm, scene, start)
    if s_node is None:
        return QueryResult(None, failure="start_connect")
    start_leg = float(np.linalg.norm(start - roadmap.nodes[s_node]))

    # every goal connects to its nearest connectable node, which can only be
    # as good as the best node overall: a valid lower bound on each goal's
    # total length, letting the scan stop once no candidate can win
    from_s = roadmap.apsp_dist[s_node]
    bounds = []
    for gi, g in enumerate(candidates):
        to_node = np.linalg.norm(roadmap.nodes - g[None, :], axis=1)
        bounds.append((start_leg + float(np.min(from_s + to_node)), gi))
    bounds.sort()

    best = None
    for lb, gi in bounds:
        if best is not None and lb >= best[0] - 1e-12:
            break
        g = candidates[gi]
        g_node = _nearest_connectable(roadmap, arm, scene, g)
        if g_node is None:
            continue
        total = (
            start_leg
            + float(roadmap.apsp_dist[s_node, g_node])
            + float(np.linalg.norm(roadmap.nodes[g_node] - g))
        )
        if best is None or total < best[0]:
            best = (total, g, g_node)
    if best is None:
        return QueryResult(None, failure="goal_connect")

    _, g, g_node = best
    node_path = roadmap.shortest_node_path(s_node, g_node)
    waypoints = [start] + [roadmap.nodes[i] for i in node_path] + [g]
    deduped = [waypoints[0]]
    for w in waypoints[1:]:
        if np.linalg.norm(w - deduped[-1]) > 1e-12:
            deduped.append(w)
    return QueryResult(np.array(deduped), start_node=s_node, goal_node=g_node)


# ---------------------------------------------------------------------------
# serialization

def _write_deterministic_zip(path, arrays: dict[str, np.ndarray]) -> None:
    """npz-compatible container with fixed timestamps so identical builds
    produce identical bytes."""
    with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(arrays[name]), version=(1, 0))
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            zf.writestr(info, buf.getvalue())


def save_roadmap(roadmap: Roadmap, path) -> None:
    meta = {
        "format_version": 1,
        "scene_name": roadmap.scene_name,
        "params": asdict(roadmap.params),
    }
    keys = sorted(roadmap.ksp_cache)
    flat_nodes: list[int] = []
    path_lens: list[int] = []
    path_counts: list[int] = []
    kmaxes: list[int] = []
    for key in keys:
        paths = roadmap.ksp_cache[key]
        path_counts.append(len(paths))
        kmaxes.append(roadmap._ksp_kmax.get(key, len(paths)))
        for p in paths:
            path_lens.append(len(p))
            flat_nodes.extend(p)
    edge_arr = np.array(roadmap.edge_list, dtype=np.int32).reshape(-1, 2)
    arrays = {
        "meta": np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8),
        "nodes": roadmap.nodes,
        "edges": edge_arr,
        "edge_weights": roadmap.edge_weights,
        "apsp_dist": roadmap.apsp_dist,
        "apsp_next": roadmap.apsp_next,
        "ksp_keys": np.array(keys, dtype=np.int32).reshape(-1, 2),
        "ksp_kmax": np.array(kmaxes, dtype=np.int32),
        "ksp_path_counts": np.array(path_counts, dtype=np.int32),
        "ksp_path_lens": np.array(path_lens, dtype=np.int32),
        "ksp_flat": np.array(flat_nodes, dtype=np.int32),
    }
    _write_deterministic_zip(Path(path), arrays)


def load_roadmap(path) -> Roadmap:
    with np.load(Path(path)) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta.get("format_version") != 1:
            raise ValueError(f"unsupported roadmap format version {meta.get('format_version')!r}")
        pdata = meta["params"]
        if pdata.get("distal_values") is not None:
            pdata["distal_values"] = tuple(pdata["distal_values"])
        params = RoadmapParams(**pdata)
        ksp_cache: dict[tuple[int, int], list[tuple[int, ...]]] = {}
        ksp_kmax: dict[tuple[int, int], int] = {}
        keys = data["ksp_keys"].reshape(-1, 2)
        counts = data["ksp_path_counts"]
        lens = data["ksp_path_lens"]
        flat = data["ksp_flat"]
        li = 0
        fi = 0
        for (u, v), cnt, kmax in zip(keys, counts, data["ksp_kmax"]):
            paths = []
            for _ in range(int(cnt)):
                ln = int(lens[li])
                li += 1
                paths.append(tuple(int(x) for x in flat[fi:fi + ln]))
                fi += ln
            ksp_cache[(int(u), int(v))] = paths
            ksp_kmax[(int(u), int(v))] = int(kmax)
        return Roadmap(
            nodes=data["nodes"],
            edge_list=[(int(u), int(v)) for u, v in data["edges"].reshape(-1, 2)],
            edge_weights=data["edge_weights"],
            apsp_dist=data["apsp_dist"],
            apsp_next=data["apsp_next"],
            scene_name=meta["scene_name"],
            params=params,
            ksp_cache=ksp_cache,
            ksp_kmax=ksp_kmax,
        )
