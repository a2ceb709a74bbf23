"""Authored benchmark environments, test-case generation, and file formats.

The four scenes are planar, desk-scale analogs of common manipulation
setups, ordered roughly by difficulty: an open tabletop split by a slender
pole, a tabletop with a U-shaped container, a kitchen with counters and
ledges, and a shelf whose slots are barely wider than the arm links.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import RRTParams, rrt_plan
from .collision import Scene, config_in_collision
from .geometry import ConvexShape, Pose2
from .robot import ArmModel, EEPose, forward_kinematics, goal_seed, solve_ik

FORMAT_VERSION = 1
SCENE_NAMES = ("tabletop_pole", "tabletop_container", "kitchen", "shelf_boxes")

MAX_SAMPLE_ATTEMPTS = 1_000_000

DEFAULT_BASE = Pose2(0.0, 0.0, math.pi / 2)
DEFAULT_LINKS = ((0.50, 0.040), (0.40, 0.035), (0.30, 0.030), (0.20, 0.025))
DEFAULT_JOINT_LIMITS = ((-2.96, 2.96), (-2.53, 2.53), (-2.53, 2.53), (-2.53, 2.53))


class GenerationError(RuntimeError):
    """Raised when rejection sampling cannot produce the requested cases."""


def default_arm() -> ArmModel:
    """The 4-link desk arm every authored scene is designed around."""
    return ArmModel(base=DEFAULT_BASE, links=DEFAULT_LINKS, joint_limits=DEFAULT_JOINT_LIMITS)


def _box(xmin, ymin, xmax, ymax) -> ConvexShape:
    return ConvexShape.box(xmin, ymin, xmax, ymax)


def build_scene(name: str) -> Scene:
    """Deterministic hand-authored scene by name."""
    bounds = (-1.6, -0.6, 1.6, 1.6)
    if name == "tabletop_pole":
        obstacles = (
            _box(-1.55, -0.42, 1.55, -0.22),   # table slab
            _box(0.48, -0.22, 0.56, 0.55),     # slender pole splitting the reach space
            _box(0.85, -0.22, 1.05, -0.06),    # box on the far side
        )
    elif name == "tabletop_container":
        obstacles = (
            _box(-1.55, -0.42, 1.55, -0.22),   # table slab
            _box(-1.00, -0.22, -0.94, 0.18),   # container left wall
            _box(-0.50, -0.22, -0.44, 0.18),   # container right wall
            _box(-0.80, -0.22, -0.66, -0.10),  # box inside the container
            _box(0.55, -0.22, 0.75, -0.06),    # box outside
        )
    elif name == "kitchen":
        obstacles = (
            _box(-1.55, -0.42, -0.70, 0.02),   # left counter block
            _box(-1.55, 0.60, -0.85, 1.05),    # upper cabinet
            _box(-1.25, 0.02, -1.05, 0.20),    # box on the left counter
            _box(0.70, -0.42, 1.55, -0.02),    # right counter block
            _box(0.95, 0.55, 1.55, 0.95),      # hood over the right counter
            _box(0.85, -0.02, 1.02, 0.16),     # pot on the right counter
        )
    elif name == "shelf_boxes":
        boards = [
            _box(0.60, y, 1.30, y + 0.04)
            for y in (-0.30, 0.00, 0.30, 0.60, 0.90)
        ]
        boxes = [
            _box(0.78, -0.26, 0.94, -0.14),
            _box(1.05, -0.26, 1.21, -0.14),
            _box(1.00, 0.04, 1.16, 0.16),
            _box(0.70, 0.34, 0.86, 0.46),
            _box(1.00, 0.34, 1.16, 0.46),
            _box(0.95, 0.64, 1.11, 0.76),
        ]
        obstacles = tuple(boards + boxes)
    else:
        raise ValueError(f"unknown scene {name!r}; expected one of {SCENE_NAMES}")
    return Scene(name=name, obstacles=obstacles, workspace_bounds=bounds)


@dataclass(frozen=True)
class TestCase:
    """One planning query: a collision-free start configuration and a
    kinematically feasible goal tip pose."""

    id: str
    start: tuple[float, ...]
    goal: EEPose
    scene_name: str

    @property
    def start_config(self) -> np.ndarray:
        return np.array(self.start)


@dataclass(frozen=True)
class TestSuite:
    scene_name: str
    rng_seed: int
    arm: ArmModel
    cases: tuple[TestCase, ...]

    def __len__(self) -> int:
        return len(self.cases)


def ik_goal_configs(arm: ArmModel, scene: Scene, goal: EEPose, restarts: int = 10) -> list[np.ndarray]:
    """Collision-free IK solutions for a goal pose, with the package-wide
    deterministic seed convention."""
    sols = solve_ik(arm, goal, restarts=restarts, rng_seed=goal_seed(goal))
    return [q for q in sols if not config_in_collision(arm, scene, q)]


def generate_test_suite(
    scene: Scene,
    arm: ArmModel,
    count: int,
    rng_seed: int,
    rrt_params: RRTParams | None = None,
    ik_restarts: int = 10,
) -> TestSuite:
    """Rejection-sample feasible test cases for a scene.

    Starts are uniform in the joint limits and kept when collision-free.
    Goals are the tip poses of sampled collision-free goal configurations,
    which makes them kinematically feasible by construction. A case is kept
    only when the goal pose admits a collision-free IK solution under the
    standard seed convention and the RRT baseline solves the query within a
    generous budget, so every stored case is known to have a solution.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rrt_params = rrt_params or RRTParams(max_iters=20_000)
    rng = np.random.default_rng(rng_seed)
    cases: list[TestCase] = []
    samples = 0
    attempt = 0

    def sample_free_config() -> np.ndarray:
        nonlocal samples
        while True:
            samples += 1
            if samples > MAX_SAMPLE_ATTEMPTS:
                raise GenerationError(
                    f"exceeded {MAX_SAMPLE_ATTEMPTS} samples generating cases for "
                    f"scene {scene.name!r}; the scene may be over-constrained"
                )
            q = rng.uniform(arm.lower, arm.upper)
            if not config_in_collision(arm, scene, q):
                return q

    while len(cases) < count:
        attempt += 1
        start = sample_free_config()
        goal_q = sample_free_config()
        _, ee = forward_kinematics(arm, goal_q)
        goal = EEPose(ee.x, ee.y, ee.heading, heading_matters=False)
        goal_cfgs = ik_goal_configs(arm, scene, goal, restarts=ik_restarts)
        if not goal_cfgs:
            continue
        seeded = RRTParams(
            step=rrt_params.step,
            goal_bias=rrt_params.goal_bias,
            max_iters=rrt_params.max_iters,
            rng_seed=(rng_seed * 1_000_003 + attempt) & 0x7FFFFFFF,
            edge_spacing=rrt_params.edge_spacing,
        )
        if rrt_plan(scene, arm, start, goal_cfgs, seeded) is None:
            continue
        cid = f"{scene.name}-{rng_seed}-{len(cases):04d}"
        cases.append(TestCase(id=cid, start=tuple(start.tolist()), goal=goal, scene_name=scene.name))
    return TestSuite(scene_name=scene.name, rng_seed=rng_seed, arm=arm, cases=tuple(cases))


# ---------------------------------------------------------------------------
# file formats

def scene_to_dict(scene: Scene) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "name": scene.name,
        "workspace_bounds": list(scene.workspace_bounds) if scene.workspace_bounds else None,
        "obstacles": [{"vertices": ob.vertices.tolist()} for ob in scene.obstacles],
    }


def scene_from_dict(data: dict) -> Scene:
    if data.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported scene format version {data.get('format_version')!r}")
    bounds = data.get("workspace_bounds")
    return Scene(
        name=data["name"],
        obstacles=tuple(ConvexShape(ob["vertices"]) for ob in data["obstacles"]),
        workspace_bounds=tuple(bounds) if bounds else None,
    )


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2, sort_keys=True) + "\n")


def load_scene(path) -> Scene:
    return scene_from_dict(json.loads(Path(path).read_text()))


def suite_to_dict(suite: TestSuite) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "scene_name": suite.scene_name,
        "rng_seed": suite.rng_seed,
        "arm": {
            "links": [list(l) for l in suite.arm.links],
            "joint_limits": [list(j) for j in suite.arm.joint_limits],
        },
        "cases": [
            {
                "id": c.id,
                "start": list(c.start),
                "goal": {
                    "x": c.goal.x,
                    "y": c.goal.y,
                    "heading": c.goal.heading,
                    "heading_matters": c.goal.heading_matters,
                },
            }
            for c in suite.cases
        ],
    }


def suite_from_dict(data: dict) -> TestSuite:
    if data.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported suite format version {data.get('format_version')!r}")
    arm = ArmModel(
        base=DEFAULT_BASE,
        links=tuple(tuple(l) for l in data["arm"]["links"]),
        joint_limits=tuple(tuple(j) for j in data["arm"]["joint_limits"]),
    )
    scene_name = data["scene_name"]
    cases = tuple(
        TestCase(
            id=c["id"],
            start=tuple(c["start"]),
            goal=EEPose(
                c["goal"]["x"], c["goal"]["y"], c["goal"]["heading"],
                heading_matters=c["goal"]["heading_matters"],
            ),
            scene_name=scene_name,
        )
        for c in data["cases"]
    )
    ids = [c.id for c in cases]
    if len(set(ids)) != len(ids):
        raise ValueError("test case ids must be unique")
    return TestSuite(scene_name=scene_name, rng_seed=data["rng_seed"], arm=arm, cases=cases)


def save_suite(suite: TestSuite, path) -> None:
    Path(path).write_text(json.dumps(suite_to_dict(suite), indent=2, sort_keys=True) + "\n")


def load_suite(path) -> TestSuite:
    return suite_from_dict(json.loads(Path(path).read_text()))
