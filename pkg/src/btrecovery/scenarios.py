"""The five shipped failure scenarios.

All scenarios share one table layout: the hole block in front of the left
(insertion) arm, the right arm parked to the side as the helper.  They
differ in what blocks the task and which recovery behavior, with which
parameter mode, the catalog offers:

1. baseline           - nothing blocks; insertion parameters learned.
2. static recovery    - light blocker on the hole; manual pick-place.
3. dynamic recovery   - heavy blocker; push with learned force.
4. static + behavior  - peg dropped near the right arm; manual pick-exchange
                        with fixed nonzero grasp offsets, insertion relearned.
5. dynamic + behavior - as 4 but the grasp offsets are learned too.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from . import config, world as wd
from .optimizer import ParamSpace
from .skills import (ParamMode, SkillSpec, peg_insertion_spec, pick_exchange_spec,
                     pick_place_spec, push_spec)


class UnknownScenario(Exception):
    pass


INSERTION_ARM = "left"
HELPER_ARM = "right"

HOLE_XY = (0.50, 0.00)
RIGHT_HOME = wd.Pose(0.20, -0.30, 0.15)
HANDOVER_POSE = wd.Pose(0.30, -0.20, 0.15)
PEG_TABLE_XY = (0.15, -0.35)
PLACE_XY = (0.65, 0.20)
PUSH_DIRECTION = (0.0, 1.0)
SCENARIO4_OFFSETS = (0.005, 0.005)

# five fixed start poses spaced around the approach point
START_POSES = (
    wd.Pose(0.34, -0.10, 0.15),
    wd.Pose(0.34, 0.10, 0.15),
    wd.Pose(0.30, 0.00, 0.17),
    wd.Pose(0.40, -0.14, 0.13),
    wd.Pose(0.40, 0.14, 0.13),
)


@dataclass
class ScenarioSpec:
    id: int
    name: str
    description: str
    make_world: Callable[[], wd.WorldState] = field(compare=False)
    production: SkillSpec = field(compare=False)
    catalog: tuple = field(compare=False, default=())
    param_space: Optional[ParamSpace] = None
    # qualified theta dimension -> (skill name, parameter name)
    theta_routing: tuple = ()

    def bindings_for(self, skill_name: str, theta) -> dict:
        """Slice the flat parameter vector into bindings for one skill."""
        out = {}
        for i, (skill, param) in enumerate(self.theta_routing):
            if skill == skill_name:
                out[param] = float(theta[i])
        return out


def _base_world(peg_on_table: bool, obstacles=(), noise_std=None) -> wd.WorldState:
    left_start = START_POSES[0].copy()
    arms = {
        INSERTION_ARM: wd.Arm(id=INSERTION_ARM, ee=left_start),
        HELPER_ARM: wd.Arm(id=HELPER_ARM, ee=RIGHT_HOME.copy()),
    }
    if peg_on_table:
        peg = wd.Peg(x=PEG_TABLE_XY[0], y=PEG_TABLE_XY[1], tip_z=0.0, holder=wd.TABLE)
    else:
        arm = arms[INSERTION_ARM]
        arm.gripper = wd.GripperState.CLOSED
        arm.held = wd.PEG
        peg = wd.Peg(x=arm.ee.x, y=arm.ee.y,
                     tip_z=arm.ee.z - config.PEG_LENGTH, holder=INSERTION_ARM)
    world = wd.WorldState(
        arms=arms,
        peg=peg,
        hole=wd.HoleBlock(x=HOLE_XY[0], y=HOLE_XY[1]),
        obstacles=[o.copy() for o in obstacles],
        active_arm=INSERTION_ARM,
        start_poses=tuple(p.copy() for p in START_POSES),
    )
    if noise_std is not None:
        world.hole_noise_std = noise_std
    world.min_peg_lateral = wd.peg_lateral_error(world)
    return world


def _light_blocker() -> wd.Obstacle:
    return wd.Obstacle(id="blocker", kind=wd.ObstacleKind.LIGHT,
                       footprint_radius=0.015, x=HOLE_XY[0], y=HOLE_XY[1],
                       z=config.BLOCK_TOP_Z)


def _heavy_blocker() -> wd.Obstacle:
    return wd.Obstacle(id="blocker", kind=wd.ObstacleKind.HEAVY,
                       footprint_radius=0.020, x=HOLE_XY[0], y=HOLE_XY[1],
                       z=config.BLOCK_TOP_Z,
                       push_threshold=config.HEAVY_PUSH_THRESHOLD)


def _space_from(production: SkillSpec, recovery_learned=()) -> tuple:
    """Build the theta space: production learned params first, then any
    learned recovery params, each routed by (skill, param)."""
    names, lows, highs, routing = [], [], [], []
    for spec in (production, *recovery_learned):
        for p in spec.learned_params():
            names.append(f"{spec.name}.{p.name}")
            lows.append(p.lo)
            highs.append(p.hi)
            routing.append((spec.name, p.name))
    space = ParamSpace(names=tuple(names), lows=tuple(lows), highs=tuple(highs))
    return space, tuple(routing)


def load_scenario(scenario_id: int, hole_noise_std: Optional[float] = None) -> ScenarioSpec:
    """Build a fully specified scenario; ``hole_noise_std`` overrides the
    randomization spread (zero gives a deterministic debug world)."""
    if scenario_id not in (1, 2, 3, 4, 5):
        raise UnknownScenario(scenario_id)

    production = peg_insertion_spec(INSERTION_ARM)

    if scenario_id == 1:
        make_world = lambda: _base_world(False, noise_std=hole_noise_std)
        catalog: tuple = ()
        space, routing = _space_from(production)
        name, desc = "baseline", "peg insertion only, no recovery"
    elif scenario_id == 2:
        make_world = lambda: _base_world(False, (_light_blocker(),),
                                         noise_std=hole_noise_std)
        pick_place = pick_place_spec(HELPER_ARM, "blocker", PLACE_XY, make_world())
        catalog = (pick_place,)
        space, routing = _space_from(production)
        name, desc = "static recovery", "light blocker removed by manual pick-place"
    elif scenario_id == 3:
        make_world = lambda: _base_world(False, (_heavy_blocker(),),
                                         noise_std=hole_noise_std)
        push = push_spec(HELPER_ARM, "blocker", PUSH_DIRECTION)
        catalog = (push,)
        space, routing = _space_from(production, (push,))
        name, desc = "dynamic recovery", "heavy blocker pushed with learned force"
    elif scenario_id == 4:
        make_world = lambda: _base_world(True, noise_std=hole_noise_std)
        exchange = pick_exchange_spec(HELPER_ARM, INSERTION_ARM, HANDOVER_POSE,
                                      offset_mode=ParamMode.MANUAL,
                                      offset_defaults=SCENARIO4_OFFSETS)
        catalog = (exchange,)
        space, routing = _space_from(production)
        name, desc = ("static recovery with behavior changes",
                      "dropped peg handed over with fixed grasp offsets")
    else:
        make_world = lambda: _base_world(True, noise_std=hole_noise_std)
        exchange = pick_exchange_spec(HELPER_ARM, INSERTION_ARM, HANDOVER_POSE,
                                      offset_mode=ParamMode.LEARNED)
        catalog = (exchange,)
        space, routing = _space_from(production, (exchange,))
        name, desc = ("dynamic recovery with behavior changes",
                      "dropped peg handed over with learned grasp offsets")

    return ScenarioSpec(
        id=scenario_id,
        name=name,
        description=desc,
        make_world=make_world,
        production=production,
        catalog=catalog,
        param_space=space,
        theta_routing=routing,
    )


def all_scenarios() -> list:
    return [load_scenario(i) for i in (1, 2, 3, 4, 5)]


# --- catalog / scenario documents -------------------------------------------

def skill_doc(spec: SkillSpec) -> dict:
    return {
        "name": spec.name,
        "params": [
            {"name": p.name, "unit": p.unit, "bounds": [p.lo, p.hi],
             "kind": p.kind.value, "mode": p.mode.value, "default": p.default}
            for p in spec.params
        ],
        "preconditions": [str(c) for c in spec.preconditions],
        "postconditions": [str(c) for c in spec.postconditions],
    }


def scenario_to_doc(spec: ScenarioSpec) -> dict:
    return {
        "id": spec.id,
        "name": spec.name,
        "description": spec.description,
        "world": wd.world_to_doc(spec.make_world()),
        "production": skill_doc(spec.production),
        "catalog": [skill_doc(s) for s in spec.catalog],
        "theta": [
            {"name": n, "bounds": [lo, hi], "skill": skill, "param": param}
            for n, lo, hi, (skill, param) in zip(
                spec.param_space.names, spec.param_space.lows,
                spec.param_space.highs, spec.theta_routing)
        ],
    }
