"""Skill layer: primitives as behavior-tree leaf factories plus compilers
for the peg-insertion production skill and the three recovery behaviors.

Every action leaf wraps one of five motion primitives (gripper open, gripper
close, linear motion, stiffness change, force application); the spiral
search macro used by peg insertion delegates a whole insertion episode to
the simulator in a single tick so force accounting stays in one place.

Recovery templates guard each stage with a goal condition (a selector of
the form ``achieved? | do-it``), which keeps memoryless root-to-leaf
re-evaluation from re-running completed stages, and they end with an
explicit postcondition check so skill success implies postcondition truth
by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from . import bt, config, world as wd
from .bt import NodeStatus
from .planner import PREDICATES, AnyOf, Condition, eval_condition


class OutOfBounds(Exception):
    pass


class ParamKind(Enum):
    STRUCTURAL = "structural"   # tree shape, node count: fixed here
    RUNTIME = "runtime"         # motion quantities tunable per execution


class ParamMode(Enum):
    MANUAL = "manual"
    LEARNED = "learned"


@dataclass(frozen=True)
class ParamDescriptor:
    name: str
    unit: str
    lo: float
    hi: float
    kind: ParamKind = ParamKind.RUNTIME
    mode: ParamMode = ParamMode.MANUAL
    default: float = 0.0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise OutOfBounds(f"{self.name}: lo must be < hi")
        if not self.lo <= self.default <= self.hi:
            raise OutOfBounds(f"{self.name}: default outside bounds")
        if self.mode is ParamMode.LEARNED and self.kind is not ParamKind.RUNTIME:
            raise OutOfBounds(f"{self.name}: only runtime parameters can be learned")


@dataclass(frozen=True)
class SkillSpec:
    name: str
    params: tuple
    preconditions: tuple
    postconditions: tuple
    builder: Callable[[dict], bt.BtNode] = field(compare=False)

    def __post_init__(self):
        for cond in (*self.preconditions, *self.postconditions):
            parts = cond.alternatives if isinstance(cond, AnyOf) else (cond,)
            for c in parts:
                if c.predicate not in PREDICATES:
                    raise ValueError(f"{self.name}: unknown predicate {c.predicate!r}")

    def learned_params(self) -> tuple:
        return tuple(p for p in self.params if p.mode is ParamMode.LEARNED)

    def ground(self, bindings: Optional[dict] = None) -> "GroundedSkill":
        """Bind parameter values and compile the tree.

        Missing parameters fall back to their defaults; any value outside
        its declared bounds is rejected here, never at tick time.
        """
        bound = {}
        given = dict(bindings or {})
        for p in self.params:
            value = float(given.pop(p.name, p.default))
            if not p.lo <= value <= p.hi:
                raise OutOfBounds(f"{self.name}.{p.name}={value} outside [{p.lo}, {p.hi}]")
            bound[p.name] = value
        if given:
            raise OutOfBounds(f"{self.name}: unknown parameters {sorted(given)}")
        return GroundedSkill(spec=self, bindings=bound, tree=self.builder(bound))


@dataclass
class GroundedSkill:
    spec: SkillSpec
    bindings: dict
    tree: bt.BtNode


# --- primitive action leaves ----------------------------------------------
#
# Leaf callables mutate ctx.world in place; the episode executor hands each
# episode its own private world copy.

def prim_gripper_open(arm: str) -> bt.BtNode:
    def fn(ctx):
        try:
            wd._release(ctx.world, arm)
        except wd.NothingHeld:
            return NodeStatus.FAILURE
        return NodeStatus.SUCCESS
    return bt.action(f"gripper_open[{arm}]", fn,
                     binding="gripper_open", args={"arm": arm})


def prim_gripper_close(arm: str, offset=(0.0, 0.0), obj: Optional[str] = None) -> bt.BtNode:
    """Close on ``obj``, or on the nearest graspable object when obj is None."""
    def fn(ctx):
        target = obj if obj is not None else _nearest_graspable(ctx.world, arm, offset)
        if target is None:
            return NodeStatus.FAILURE
        try:
            wd._grasp(ctx.world, arm, target, tuple(offset))
        except (wd.NotGraspable, wd.OutOfReach, wd.GripperOccupied):
            return NodeStatus.FAILURE
        return NodeStatus.SUCCESS
    return bt.action(f"gripper_close[{arm}]", fn, binding="gripper_close",
                     args={"arm": arm, "offset": list(offset), "obj": obj})


def _nearest_graspable(world: wd.WorldState, arm: str, offset) -> Optional[str]:
    ee = world.arm(arm).ee
    gx, gy = ee.x + offset[0], ee.y + offset[1]
    best, best_d = None, config.REACH
    if world.peg.holder != wd.INSERTED:
        d = math.hypot(world.peg.x - gx, world.peg.y - gy)
        if d <= best_d:
            best, best_d = wd.PEG, d
    for ob in world.obstacles:
        if ob.kind is wd.ObstacleKind.LIGHT:
            d = math.hypot(ob.x - gx, ob.y - gy)
            if d <= best_d:
                best, best_d = ob.id, d
    return best


def _goto_fn(arm: str, target_of: Callable, offset=(0.0, 0.0),
             velocity_limit: float = config.DEFAULT_VELOCITY_LIMIT):
    def fn(ctx):
        world = ctx.world
        a = world.arm(arm)
        tgt = target_of(world)
        tx, ty, tz = tgt.x + offset[0], tgt.y + offset[1], tgt.z
        sx, sy, sz = a.stiffness
        dx = (tx - a.ee.x) if sx > 0 else 0.0
        dy = (ty - a.ee.y) if sy > 0 else 0.0
        dz = (tz - a.ee.z) if sz > 0 else 0.0
        if dx * dx + dy * dy + dz * dz <= config.GOTO_TOL ** 2:
            return NodeStatus.SUCCESS
        cmd = wd.MgCommand(target=wd.Pose(tx, ty, tz, tgt.yaw),
                           stiffness=a.stiffness, wrench=a.wrench,
                           velocity_limit=velocity_limit)
        wd._step_motion(world, arm, cmd, config.DT)
        return NodeStatus.RUNNING
    return fn


def prim_go_to_linear(arm: str, target: wd.Pose, offset=(0.0, 0.0),
                      velocity_limit: float = config.DEFAULT_VELOCITY_LIMIT) -> bt.BtNode:
    """Move straight toward ``target + offset``; RUNNING until within
    tolerance on the position-controlled axes."""
    tgt = target.copy()
    fn = _goto_fn(arm, lambda world: tgt, offset, velocity_limit)
    return bt.action(f"go_to_linear[{arm}]", fn, binding="go_to_linear",
                     args={"arm": arm, "target": tgt.to_list(), "offset": list(offset),
                           "velocity_limit": velocity_limit})


def prim_go_to_approach(arm: str) -> bt.BtNode:
    """Move to the hover pose above the believed hole position."""
    fn = _goto_fn(arm, wd.approach_pose)
    return bt.action(f"go_to_approach[{arm}]", fn,
                     binding="go_to_approach", args={"arm": arm})


def prim_go_to_obstacle(arm: str, obstacle_id: str, standoff=(0.0, 0.0)) -> bt.BtNode:
    """Move over an obstacle's current position plus a lateral standoff."""
    def target_of(world):
        ob = world.obstacle(obstacle_id)
        return wd.Pose(ob.x + standoff[0], ob.y + standoff[1], ob.z + 0.05)
    fn = _goto_fn(arm, target_of)
    return bt.action(f"go_to_obstacle[{arm},{obstacle_id}]", fn, binding="go_to_obstacle",
                     args={"arm": arm, "obstacle": obstacle_id, "standoff": list(standoff)})


def prim_go_to_peg(arm: str) -> bt.BtNode:
    """Move the gripper over the peg at grasping height."""
    def target_of(world):
        p = world.peg
        return wd.Pose(p.x, p.y, p.tip_z + p.length)
    fn = _goto_fn(arm, target_of)
    return bt.action(f"go_to_peg[{arm}]", fn, binding="go_to_peg", args={"arm": arm})


def prim_change_stiffness(arm: str, stiffness) -> bt.BtNode:
    triple = tuple(float(s) for s in stiffness)
    if any(s < 0 for s in triple):
        raise wd.InvalidCommand("stiffness components must be >= 0")

    def fn(ctx):
        ctx.world.arm(arm).stiffness = triple
        return NodeStatus.SUCCESS
    return bt.action(f"change_stiffness[{arm}]", fn, binding="change_stiffness",
                     args={"arm": arm, "stiffness": list(triple)})


def prim_apply_force(arm: str, wrench) -> bt.BtNode:
    triple = tuple(float(w) for w in wrench)

    def fn(ctx):
        ctx.world.arm(arm).wrench = triple
        return NodeStatus.SUCCESS
    return bt.action(f"apply_force[{arm}]", fn, binding="apply_force",
                     args={"arm": arm, "wrench": list(triple)})


def prim_push(arm: str, obstacle_id: str, direction, force: float,
              distance: float) -> bt.BtNode:
    """Force application against an obstacle: SUCCESS iff it displaced."""
    def fn(ctx):
        world = ctx.world
        ob = world.obstacle(obstacle_id)
        before = (ob.x, ob.y)
        try:
            wd._apply_push(world, arm, obstacle_id, tuple(direction), force, distance)
        except (wd.NoContact, wd.InvalidCommand):
            return NodeStatus.FAILURE
        ob = world.obstacle(obstacle_id)
        moved = (ob.x, ob.y) != before
        return NodeStatus.SUCCESS if moved else NodeStatus.FAILURE
    return bt.action(f"push[{arm},{obstacle_id}]", fn, binding="push",
                     args={"arm": arm, "obstacle": obstacle_id,
                           "direction": list(direction),
                           "force": force, "distance": distance})


def prim_spiral_search(arm: str, force: float, path_velocity: float,
                       path_distance: float, radius: float) -> bt.BtNode:
    """Macro leaf running a whole press-and-spiral insertion episode."""
    params = wd.InsertionParams(force, path_velocity, path_distance, radius)

    def fn(ctx):
        try:
            outcome = wd._run_insertion(ctx.world, arm, params)
        except (wd.PreconditionViolated, wd.InvalidCommand):
            return NodeStatus.FAILURE
        return NodeStatus.SUCCESS if outcome.success else NodeStatus.FAILURE
    return bt.action(f"spiral_search[{arm}]", fn, binding="spiral_search",
                     args={"arm": arm, "force": force, "path_velocity": path_velocity,
                           "path_distance": path_distance, "radius": radius})


# Which motion primitive each action binding exercises; recovery behaviors
# compile exclusively from the five primitive families.
PRIMITIVE_FAMILIES = {
    "gripper_open": "gripper_open",
    "gripper_close": "gripper_close",
    "go_to_linear": "go_to_linear",
    "go_to_approach": "go_to_linear",
    "go_to_obstacle": "go_to_linear",
    "go_to_peg": "go_to_linear",
    "change_stiffness": "change_stiffness",
    "apply_force": "apply_force",
    "push": "apply_force",
    "spiral_search": "spiral_search",
}

FIVE_PRIMITIVES = ("gripper_open", "gripper_close", "go_to_linear",
                   "change_stiffness", "apply_force")


# --- condition leaves ------------------------------------------------------

def cond_check(cond) -> bt.BtNode:
    """Condition leaf evaluating a planner-vocabulary condition."""
    def fn(ctx):
        return eval_condition(cond, ctx.world)
    negated = "not_" if getattr(cond, "negated", False) else ""
    name = f"check[{negated}{getattr(cond, 'predicate', 'any')}]"
    return bt.condition(name, fn, binding="check",
                        args={"predicate": cond.predicate,
                              "args": list(cond.args),
                              "negated": cond.negated})


def cond_holding(arm: str, obj: str) -> bt.BtNode:
    def fn(ctx):
        world = ctx.world
        if obj == wd.PEG:
            return world.peg.holder == arm
        return world.arm(arm).held == obj
    return bt.condition(f"holding[{arm},{obj}]", fn, binding="holding",
                        args={"arm": arm, "obj": obj})


def cond_at_pose(arm: str, pose: wd.Pose, tol: float = 2 * config.GOTO_TOL) -> bt.BtNode:
    p = pose.copy()

    def fn(ctx):
        ee = ctx.world.arm(arm).ee
        return (ee.x - p.x) ** 2 + (ee.y - p.y) ** 2 + (ee.z - p.z) ** 2 <= tol * tol
    return bt.condition(f"at_pose[{arm}]", fn, binding="at_pose",
                        args={"arm": arm, "pose": p.to_list(), "tol": tol})


def cond_obstacle_at(obstacle_id: str, x: float, y: float,
                     tol: float = 2 * config.GOTO_TOL) -> bt.BtNode:
    def fn(ctx):
        ob = ctx.world.obstacle(obstacle_id)
        return (ob.x - x) ** 2 + (ob.y - y) ** 2 <= tol * tol
    return bt.condition(f"obstacle_at[{obstacle_id}]", fn, binding="obstacle_at",
                        args={"obstacle": obstacle_id, "x": x, "y": y, "tol": tol})


def cond_gripper_free(arm: str) -> bt.BtNode:
    def fn(ctx):
        return ctx.world.arm(arm).held is None
    return bt.condition(f"gripper_free[{arm}]", fn, binding="gripper_free_leaf",
                        args={"arm": arm})


# --- serialization registry ------------------------------------------------

def default_registry() -> dict:
    """Binding-name -> leaf-callable factory map for tree documents."""
    def leaf_fn(builder):
        return lambda **kw: _leaf_callable(builder(**kw))

    def _leaf_callable(node):
        return node.action_fn or node.condition_fn

    return {
        "gripper_open": leaf_fn(prim_gripper_open),
        "gripper_close": leaf_fn(lambda arm, offset, obj: prim_gripper_close(arm, offset, obj)),
        "go_to_linear": leaf_fn(lambda arm, target, offset, velocity_limit:
                                prim_go_to_linear(arm, wd.Pose.from_list(target),
                                                  tuple(offset), velocity_limit)),
        "go_to_approach": leaf_fn(prim_go_to_approach),
        "go_to_obstacle": leaf_fn(lambda arm, obstacle, standoff: prim_go_to_obstacle(
            arm, obstacle, tuple(standoff))),
        "go_to_peg": leaf_fn(prim_go_to_peg),
        "change_stiffness": leaf_fn(lambda arm, stiffness: prim_change_stiffness(arm, stiffness)),
        "apply_force": leaf_fn(lambda arm, wrench: prim_apply_force(arm, wrench)),
        "push": leaf_fn(lambda arm, obstacle, direction, force, distance: prim_push(
            arm, obstacle, direction, force, distance)),
        "spiral_search": leaf_fn(lambda arm, force, path_velocity, path_distance, radius:
                                 prim_spiral_search(arm, force, path_velocity,
                                                    path_distance, radius)),
        "check": leaf_fn(lambda predicate, args, negated: cond_check(
            Condition(predicate, tuple(args), negated))),
        "holding": leaf_fn(cond_holding),
        "at_pose": leaf_fn(lambda arm, pose, tol: cond_at_pose(arm, wd.Pose.from_list(pose), tol)),
        "obstacle_at": leaf_fn(lambda obstacle, x, y, tol: cond_obstacle_at(obstacle, x, y, tol)),
        "gripper_free_leaf": leaf_fn(cond_gripper_free),
    }


# --- skill compilers -------------------------------------------------------

def peg_insertion_spec(arm: str) -> SkillSpec:
    """Production skill: approach, drop vertical stiffness, press down, and
    spiral outward until the peg seats."""
    params = (
        ParamDescriptor("force", "N", *config.INSERTION_FORCE_BOUNDS,
                        mode=ParamMode.LEARNED, default=10.0),
        ParamDescriptor("path_velocity", "m/s", *config.INSERTION_VELOCITY_BOUNDS,
                        mode=ParamMode.LEARNED, default=0.05),
        ParamDescriptor("path_distance", "m", *config.INSERTION_DISTANCE_BOUNDS,
                        mode=ParamMode.LEARNED, default=0.10),
        ParamDescriptor("radius", "m", *config.INSERTION_RADIUS_BOUNDS,
                        mode=ParamMode.LEARNED, default=0.01),
    )

    def builder(b: dict) -> bt.BtNode:
        return bt.sequence(
            "peg_insertion",
            prim_go_to_approach(arm),
            prim_change_stiffness(arm, (config.DEFAULT_STIFFNESS[0],
                                        config.DEFAULT_STIFFNESS[1], 0.0)),
            prim_apply_force(arm, (0.0, 0.0, -b["force"])),
            prim_spiral_search(arm, b["force"], b["path_velocity"],
                               b["path_distance"], b["radius"]),
        )

    return SkillSpec(
        name="peg_insertion",
        params=params,
        preconditions=(Condition("peg_held", (arm,)),
                       Condition("at_approach", (arm,)),
                       Condition("blocked", ("hole",), negated=True)),
        postconditions=(Condition("inserted", (wd.PEG,)),),
        builder=builder,
    )


def build_peg_insertion(arm: str, bindings: dict) -> GroundedSkill:
    return peg_insertion_spec(arm).ground(bindings)


def pick_place_spec(arm: str, obstacle_id: str, place: tuple,
                    world: wd.WorldState) -> SkillSpec:
    """Recovery: carry a light blocker off the hole to a parking pose.

    Construction rejects heavy obstacles outright.
    """
    ob = world.obstacle(obstacle_id)
    if ob.kind is wd.ObstacleKind.HEAVY:
        raise wd.NotGraspable(obstacle_id)
    place_pose = wd.Pose(place[0], place[1], config.BLOCK_TOP_Z + 0.05)

    def builder(b: dict) -> bt.BtNode:
        return bt.sequence(
            "pick_place",
            bt.selector(
                "fetch",
                cond_holding(arm, obstacle_id),
                bt.sequence("pick",
                            prim_go_to_obstacle(arm, obstacle_id),
                            prim_gripper_close(arm, obj=obstacle_id)),
            ),
            bt.selector(
                "stow",
                cond_obstacle_at(obstacle_id, place[0], place[1]),
                bt.sequence("place",
                            prim_go_to_linear(arm, place_pose),
                            prim_gripper_open(arm)),
            ),
            prim_change_stiffness(arm, config.DEFAULT_STIFFNESS),
            cond_check(Condition("blocked", ("hole",), negated=True)),
        )

    return SkillSpec(
        name="pick_place",
        params=(),
        preconditions=(Condition("blocked", ("hole",)),
                       Condition("graspable", (obstacle_id,)),
                       Condition("gripper_free", (arm,))),
        postconditions=(Condition("blocked", ("hole",), negated=True),),
        builder=builder,
    )


def push_spec(arm: str, obstacle_id: str, direction: tuple,
              distance: float = 0.08) -> SkillSpec:
    """Recovery: shove a blocker off the hole; only moves above the
    obstacle's force threshold, so the learned force decides success."""
    norm = math.hypot(direction[0], direction[1])
    ux, uy = direction[0] / norm, direction[1] / norm
    params = (
        ParamDescriptor("force", "N", *config.PUSH_FORCE_BOUNDS,
                        mode=ParamMode.LEARNED, default=20.0),
    )

    def builder(b: dict) -> bt.BtNode:
        return bt.sequence(
            "push",
            prim_go_to_obstacle(arm, obstacle_id, standoff=(-ux * 0.01, -uy * 0.01)),
            prim_change_stiffness(arm, config.DEFAULT_STIFFNESS),
            prim_push(arm, obstacle_id, (ux, uy), b["force"], distance),
            cond_check(Condition("blocked", ("hole",), negated=True)),
        )

    return SkillSpec(
        name="push",
        params=params,
        preconditions=(Condition("blocked", ("hole",)),),
        postconditions=(Condition("blocked", ("hole",), negated=True),),
        builder=builder,
    )


def pick_exchange_spec(from_arm: str, to_arm: str, handover: wd.Pose,
                       offset_mode: ParamMode = ParamMode.MANUAL,
                       offset_defaults: tuple = (0.0, 0.0)) -> SkillSpec:
    """Recovery: fetch the peg with one arm and hand it to the other.

    The receiving grasp is displaced by (offset_x, offset_y) in the gripper
    frame: the receiver stands off by the negated offset, then closes with
    the offset, so the resulting grasp offset equals the bound values.
    """
    params = (
        ParamDescriptor("offset_x", "m", *config.EXCHANGE_OFFSET_BOUNDS,
                        mode=offset_mode, default=offset_defaults[0]),
        ParamDescriptor("offset_y", "m", *config.EXCHANGE_OFFSET_BOUNDS,
                        mode=offset_mode, default=offset_defaults[1]),
    )
    hand = handover.copy()

    def builder(b: dict) -> bt.BtNode:
        ox, oy = b["offset_x"], b["offset_y"]
        return bt.sequence(
            "pick_exchange",
            bt.selector(
                "fetch",
                cond_holding(from_arm, wd.PEG),
                bt.sequence("pick",
                            prim_go_to_peg(from_arm),
                            prim_gripper_close(from_arm, obj=wd.PEG)),
            ),
            bt.selector(
                "carry",
                cond_at_pose(from_arm, hand),
                prim_go_to_linear(from_arm, hand),
            ),
            prim_change_stiffness(to_arm, config.DEFAULT_STIFFNESS),
            prim_apply_force(to_arm, (0.0, 0.0, 0.0)),
            bt.selector(
                "regrasp",
                cond_holding(to_arm, wd.PEG),
                bt.sequence("take",
                            prim_go_to_linear(to_arm, hand, offset=(-ox, -oy)),
                            prim_gripper_close(to_arm, offset=(ox, oy), obj=wd.PEG)),
            ),
            bt.selector(
                "letgo",
                cond_gripper_free(from_arm),
                prim_gripper_open(from_arm),
            ),
            cond_check(Condition("peg_held", (to_arm,))),
        )

    return SkillSpec(
        name="pick_exchange",
        params=params,
        preconditions=(AnyOf((Condition("peg_at", (wd.TABLE,)),
                              Condition("peg_held", (from_arm,)))),
                       Condition("gripper_free", (to_arm,))),
        postconditions=(Condition("peg_held", (to_arm,)),),
        builder=builder,
    )


def action_bindings(tree: bt.BtNode) -> list:
    """All (binding, args) pairs of action leaves, depth-first."""
    out = []
    if tree.kind is bt.NodeKind.ACTION:
        out.append((tree.binding, tree.args))
    for child in tree.children:
        out.extend(action_bindings(child))
    return out


def primitive_families(tree: bt.BtNode) -> set:
    return {PRIMITIVE_FAMILIES[b] for b, _ in action_bindings(tree)}
