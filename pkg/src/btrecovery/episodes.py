"""Single-episode execution: randomize, dispatch, tick, score.

An episode owns a private world copy, so skill leaves can mutate it in place.
Flow per episode: apply domain randomization, drive the insertion arm to the
approach pose (the production task always starts by positioning), check the
production skill's preconditions, run recovery if the planner says so, then
run the production skill.  A recovery step that fails triggers exactly one
replan; a second failure ends the episode as a failure.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

from . import bt, config, planner, world as wd
from .bt import NodeStatus


@dataclass
class EpisodeResult:
    success: bool
    insertion_reward: float
    force_reward: float
    min_lateral_error: float
    force_integral: float
    plan: tuple              # executed program, skill names in order
    trigger: tuple           # unmet conditions that caused planning (strings)
    seed: int
    final_status: str
    planner_expansions: int = 0


def insertion_reward(success: bool, min_lateral: float, goal_progress: float) -> float:
    """Weighted sum of execution success, lateral proximity to the hole, and
    progress of the peg toward its inserted position."""
    proximity = 1.0 - min(min_lateral / config.PROXIMITY_SCALE, 1.0)
    return (config.W_SUCCESS * (1.0 if success else 0.0)
            + config.W_PROXIMITY * proximity
            + config.W_DEPTH * goal_progress)


def force_reward(force_integral: float) -> float:
    return -min(force_integral / config.FORCE_NORMALIZER, 1.0)


def _drive_to_approach(world: wd.WorldState, arm_id: str) -> None:
    """Positioning preamble: straight-line motion to the approach hover."""
    app = wd.approach_pose(world)
    cmd = wd.MgCommand(target=app)
    arm = world.arm(arm_id)
    while world.time < config.EPISODE_TIME_CAP:
        d2 = ((arm.ee.x - app.x) ** 2 + (arm.ee.y - app.y) ** 2
              + (arm.ee.z - app.z) ** 2)
        if d2 <= config.GOTO_TOL ** 2:
            return
        wd._step_motion(world, arm_id, cmd, config.DT)


def _goal_distance(world: wd.WorldState) -> float:
    gx, gy, gz = wd.goal_tip_position(world)
    p = world.peg
    return math.sqrt((p.x - gx) ** 2 + (p.y - gy) ** 2 + (p.tip_z - gz) ** 2)


class _TraceRecorder:
    """Per-tick trace rows: time, end-effector pose, contact force, events."""

    def __init__(self, world: wd.WorldState, arm_id: str):
        self.arm_id = arm_id
        self.rows = []
        self._n_events = len(world.events)

    def snap(self, world: wd.WorldState) -> None:
        new_events = world.events[self._n_events:]
        self._n_events = len(world.events)
        ee = world.arm(self.arm_id).ee
        self.rows.append((world.time, ee.x, ee.y, ee.z, ee.yaw,
                          world.contact_force,
                          ";".join(label for _, label in new_events)))

    def write(self, path, plan, trigger) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time", "ee_x", "ee_y", "ee_z", "ee_yaw",
                             "contact_force", "event"])
            for row in self.rows:
                writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
            for name in plan:
                writer.writerow(["", "", "", "", "", "", f"plan:{name}"])
            for cond in trigger:
                writer.writerow(["", "", "", "", "", "", f"trigger:{cond}"])


def _tick_to_terminal(world: wd.WorldState, grounded, recorder=None) -> NodeStatus:
    ctx = bt.TickContext(world=world)
    for _ in range(config.MAX_TICKS):
        ctx.trace.clear()
        status = bt.tick(grounded.tree, ctx)
        ctx.tick_index += 1
        if recorder is not None:
            recorder.snap(world)
        if status is not NodeStatus.RUNNING:
            return status
        if world.time >= config.EPISODE_TIME_CAP:
            return NodeStatus.FAILURE
    return NodeStatus.FAILURE


def run_episode(scenario, theta, seed: int,
                trace_path: Optional[str] = None) -> EpisodeResult:
    """Run one randomized episode of a scenario under policy ``theta``."""
    world = scenario.make_world()
    world = wd.randomize_domain(world, seed)
    start_goal_dist = _goal_distance(world)
    recorder = _TraceRecorder(world, world.active_arm) if trace_path else None

    _drive_to_approach(world, world.active_arm)

    plan_names: list = []
    trigger: tuple = ()
    expansions = 0
    status = NodeStatus.FAILURE
    try:
        program = planner.monitor_and_dispatch(scenario.production, world,
                                               scenario.catalog)
        trigger = tuple(str(c) for c in program.trigger)
        expansions = program.expansions
        status = _run_program(world, program, scenario, theta, plan_names, recorder)
    except planner.NoPlanFound:
        status = NodeStatus.FAILURE

    success = world.peg.holder == wd.INSERTED
    min_lat = world.min_peg_lateral if math.isfinite(world.min_peg_lateral) else 1.0
    end_goal_dist = _goal_distance(world)
    if start_goal_dist < 1e-9:
        progress = 1.0
    else:
        progress = max(0.0, min(1.0, 1.0 - end_goal_dist / start_goal_dist))

    result = EpisodeResult(
        success=success,
        insertion_reward=insertion_reward(status is NodeStatus.SUCCESS, min_lat, progress),
        force_reward=force_reward(world.force_integral),
        min_lateral_error=min_lat,
        force_integral=world.force_integral,
        plan=tuple(plan_names),
        trigger=trigger,
        seed=seed,
        final_status=status.value,
        planner_expansions=expansions,
    )
    if recorder is not None:
        recorder.write(trace_path, result.plan, result.trigger)
    return result


def _run_program(world, program, scenario, theta, plan_names, recorder) -> NodeStatus:
    """Execute program steps in order with the single-replan policy."""
    steps = list(program.steps)
    production = program.production
    replanned = False
    i = 0
    while i < len(steps):
        spec = steps[i]
        grounded = spec.ground(scenario.bindings_for(spec.name, theta))
        plan_names.append(spec.name)
        status = _tick_to_terminal(world, grounded, recorder)
        if status is NodeStatus.FAILURE:
            if spec.name == production.name or replanned:
                return NodeStatus.FAILURE
            replanned = True
            try:
                program = planner.monitor_and_dispatch(production, world,
                                                       scenario.catalog)
            except planner.NoPlanFound:
                return NodeStatus.FAILURE
            steps = list(program.steps)
            i = 0
            continue
        i += 1
    return NodeStatus.SUCCESS
