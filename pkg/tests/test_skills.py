"""Skill layer: descriptors, primitives, compiled skill behavior, and the
pre/post soundness property."""

import math

import numpy as np
import pytest

from btrecovery import bt, config
from btrecovery import world as wd
from btrecovery.bt import NodeStatus, TickContext
from btrecovery.episodes import _tick_to_terminal
from btrecovery.planner import eval_condition
from btrecovery.skills import (FIVE_PRIMITIVES, GroundedSkill, OutOfBounds,
                               ParamDescriptor, ParamKind, ParamMode,
                               action_bindings, default_registry,
                               peg_insertion_spec, pick_exchange_spec,
                               pick_place_spec, prim_apply_force,
                               prim_change_stiffness, prim_gripper_close,
                               prim_gripper_open, prim_go_to_linear,
                               primitive_families, push_spec)

from worlds import LEFT, RIGHT, at_approach, heavy_blocker, light_blocker, make_world

HANDOVER = wd.Pose(0.30, -0.20, 0.15)


def run_tree(world, grounded):
    return _tick_to_terminal(world, grounded)


class TestParamDescriptor:
    def test_valid(self):
        p = ParamDescriptor("force", "N", 1.0, 30.0, mode=ParamMode.LEARNED,
                            default=10.0)
        assert p.kind is ParamKind.RUNTIME

    def test_bad_bounds(self):
        with pytest.raises(OutOfBounds):
            ParamDescriptor("x", "m", 1.0, 1.0)

    def test_default_outside(self):
        with pytest.raises(OutOfBounds):
            ParamDescriptor("x", "m", 0.0, 1.0, default=2.0)

    def test_structural_cannot_be_learned(self):
        with pytest.raises(OutOfBounds):
            ParamDescriptor("x", "m", 0.0, 1.0, kind=ParamKind.STRUCTURAL,
                            mode=ParamMode.LEARNED)


class TestSkillSpecValidation:
    def test_unknown_predicate_rejected(self):
        from btrecovery.planner import Condition
        from btrecovery.skills import SkillSpec
        with pytest.raises(ValueError):
            SkillSpec(name="bad", params=(),
                      preconditions=(Condition("levitating", ()),),
                      postconditions=(), builder=lambda b: None)


class TestGrounding:
    def test_out_of_bounds_rejected_at_construction(self):
        spec = peg_insertion_spec(LEFT)
        with pytest.raises(OutOfBounds):
            spec.ground({"force": 31.0})

    def test_unknown_parameter_rejected(self):
        spec = peg_insertion_spec(LEFT)
        with pytest.raises(OutOfBounds):
            spec.ground({"force": 10.0, "bogus": 1.0})

    def test_defaults_fill_missing(self):
        g = peg_insertion_spec(LEFT).ground({})
        assert set(g.bindings) == {"force", "path_velocity", "path_distance", "radius"}

    def test_learned_binding_changes_a_leaf_command(self):
        spec = peg_insertion_spec(LEFT)
        for p in spec.learned_params():
            base = spec.ground({})
            lo, hi = p.lo, p.hi
            changed = spec.ground({p.name: lo + 0.9 * (hi - lo)})
            assert action_bindings(base.tree) != action_bindings(changed.tree)

    def test_push_force_sensitivity(self):
        spec = push_spec(RIGHT, "blocker", (0.0, 1.0))
        assert action_bindings(spec.ground({"force": 16.0}).tree) != \
            action_bindings(spec.ground({"force": 24.0}).tree)


class TestGripperPrimitives:
    def test_close_on_reachable_peg(self):
        world = make_world(peg_holder=None)
        arm = world.arm(RIGHT)
        arm.ee.x, arm.ee.y, arm.ee.z = world.peg.x, world.peg.y, 0.05
        node = prim_gripper_close(RIGHT, obj=wd.PEG)
        assert bt.tick(node, TickContext(world=world)) is NodeStatus.SUCCESS
        assert world.peg.holder == RIGHT

    def test_close_on_heavy_fails(self):
        world = make_world(peg_holder=None, obstacles=[heavy_blocker()])
        arm = world.arm(RIGHT)
        arm.ee.x, arm.ee.y = 0.50, 0.00
        node = prim_gripper_close(RIGHT, obj="blocker")
        assert bt.tick(node, TickContext(world=world)) is NodeStatus.FAILURE

    def test_close_auto_detect_nearest(self):
        world = make_world(peg_holder=None, obstacles=[light_blocker()])
        arm = world.arm(RIGHT)
        arm.ee.x, arm.ee.y = 0.50, 0.005
        node = prim_gripper_close(RIGHT)
        assert bt.tick(node, TickContext(world=world)) is NodeStatus.SUCCESS
        assert world.arm(RIGHT).held == "blocker"

    def test_open_with_nothing_held_fails(self):
        world = make_world(peg_holder=None)
        node = prim_gripper_open(RIGHT)
        assert bt.tick(node, TickContext(world=world)) is NodeStatus.FAILURE


class TestGoToLinear:
    def test_at_target_succeeds_first_tick(self):
        world = make_world()
        target = world.arm(LEFT).ee.copy()
        node = prim_go_to_linear(LEFT, target)
        assert bt.tick(node, TickContext(world=world)) is NodeStatus.SUCCESS
        assert world.time == 0.0

    def test_tick_count_matches_kinematics_oracle(self):
        world = make_world()
        start = world.arm(LEFT).ee.copy()
        target = wd.Pose(start.x + 0.1, start.y, start.z)
        node = prim_go_to_linear(LEFT, target, velocity_limit=0.05)
        ctx = TickContext(world=world)
        ticks = 0
        while bt.tick(node, ctx) is NodeStatus.RUNNING:
            ticks += 1
            assert ticks < 1000
        # oracle: smallest k with 0.1 - k*0.0005 <= 1e-3, +1 success tick
        expected_running = math.ceil((0.1 - config.GOTO_TOL) / (0.05 * config.DT))
        assert ticks == expected_running
        assert 195 <= ticks + 1 <= 205

    def test_offset_is_additive(self):
        world = make_world()
        start = world.arm(LEFT).ee.copy()
        target = wd.Pose(start.x + 0.05, start.y + 0.02, start.z)
        node = prim_go_to_linear(LEFT, target, offset=(0.01, 0.0))
        ctx = TickContext(world=world)
        while bt.tick(node, ctx) is NodeStatus.RUNNING:
            pass
        ee = world.arm(LEFT).ee
        assert math.hypot(ee.x - (target.x + 0.01), ee.y - target.y) <= config.GOTO_TOL


class TestStiffnessAndForce:
    def test_zero_z_stiffness_hands_axis_to_wrench(self):
        world = at_approach(make_world())
        for node in (prim_change_stiffness(LEFT, (2000.0, 2000.0, 0.0)),
                     prim_apply_force(LEFT, (0.0, 0.0, -10.0))):
            assert bt.tick(node, TickContext(world=world)) is NodeStatus.SUCCESS
        arm = world.arm(LEFT)
        cmd = wd.MgCommand(target=arm.ee.copy(), stiffness=arm.stiffness,
                           wrench=arm.wrench)
        for _ in range(300):
            wd._step_motion(world, LEFT, cmd, config.DT)
        assert world.contact_force == pytest.approx(10.0)

    def test_last_write_wins(self):
        world = make_world()
        bt.tick(prim_change_stiffness(LEFT, (100.0, 100.0, 100.0)),
                TickContext(world=world))
        bt.tick(prim_change_stiffness(LEFT, (2000.0, 2000.0, 0.0)),
                TickContext(world=world))
        assert world.arm(LEFT).stiffness == (2000.0, 2000.0, 0.0)

    def test_negative_stiffness_rejected_at_construction(self):
        with pytest.raises(wd.InvalidCommand):
            prim_change_stiffness(LEFT, (-1.0, 0.0, 0.0))


class TestPegInsertionSkill:
    def test_clean_world_ticks_to_success(self):
        world = at_approach(make_world())
        g = peg_insertion_spec(LEFT).ground({"force": 10.0, "path_velocity": 0.05,
                                             "path_distance": 0.1, "radius": 0.01})
        assert run_tree(world, g) is NodeStatus.SUCCESS
        assert world.peg.holder == wd.INSERTED

    def test_blocked_world_fails_preconditions(self):
        world = at_approach(make_world(obstacles=[light_blocker()]))
        spec = peg_insertion_spec(LEFT)
        from btrecovery.planner import unmet_preconditions
        unmet = unmet_preconditions(spec, world)
        assert [c.predicate for c in unmet] == ["blocked"]

    def test_zero_radius_with_offset_fails(self):
        world = make_world()
        world.hole_estimate_offset = (0.005, 0.0)
        world = at_approach(world)
        g = peg_insertion_spec(LEFT).ground({"radius": 0.0})
        assert run_tree(world, g) is NodeStatus.FAILURE

    def test_tree_uses_spiral_macro(self):
        g = peg_insertion_spec(LEFT).ground({})
        bindings = [b for b, _ in action_bindings(g.tree)]
        assert bindings == ["go_to_approach", "change_stiffness", "apply_force",
                            "spiral_search"]


class TestPickPlaceSkill:
    def build(self, world):
        return pick_place_spec(RIGHT, "blocker", (0.65, 0.20), world)

    def test_unblocks_the_hole(self):
        world = make_world(obstacles=[light_blocker()])
        g = self.build(world).ground({})
        assert run_tree(world, g) is NodeStatus.SUCCESS
        assert not wd.hole_blocked(world)
        ob = world.obstacle("blocker")
        assert math.hypot(ob.x - 0.65, ob.y - 0.20) < 0.005

    def test_place_on_hole_reports_failure(self):
        world = make_world(obstacles=[light_blocker()])
        spec = pick_place_spec(RIGHT, "blocker", (0.50, 0.00), world)
        assert run_tree(world, spec.ground({})) is NodeStatus.FAILURE

    def test_heavy_rejected_at_construction(self):
        world = make_world(obstacles=[heavy_blocker()])
        with pytest.raises(wd.NotGraspable):
            self.build(world)


class TestPushSkill:
    def test_sufficient_force_unblocks(self):
        world = make_world(obstacles=[heavy_blocker()])
        g = push_spec(RIGHT, "blocker", (0.0, 1.0)).ground({"force": 20.0})
        assert run_tree(world, g) is NodeStatus.SUCCESS
        assert not wd.hole_blocked(world)

    def test_insufficient_force_fails(self):
        world = make_world(obstacles=[heavy_blocker()])
        g = push_spec(RIGHT, "blocker", (0.0, 1.0)).ground({"force": 10.0})
        assert run_tree(world, g) is NodeStatus.FAILURE
        assert wd.hole_blocked(world)

    def test_minimum_succeeding_force_is_threshold(self):
        outcomes = {}
        for force in range(10, 21):
            world = make_world(obstacles=[heavy_blocker()])
            g = push_spec(RIGHT, "blocker", (0.0, 1.0)).ground({"force": float(force)})
            outcomes[force] = run_tree(world, g) is NodeStatus.SUCCESS
        succeeding = [f for f, ok in outcomes.items() if ok]
        assert min(succeeding) == 15


class TestPickExchangeSkill:
    def build(self, offsets=(0.0, 0.0)):
        return pick_exchange_spec(RIGHT, LEFT, HANDOVER,
                                  offset_mode=ParamMode.LEARNED).ground(
            {"offset_x": offsets[0], "offset_y": offsets[1]})

    def test_zero_offsets_transfer(self):
        world = make_world(peg_holder=None)
        assert run_tree(world, self.build()) is NodeStatus.SUCCESS
        assert world.peg.holder == LEFT
        assert world.arm(LEFT).grasp_offset == (0.0, 0.0)
        assert world.arm(RIGHT).held is None
        assert world.arm(RIGHT).gripper is wd.GripperState.OPEN

    def test_offsets_become_receiver_grasp_offset(self):
        world = make_world(peg_holder=None)
        assert run_tree(world, self.build((0.01, 0.01))) is NodeStatus.SUCCESS
        assert world.arm(LEFT).grasp_offset == (0.01, 0.01)
        # peg displaced by exactly the offset in the receiving gripper frame
        ee = world.arm(LEFT).ee
        assert world.peg.x - ee.x == pytest.approx(0.01, abs=1e-12)
        assert world.peg.y - ee.y == pytest.approx(0.01, abs=1e-12)

    def test_offset_bounds_enforced(self):
        with pytest.raises(OutOfBounds):
            self.build((0.03, 0.0))

    def test_peg_unavailable_precondition(self):
        world = make_world(peg_holder=None)
        world.peg.holder = wd.INSERTED
        spec = pick_exchange_spec(RIGHT, LEFT, HANDOVER)
        from btrecovery.planner import unmet_preconditions
        unmet = unmet_preconditions(spec, world)
        assert len(unmet) == 1  # the peg-at-table-or-held disjunction

    def test_offset_grasp_requires_larger_spiral(self):
        # after an offset handover at zero hole noise, insertion needs the
        # spiral to cover the grasp displacement
        for radius, expect in ((0.004, False), (0.016, True)):
            world = make_world(peg_holder=None)
            assert run_tree(world, self.build((0.01, 0.01))) is NodeStatus.SUCCESS
            g = peg_insertion_spec(LEFT).ground(
                {"force": 10.0, "path_velocity": 0.05, "path_distance": 0.2,
                 "radius": radius})
            got = run_tree(world, g) is NodeStatus.SUCCESS
            assert got == expect


class TestSkillProperties:
    def test_recovery_behaviors_use_only_the_five_primitives(self):
        world_pp = make_world(obstacles=[light_blocker()])
        trees = [
            pick_place_spec(RIGHT, "blocker", (0.65, 0.2), world_pp).ground({}).tree,
            push_spec(RIGHT, "blocker", (0.0, 1.0)).ground({}).tree,
            pick_exchange_spec(RIGHT, LEFT, HANDOVER).ground({}).tree,
        ]
        for tree in trees:
            assert primitive_families(tree) <= set(FIVE_PRIMITIVES)

    def test_pick_exchange_exercises_all_five(self):
        tree = pick_exchange_spec(RIGHT, LEFT, HANDOVER).ground({}).tree
        assert primitive_families(tree) == set(FIVE_PRIMITIVES)

    def test_pre_post_soundness_randomized(self):
        rng = np.random.default_rng(21)
        for trial in range(12):
            # peg insertion from a precondition-satisfying world
            world = make_world()
            world.hole_estimate_offset = tuple(rng.normal(0, 0.006, 2))
            world = at_approach(world)
            spec = peg_insertion_spec(LEFT)
            g = spec.ground({"force": float(rng.uniform(2.5, 30.0)),
                             "path_velocity": float(rng.uniform(0.01, 0.1)),
                             "path_distance": float(rng.uniform(0.05, 0.2)),
                             "radius": float(rng.uniform(0.0, 0.03))})
            assert all(eval_condition(c, world) for c in spec.preconditions)
            if run_tree(world, g) is NodeStatus.SUCCESS:
                assert all(eval_condition(c, world) for c in spec.postconditions)

            # pick-place
            world = make_world(obstacles=[light_blocker()])
            spec = pick_place_spec(RIGHT, "blocker",
                                   (float(rng.uniform(0.6, 0.7)),
                                    float(rng.uniform(0.15, 0.3))), world)
            assert all(eval_condition(c, world) for c in spec.preconditions)
            if run_tree(world, spec.ground({})) is NodeStatus.SUCCESS:
                assert all(eval_condition(c, world) for c in spec.postconditions)

            # push
            world = make_world(obstacles=[heavy_blocker()])
            spec = push_spec(RIGHT, "blocker", (0.0, 1.0))
            assert all(eval_condition(c, world) for c in spec.preconditions)
            if run_tree(world, spec.ground(
                    {"force": float(rng.uniform(1.0, 40.0))})) is NodeStatus.SUCCESS:
                assert all(eval_condition(c, world) for c in spec.postconditions)

            # pick-exchange
            world = make_world(peg_holder=None)
            spec = pick_exchange_spec(RIGHT, LEFT, HANDOVER,
                                      offset_mode=ParamMode.LEARNED)
            assert all(eval_condition(c, world) for c in spec.preconditions)
            g = spec.ground({"offset_x": float(rng.uniform(-0.02, 0.02)),
                             "offset_y": float(rng.uniform(-0.02, 0.02))})
            if run_tree(world, g) is NodeStatus.SUCCESS:
                assert all(eval_condition(c, world) for c in spec.postconditions)


class TestTreeSerialization:
    def test_compiled_skill_trees_round_trip(self):
        world = make_world(obstacles=[light_blocker()])
        registry = default_registry()
        specs = [
            peg_insertion_spec(LEFT).ground({}),
            pick_place_spec(RIGHT, "blocker", (0.65, 0.2), world).ground({}),
            push_spec(RIGHT, "blocker", (0.0, 1.0)).ground({}),
            pick_exchange_spec(RIGHT, LEFT, HANDOVER).ground({}),
        ]
        for g in specs:
            doc = bt.tree_to_doc(g.tree)
            rebuilt = bt.tree_from_doc(doc, registry)
            assert bt.tree_to_doc(rebuilt) == doc

    def test_deserialized_tree_executes(self):
        world = make_world(obstacles=[light_blocker()])
        g = pick_place_spec(RIGHT, "blocker", (0.65, 0.2), world).ground({})
        rebuilt = bt.tree_from_doc(bt.tree_to_doc(g.tree), default_registry())
        clone = GroundedSkill(spec=g.spec, bindings=g.bindings, tree=rebuilt)
        assert run_tree(world, clone) is NodeStatus.SUCCESS
        assert not wd.hole_blocked(world)
