"""Scenario definitions: world templates, catalogs, parameter spaces, docs."""

import json

import pytest

from btrecovery import world as wd
from btrecovery.scenarios import (SCENARIO4_OFFSETS, UnknownScenario,
                                  all_scenarios, load_scenario, scenario_to_doc,
                                  skill_doc)
from btrecovery.skills import ParamMode


class TestLoadScenario:
    def test_unknown_rejected(self):
        with pytest.raises(UnknownScenario):
            load_scenario(0)
        with pytest.raises(UnknownScenario):
            load_scenario(6)

    def test_scenario1_no_obstacles_dimension_4(self):
        spec = load_scenario(1)
        world = spec.make_world()
        assert world.obstacles == []
        assert spec.param_space.dimension == 4
        assert spec.catalog == ()

    def test_scenario2_light_blocker_manual_pick_place(self):
        spec = load_scenario(2)
        world = spec.make_world()
        assert wd.hole_blocked(world)
        assert world.obstacles[0].kind is wd.ObstacleKind.LIGHT
        assert [s.name for s in spec.catalog] == ["pick_place"]
        assert spec.param_space.dimension == 4
        assert all(p.mode is ParamMode.MANUAL for p in spec.catalog[0].params)

    def test_scenario3_heavy_blocker_learned_push_dimension_5(self):
        spec = load_scenario(3)
        world = spec.make_world()
        assert world.obstacles[0].kind is wd.ObstacleKind.HEAVY
        assert wd.hole_blocked(world)
        assert spec.param_space.dimension == 5
        assert "push.force" in spec.param_space.names

    def test_scenario4_manual_offsets(self):
        spec = load_scenario(4)
        world = spec.make_world()
        assert world.peg.holder == wd.TABLE
        assert spec.param_space.dimension == 4
        exchange = spec.catalog[0]
        assert [p.default for p in exchange.params] == list(SCENARIO4_OFFSETS)
        assert all(p.mode is ParamMode.MANUAL for p in exchange.params)

    def test_scenario5_learned_offsets_dimension_6(self):
        spec = load_scenario(5)
        world = spec.make_world()
        assert world.peg.holder == wd.TABLE
        assert spec.param_space.dimension == 6
        assert "pick_exchange.offset_x" in spec.param_space.names
        assert "pick_exchange.offset_y" in spec.param_space.names

    def test_every_scenario_has_five_start_poses(self):
        for spec in all_scenarios():
            assert len(spec.make_world().start_poses) == 5

    def test_noise_override(self):
        spec = load_scenario(1, hole_noise_std=0.0)
        assert spec.make_world().hole_noise_std == 0.0


class TestThetaRouting:
    def test_scenario3_routes_by_skill(self):
        spec = load_scenario(3)
        theta = (10.0, 0.05, 0.1, 0.02, 22.0)
        assert spec.bindings_for("push", theta) == {"force": 22.0}
        insertion = spec.bindings_for("peg_insertion", theta)
        assert insertion == {"force": 10.0, "path_velocity": 0.05,
                             "path_distance": 0.1, "radius": 0.02}

    def test_scenario5_routes_offsets(self):
        spec = load_scenario(5)
        theta = (10.0, 0.05, 0.1, 0.02, 0.004, -0.007)
        assert spec.bindings_for("pick_exchange", theta) == \
            {"offset_x": 0.004, "offset_y": -0.007}


class TestDocuments:
    def test_scenario_doc_is_json_serializable(self):
        for spec in all_scenarios():
            doc = scenario_to_doc(spec)
            text = json.dumps(doc, sort_keys=True)
            assert json.loads(text) == doc

    def test_world_doc_round_trips_through_loader(self):
        for spec in all_scenarios():
            doc = scenario_to_doc(spec)
            world = wd.world_from_doc(doc["world"])
            assert wd.world_to_doc(world) == doc["world"]

    def test_catalog_doc_lists_bounds_and_modes(self):
        doc = skill_doc(load_scenario(3).catalog[0])
        assert doc["name"] == "push"
        (param,) = doc["params"]
        assert param["bounds"] == [1.0, 40.0]
        assert param["mode"] == "learned"
        assert doc["postconditions"] == ["not blocked(hole)"]

    def test_theta_doc_matches_space(self):
        for spec in all_scenarios():
            doc = scenario_to_doc(spec)
            assert [d["name"] for d in doc["theta"]] == list(spec.param_space.names)
