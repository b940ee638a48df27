"""Tests for follow-up generation and verdict evaluation of the five relations."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import config
from config import CampaignConfig
from conftest import cube, make_case
from errors import GenerationError, InvalidInputError
from generator import generate_case
from geometry import Trajectory, point_polyline_distance
from relations import (MRKind, StrictnessLevel, Strictness, generate_followup, evaluate, strictness_for,
                       mr5_bounds_for, is_violated, followup_id)
from scene import TaskKind, validate_scene
from simulator import plan_waypoints


def point(x, y=0.0, z=0.0):
    return Trajectory([(x, y, z)])


def test_patterns():
    assert [m.pattern for m in MRKind] == ["TC", "TC", "TC", "TV", "TV"]


def test_synonym_followup(pick_case):
    fup = generate_followup(MRKind.MR1_SYNONYM, pick_case, seed=0)
    assert fup.id == "PickUp-000-MR1_Synonym" == followup_id(pick_case.id, MRKind.MR1_SYNONYM)
    assert fup.parent_id == "PickUp-000"
    assert fup.test.id == fup.id
    assert fup.test.prompt.verb in {"grab", "take", "lift"}
    assert fup.test.prompt.text == f"{fup.test.prompt.verb} the apple"
    assert fup.test.scene == pick_case.scene
    assert fup.meta == {'original_verb': "pick", 'verb': fup.test.prompt.verb}


def test_negation_followup(pick_case):
    fup = generate_followup(MRKind.MR4_NEGATION, pick_case, seed=0)
    assert fup.test.prompt.text == "don't pick the apple"
    assert fup.test.prompt.negated
    with pytest.raises(GenerationError):
        generate_followup(MRKind.MR4_NEGATION, fup.test, seed=0)


def test_brightness_followup(pick_case):
    fup = generate_followup(MRKind.MR3_BRIGHTNESS, pick_case, seed=5)
    factor = fup.meta['brightness_factor']
    assert factor in config.BRIGHTNESS_FACTORS
    assert fup.test.scene.brightness == pytest.approx(factor)
    assert fup.test.scene.objects == pick_case.scene.objects


def test_brightness_followup_respects_maximum():
    bright = make_case(TaskKind.PICK_UP, [cube()], brightness=3.0)
    with pytest.raises(GenerationError):
        generate_followup(MRKind.MR3_BRIGHTNESS, bright, 0, CampaignConfig(brightness_factors=[1.4]))


@pytest.mark.parametrize("task", list(TaskKind))
@pytest.mark.parametrize("index", range(3))
def test_distractor_followup_keeps_clear_of_target_and_path(task, index):
    src = generate_case(task, index, seed=11)
    fup = generate_followup(MRKind.MR2_OBJECT_ADDITION, src, seed=11)
    added = fup.test.scene.find(fup.meta['added_object_id'])
    target = src.scene.find(src.prompt.target_id)

    assert added.id == "distractor0"
    assert added.label in config.DISTRACTOR_LABELS
    assert math.hypot(added.position[0] - target.position[0],
                      added.position[1] - target.position[1]) >= config.DISTRACTOR_SPACING
    centre = (added.position[0], added.position[1], added.position[2] + added.half_extents[2])
    clearance = config.PATH_CLEARANCE + math.sqrt(3.0) * config.DISTRACTOR_HALF_EXTENT
    assert point_polyline_distance(centre, plan_waypoints(src)) >= clearance
    assert validate_scene(fup.test.scene, fup.test.prompt) == []
    assert fup.test.scene.objects[:-1] == src.scene.objects
    np.testing.assert_array_equal(plan_waypoints(fup.test), plan_waypoints(src))


def test_distractor_followup_runs_out_of_labels():
    crowd = [cube(f"obj{i + 1}", label, position)
             for i, (label, position) in enumerate(zip(config.DISTRACTOR_LABELS, [
                 (-0.3, -0.3, 0.0), (-0.3, 0.0, 0.0), (-0.3, 0.3, 0.0), (0.0, -0.3, 0.0), (0.0, 0.3, 0.0)]))]
    src = make_case(TaskKind.PICK_UP, [cube()] + crowd)
    with pytest.raises(GenerationError):
        generate_followup(MRKind.MR2_OBJECT_ADDITION, src, seed=0)


@pytest.mark.parametrize("task", list(TaskKind))
@pytest.mark.parametrize("index", range(3))
def test_relocation_followup(task, index):
    src = generate_case(task, index, seed=5)
    fup = generate_followup(MRKind.MR5_RELOCATION, src, seed=5)
    dx, dy = fup.meta['delta_p']
    x0, y0, z0 = fup.meta['original_position']
    moved = fup.test.scene.find(src.prompt.target_id)

    assert config.RELOCATION_MIN <= math.hypot(dx, dy) <= config.RELOCATION_MAX
    assert (x0, y0, z0) == src.scene.find(src.prompt.target_id).position
    assert moved.position == pytest.approx((x0 + dx, y0 + dy, z0))
    assert validate_scene(fup.test.scene, fup.test.prompt) == []


@pytest.mark.parametrize("mr", list(MRKind))
def test_generation_is_deterministic(mr):
    src = generate_case(TaskKind.PUT_ON, 0, seed=1)
    assert generate_followup(mr, src, 9) == generate_followup(mr, src, 9)


def test_strictness_levels():
    assert strictness_for(MRKind.MR1_SYNONYM, "High").delta == 0.1
    assert strictness_for(MRKind.MR3_BRIGHTNESS, "Low").delta == 0.3
    assert strictness_for(MRKind.MR4_NEGATION, "High").delta == 0.3
    assert strictness_for(MRKind.MR4_NEGATION, "Low").delta == 0.1
    mr5 = strictness_for(MRKind.MR5_RELOCATION, "Medium")
    assert mr5.delta is None
    assert (mr5.alpha, mr5.beta) == (0.5, 2.0)


def test_mr5_bounds_override():
    assert mr5_bounds_for(StrictnessLevel.HIGH) == config.MR5_PRESETS["High"]
    cfg = CampaignConfig(mr5_alpha=0.4)
    assert mr5_bounds_for(StrictnessLevel.HIGH, cfg) == (0.4, config.MR5_PRESETS["High"][1])


def test_evaluate_tc_relation():
    verdict = evaluate(MRKind.MR1_SYNONYM, point(0.0), point(0.05), Strictness(StrictnessLevel.HIGH, 0.1))
    assert verdict.distance == pytest.approx(0.05)
    assert verdict.bounds == (None, 0.1)
    assert not verdict.violated


def test_evaluate_negation_minimum_change():
    verdict = evaluate(MRKind.MR4_NEGATION, point(0.0), point(0.05), Strictness(StrictnessLevel.HIGH, 0.3))
    assert verdict.bounds == (0.3, None)
    assert verdict.violated


@pytest.mark.parametrize("d, violated", [(0.12, False), (0.30, True), (0.04, True)])
def test_evaluate_relocation_proportionality(d, violated):
    meta = {'delta_p': [0.1, 0.0]}
    verdict = evaluate(MRKind.MR5_RELOCATION, point(0.0), point(d), Strictness(StrictnessLevel.MEDIUM),
                       meta, mr5_alpha=0.5, mr5_beta=2.0)
    assert verdict.lower == pytest.approx(0.05)
    assert verdict.upper == pytest.approx(0.2)
    assert verdict.violated is violated


def test_evaluate_relocation_needs_delta():
    with pytest.raises(InvalidInputError):
        evaluate(MRKind.MR5_RELOCATION, point(0.0), point(0.1), strictness_for("MR5_Relocation", "Low"))


def test_bounds_are_inclusive():
    assert not is_violated(0.1, None, 0.1)
    assert not is_violated(0.3, 0.3, None)
    assert is_violated(0.1000001, None, 0.1)


@given(st.floats(min_value=0.0, max_value=1.0), st.sampled_from(list(MRKind)))
def test_stricter_levels_flag_at_least_as_much(d, mr):
    meta = {'delta_p': [0.2, 0.0]}
    flags = [evaluate(mr, point(0.0), point(d), strictness_for(mr, level), meta).violated
             for level in (StrictnessLevel.LOW, StrictnessLevel.MEDIUM, StrictnessLevel.HIGH)]
    assert flags == sorted(flags)
