"""Tests for scenes, prompts and their canonical serialisation."""

import json
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

import config
from conftest import cube, plate, basket, make_case
from errors import InvalidInputError, UnknownObjectError, ConfigError
from geometry import Pose
from scene import (Scene, SceneObject, TaskKind, Prompt, render_prompt, synonym_for, canonical_verb,
                   validate_scene, canonical_json, case_to_dict, case_from_dict, scene_to_dict,
                   scene_from_dict, box_of, interior_box, solid_boxes, penetration_depth)


@pytest.mark.parametrize("task, target, reference, verb, negated, expected", [
    (TaskKind.PICK_UP, "apple", None, "pick", False, "pick the apple"),
    (TaskKind.PICK_UP, "apple", None, "pick", True, "don't pick the apple"),
    (TaskKind.PUT_ON, "cube", "plate", "put", False, "put the cube on the plate"),
    (TaskKind.PUT_IN, "cube", "bowl", "insert", False, "insert the cube in the bowl"),
    (TaskKind.MOVE_NEAR, "can", "orange", "move", True, "don't move the can near the orange"),
])
def test_render_prompt(task, target, reference, verb, negated, expected):
    assert render_prompt(task, target, reference, verb, negated) == expected


def test_render_prompt_reference_arity():
    with pytest.raises(InvalidInputError):
        render_prompt(TaskKind.PUT_ON, "cube", None, "put", False)
    with pytest.raises(InvalidInputError):
        render_prompt(TaskKind.PICK_UP, "cube", "plate", "pick", False)


labels = st.sampled_from(config.TARGET_LABELS + config.SURFACE_LABELS)
prompt_inputs = st.tuples(st.sampled_from([TaskKind.MOVE_NEAR, TaskKind.PUT_ON, TaskKind.PUT_IN]),
                          labels, labels, st.booleans())


@given(prompt_inputs, prompt_inputs)
def test_render_prompt_injective_for_fixed_verb(x, y):
    if x != y:
        assert render_prompt(x[0], x[1], x[2], "put", x[3]) != render_prompt(y[0], y[1], y[2], "put", y[3])


@pytest.mark.parametrize("verb, task", [("pick", TaskKind.PICK_UP), ("put", TaskKind.PUT_ON),
                                        ("move", TaskKind.MOVE_NEAR), ("insert", TaskKind.PUT_IN)])
def test_synonym_for_picks_a_different_lexicon_verb(verb, task):
    for seed in range(20):
        synonym = synonym_for(verb, task, seed)
        assert synonym != verb
        assert synonym in config.VERB_LEXICON[task.value]
        assert synonym_for(verb, task, seed) == synonym


def test_synonym_for_unknown_verb():
    with pytest.raises(InvalidInputError):
        synonym_for("juggle", TaskKind.PICK_UP, 0)


def test_canonical_verb():
    assert canonical_verb(TaskKind.PICK_UP) == "pick"
    assert canonical_verb("PutIn") == "put"


def test_scene_lookup():
    scene = Scene((cube(), plate()))
    assert scene.find("obj1").label == "plate"
    assert scene.by_label("apple").id == "obj0"
    assert scene.ids() == ["obj0", "obj1"]
    assert scene.home == pytest.approx((0.0, 0.0, config.HOME_HEIGHT))
    with pytest.raises(UnknownObjectError) as err:
        scene.find("obj9")
    assert str(err.value) == "Unknown object id: obj9"


def test_object_rejects_non_positive_extents():
    with pytest.raises(InvalidInputError):
        SceneObject("x", "apple", (0.02, 0.0, 0.02), Pose((0, 0, 0)))


def test_valid_scene_has_empty_report(put_on_case):
    assert validate_scene(put_on_case.scene, put_on_case.prompt) == []


def test_overlap_names_both_ids():
    scene = Scene((cube(), cube("obj1", "lemon", (0.21, 0.0, 0.0))))
    issues = validate_scene(scene)
    assert [i.kind for i in issues] == ["overlap"]
    assert issues[0].ids == ("obj0", "obj1")


def test_touching_objects_do_not_overlap():
    scene = Scene((cube(), cube("obj1", "lemon", (0.24, 0.0, 0.0))))
    assert validate_scene(scene) == []


def test_dangling_prompt_reference():
    scene = Scene((cube(),))
    prompt = Prompt(TaskKind.PICK_UP, "pick", "obj5")
    issues = validate_scene(scene, prompt)
    assert [i.kind for i in issues] == ["dangling_reference"]


@pytest.mark.parametrize("scene, kind", [
    (Scene((cube(), cube())), "duplicate_id"),
    (Scene((cube(position=(0.5, 0.0, 0.0)),)), "outside_workspace"),
    (Scene((cube(),), brightness=0.0), "brightness"),
    (Scene((cube(),), brightness=config.BRIGHTNESS_MAX + 0.1), "brightness"),
])
def test_scene_issues(scene, kind):
    assert kind in [i.kind for i in validate_scene(scene)]


def test_put_in_needs_a_container():
    scene = Scene((cube(), plate()))
    prompt = Prompt(TaskKind.PUT_IN, "put", "obj0", "obj1")
    assert [i.kind for i in validate_scene(scene, prompt)] == ["not_container"]


def test_validate_scene_does_not_mutate(put_in_case):
    before = canonical_json(case_to_dict(put_in_case))
    validate_scene(put_in_case.scene, put_in_case.prompt)
    assert canonical_json(case_to_dict(put_in_case)) == before


def test_container_geometry():
    b = basket(position=(0.0, 0.0, 0.0))
    inner = interior_box(b)
    assert inner.lo == pytest.approx((-0.055, -0.055, 0.005))
    assert inner.hi == pytest.approx((0.055, 0.055, 0.06))
    assert len(solid_boxes(b)) == 5
    with pytest.raises(InvalidInputError):
        interior_box(cube())


def test_penetration_depth():
    a = box_of(cube(position=(0.0, 0.0, 0.0)))
    b = box_of(cube(position=(0.03, 0.0, 0.0)))
    assert penetration_depth(a, b) == pytest.approx(0.01)
    far = box_of(cube(position=(0.1, 0.0, 0.0)))
    assert penetration_depth(a, far) == 0.0


def test_canonical_json_format():
    text = canonical_json({"b": 0.1 + 0.2, "a": 1, "c": [True, None]})
    assert text == '{\n  "a": 1,\n  "b": 0.3,\n  "c": [\n    true,\n    null\n  ]\n}\n'


def test_case_round_trip_is_byte_identical(put_in_case):
    text = canonical_json(case_to_dict(put_in_case))
    parsed = case_from_dict(json.loads(text))
    assert parsed == put_in_case
    assert canonical_json(case_to_dict(parsed)) == text


def test_scene_round_trip(put_on_case):
    scene = put_on_case.scene
    assert scene_from_dict(scene_to_dict(scene)) == scene


def test_case_from_dict_rejects_mismatched_text(pick_case):
    data = case_to_dict(pick_case)
    data["prompt"]["text"] = "pick the lemon"
    with pytest.raises(ConfigError):
        case_from_dict(data)


def test_case_from_dict_rejects_missing_fields(pick_case):
    data = case_to_dict(pick_case)
    del data["scene"]
    with pytest.raises(ConfigError):
        case_from_dict(data)
    data = case_to_dict(pick_case)
    data["prompt"]["target_id"] = "obj9"
    with pytest.raises(ConfigError):
        case_from_dict(data)


def test_case_from_dict_fills_missing_text(pick_case):
    data = case_to_dict(pick_case)
    data["prompt"]["text"] = ""
    assert case_from_dict(data).prompt.text == "pick the apple"


def test_seed_range():
    with pytest.raises(InvalidInputError):
        replace(make_case(TaskKind.PICK_UP, [cube()]), seed=-1)
