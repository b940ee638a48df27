"""Shared scenes, cases and hand-built execution results."""

import numpy as np
import pytest

import config
from campaign import CampaignRow
from config import CampaignConfig
from geometry import Pose, Trajectory
from scene import Scene, SceneObject, TaskKind, TestCase, make_prompt
from simulator import ExecutionResult, OPEN

CUBE = (0.02, 0.02, 0.02)


def cube(object_id="obj0", label="apple", position=(0.2, 0.0, 0.0), **kwargs) -> SceneObject:
    return SceneObject(object_id, label, CUBE, Pose(position), **kwargs)


def plate(position=(-0.1, 0.15, 0.0)) -> SceneObject:
    return SceneObject("obj1", "plate", config.SURFACE_HALF_EXTENTS, Pose(position), graspable=False)


def basket(position=(-0.1, 0.15, 0.0)) -> SceneObject:
    return SceneObject("obj1", "basket", config.CONTAINER_HALF_EXTENTS, Pose(position),
                       is_container=True, graspable=False)


def coke_can(position=(-0.1, 0.15, 0.0)) -> SceneObject:
    return SceneObject("obj1", "coke can", config.NEAR_HALF_EXTENTS, Pose(position))


def make_case(task, objects, verb=None, case_id=None, negated=False, seed=7, brightness=1.0) -> TestCase:
    task = TaskKind(task)
    scene = Scene(tuple(objects), brightness=brightness)
    verb = verb or config.VERB_LEXICON[task.value][0]
    reference = "obj1" if task.needs_reference else None
    prompt = make_prompt(scene, task, verb, "obj0", reference, negated)
    return TestCase(case_id or f"{task.value}-000", prompt, scene, seed)


def hand_result(scene: Scene, traces, gripper=None, ee=None, events=()) -> ExecutionResult:
    """ExecutionResult from per-object position lists; objects without a trace stay put"""
    steps = len(next(iter(traces.values())))
    object_traces = {}
    for obj in scene.objects:
        positions = traces.get(obj.id, [obj.position] * steps)
        object_traces[obj.id] = Trajectory(np.array(positions, dtype=np.float64))
    if ee is None:
        ee = [scene.home] * steps
    trajectory = Trajectory(np.array(ee, dtype=np.float64))
    moved = bool(np.any(np.abs(trajectory.positions - trajectory.first) > 0.0))
    return ExecutionResult(
        trajectory=trajectory,
        gripper=tuple(gripper or (OPEN,) * steps),
        object_traces=object_traces,
        events=tuple(events),
        steps=steps,
        moved=moved,
        scene=scene,
    )


def make_row(followup_id, mr="MR1_Synonym", strictness="Medium", violated=False, oracle_success=True,
             task="PickUp", labels=None, distance=0.0, status="ok") -> CampaignRow:
    source_id = followup_id.rsplit("-", 1)[0] if "-MR" in followup_id else followup_id
    return CampaignRow(source_id=source_id, followup_id=followup_id, task=task, mr=mr,
                       strictness=strictness, distance=distance, violated=violated,
                       oracle_success=oracle_success, labels=list(labels or []), status=status)


@pytest.fixture
def pick_case() -> TestCase:
    return make_case(TaskKind.PICK_UP, [cube()])


@pytest.fixture
def put_on_case() -> TestCase:
    return make_case(TaskKind.PUT_ON, [cube(), plate()])


@pytest.fixture
def put_in_case() -> TestCase:
    return make_case(TaskKind.PUT_IN, [cube(), basket()])


@pytest.fixture
def move_near_case() -> TestCase:
    return make_case(TaskKind.MOVE_NEAR, [cube(), coke_can()])


@pytest.fixture
def small_config(tmp_path) -> CampaignConfig:
    return CampaignConfig(seed=3, tasks=["PickUp"], sources_per_task=3, output_dir=str(tmp_path))
