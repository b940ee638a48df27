"""
Seeded source-suite generator: one scene template per task kind
"""
import logging
from typing import List, Optional

import numpy as np

import config
from config import CampaignConfig
from errors import GenerationError
from geometry import Pose
from scene import (Scene, SceneObject, TaskKind, TestCase, make_prompt, canonical_verb,
                   box_of, object_penetration, validate_scene)
from seeding import rng_for, derive_seed

logger = logging.getLogger(__name__)

TARGET_ID = "obj0"
REFERENCE_ID = "obj1"


def _grid(value: float) -> float:
    return round(value / config.PLACEMENT_GRID) * config.PLACEMENT_GRID


def _around_home(rng: np.random.Generator, scene: Scene, radius_range) -> tuple:
    hx, hy, _ = scene.home
    radius = rng.uniform(*radius_range)
    angle = rng.uniform(0.0, 2.0 * np.pi)
    return _grid(hx + radius * np.cos(angle)), _grid(hy + radius * np.sin(angle)), scene.table_height


def _reference_template(task: TaskKind, rng: np.random.Generator) -> SceneObject:
    if task is TaskKind.PUT_IN:
        labels, half, container = config.CONTAINER_LABELS, config.CONTAINER_HALF_EXTENTS, True
    elif task is TaskKind.PUT_ON:
        labels, half, container = config.SURFACE_LABELS, config.SURFACE_HALF_EXTENTS, False
    else:
        labels, half, container = config.NEAR_LABELS, config.NEAR_HALF_EXTENTS, False
    label = labels[int(rng.integers(len(labels)))]
    return SceneObject(REFERENCE_ID, label, half, Pose((0.0, 0.0, 0.0)), is_container=container,
                       graspable=task is TaskKind.MOVE_NEAR)


def generate_case(task: TaskKind, index: int, seed: int) -> TestCase:
    """One source case; deterministic in (task, index, seed)"""
    task = TaskKind(task)
    case_id = f"{task.value}-{index:03d}"
    rng = rng_for('suite', seed, task.value, index)
    scene = Scene(())

    label = config.TARGET_LABELS[int(rng.integers(len(config.TARGET_LABELS)))]
    target = SceneObject(TARGET_ID, label, config.TARGET_HALF_EXTENTS,
                         Pose(_around_home(rng, scene, config.TARGET_RADIUS)))
    if not scene.workspace.contains(box_of(target)):
        raise GenerationError(f"{case_id}: target leaves the workspace")
    scene = scene.with_object(target)

    reference_id = None
    if task.needs_reference:
        template = _reference_template(task, rng)
        for _ in range(config.MAX_PLACEMENT_ATTEMPTS):
            position = _around_home(rng, scene, config.REFERENCE_RADIUS)
            if np.hypot(position[0] - target.position[0],
                        position[1] - target.position[1]) < config.REFERENCE_SPACING:
                continue
            candidate = template.moved_to(position)
            if not scene.workspace.contains(box_of(candidate)):
                continue
            if object_penetration(candidate, candidate.position, target, target.position) > 0.0:
                continue
            scene = scene.with_object(candidate)
            reference_id = REFERENCE_ID
            break
        else:
            raise GenerationError(f"{case_id}: no feasible reference placement after "
                                  f"{config.MAX_PLACEMENT_ATTEMPTS} attempts")

    prompt = make_prompt(scene, task, canonical_verb(task), TARGET_ID, reference_id)
    case = TestCase(case_id, prompt, scene, derive_seed('case', seed, case_id))

    issues = validate_scene(case.scene, case.prompt)
    if issues:
        raise GenerationError(f"{case_id}: generated scene is invalid: {issues[0].message}")
    return case


def generate_suite(cfg: Optional[CampaignConfig] = None) -> List[TestCase]:
    """sources_per_task cases for every configured task, in task order"""
    cfg = cfg or CampaignConfig()
    tasks = [TaskKind(t) for t in config.TASK_KINDS if t in cfg.tasks]
    suite = [generate_case(task, i, cfg.seed) for task in tasks for i in range(cfg.sources_per_task)]
    logger.info("Generated %d source cases for %s", len(suite), ", ".join(t.value for t in tasks))
    return suite
