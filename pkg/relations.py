"""
Metamorphic relations: follow-up generation and verdict evaluation
TC relations expect the trajectory to stay put, TV relations expect it to change
"""
import math
import logging
from dataclasses import dataclass, replace, field
from enum import Enum
from typing import List, Dict, Any, Optional, Tuple

import numpy as np

import config
from config import CampaignConfig
from errors import GenerationError, InvalidInputError
from geometry import Trajectory, Pose, discrete_frechet, point_polyline_distance
from scene import (TestCase, SceneObject, make_prompt, synonym_for, box_of, object_penetration)
from seeding import rng_for
from simulator import plan_waypoints

logger = logging.getLogger(__name__)


class MRKind(str, Enum):
    MR1_SYNONYM = "MR1_Synonym"
    MR2_OBJECT_ADDITION = "MR2_ObjectAddition"
    MR3_BRIGHTNESS = "MR3_Brightness"
    MR4_NEGATION = "MR4_Negation"
    MR5_RELOCATION = "MR5_Relocation"

    @property
    def pattern(self) -> str:
        if self in (MRKind.MR4_NEGATION, MRKind.MR5_RELOCATION):
            return "TV"
        return "TC"

    @property
    def order(self) -> int:
        return config.MR_KINDS.index(self.value)


class StrictnessLevel(str, Enum):
    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"

    @property
    def order(self) -> int:
        return config.STRICTNESS_LEVELS.index(self.value)


@dataclass(frozen=True)
class Strictness:
    level: StrictnessLevel
    delta: Optional[float] = None  # None for MR5, which is bounded by (alpha, beta)
    alpha: Optional[float] = None
    beta: Optional[float] = None


@dataclass(frozen=True)
class FollowUpCase:
    id: str
    parent_id: str
    mr: MRKind
    test: TestCase
    meta: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Verdict:
    mr: MRKind
    strictness: Strictness
    distance: float
    lower: Optional[float]
    upper: Optional[float]
    violated: bool

    @property
    def bounds(self) -> Tuple[Optional[float], Optional[float]]:
        return self.lower, self.upper


def is_violated(distance: float, lower: Optional[float], upper: Optional[float]) -> bool:
    """A distance below the lower or above the upper bound violates the relation"""
    return (lower is not None and distance < lower) or (upper is not None and distance > upper)


def mr5_bounds_for(level: StrictnessLevel, cfg: Optional[CampaignConfig] = None) -> Tuple[float, float]:
    """Proportionality bounds per level; a configured alpha/beta applies to every level"""
    alpha, beta = config.MR5_PRESETS[StrictnessLevel(level).value]
    if cfg is not None:
        if cfg.mr5_alpha is not None:
            alpha = cfg.mr5_alpha
        if cfg.mr5_beta is not None:
            beta = cfg.mr5_beta
    return alpha, beta


def strictness_for(mr: MRKind, level: StrictnessLevel, cfg: Optional[CampaignConfig] = None) -> Strictness:
    mr = MRKind(mr)
    level = StrictnessLevel(level)
    if mr is MRKind.MR5_RELOCATION:
        alpha, beta = mr5_bounds_for(level, cfg)
        return Strictness(level, None, alpha, beta)
    if mr is MRKind.MR4_NEGATION:
        return Strictness(level, config.NEGATION_DELTAS[level.value])
    return Strictness(level, config.TC_DELTAS[level.value])


def evaluate(mr: MRKind, src_traj: Trajectory, fup_traj: Trajectory, strictness: Strictness,
             meta: Optional[Dict[str, Any]] = None, mr5_alpha: Optional[float] = None,
             mr5_beta: Optional[float] = None) -> Verdict:
    """
    Compare source and follow-up trajectories with the discrete Frechet distance.

    MR1-MR3 are violated when the distance exceeds delta, MR4 when it stays
    below delta, MR5 when it leaves [alpha * |dp|, beta * |dp|] with dp the
    horizontal relocation of the target.
    """
    mr = MRKind(mr)
    d = discrete_frechet(src_traj, fup_traj)

    if mr is MRKind.MR5_RELOCATION:
        if not meta or 'delta_p' not in meta:
            raise InvalidInputError("MR5 evaluation needs meta['delta_p']")
        dx, dy = meta['delta_p'][:2]
        m = math.hypot(dx, dy)
        alpha = mr5_alpha if mr5_alpha is not None else strictness.alpha
        beta = mr5_beta if mr5_beta is not None else strictness.beta
        alpha = config.MR5_ALPHA if alpha is None else alpha
        beta = config.MR5_BETA if beta is None else beta
        lower, upper = alpha * m, beta * m
    elif mr is MRKind.MR4_NEGATION:
        lower, upper = strictness.delta, None
    else:
        lower, upper = None, strictness.delta

    if lower is None and upper is None:
        raise InvalidInputError(f"No bounds for {mr.value} at {strictness.level.value}")
    return Verdict(mr, strictness, d, lower, upper, is_violated(d, lower, upper))


# Follow-up generation

def _round_grid(value: float) -> float:
    return round(value / config.PLACEMENT_GRID) * config.PLACEMENT_GRID


def _fits(obj: SceneObject, position, others: List[SceneObject], workspace) -> bool:
    if not workspace.contains(box_of(obj, position)):
        return False
    return all(object_penetration(obj, position, o, o.position) <= config.OVERLAP_TOLERANCE
               for o in others)


def _synonym(src: TestCase, seed: int, cfg: CampaignConfig) -> Tuple[TestCase, Dict[str, Any]]:
    try:
        verb = synonym_for(src.prompt.verb, src.prompt.task, seed)
    except InvalidInputError as e:
        raise GenerationError(f"{src.id}: {e}") from e
    prompt = make_prompt(src.scene, src.prompt.task, verb, src.prompt.target_id,
                         src.prompt.reference_id, src.prompt.negated)
    return replace(src, prompt=prompt), {'original_verb': src.prompt.verb, 'verb': verb}


def _add_distractor(src: TestCase, seed: int, cfg: CampaignConfig) -> Tuple[TestCase, Dict[str, Any]]:
    scene = src.scene
    rng = rng_for('mr2', src.id, seed)
    target = scene.find(src.prompt.target_id)
    waypoints = plan_waypoints(src)

    used_labels = {o.label for o in scene.objects}
    labels = [label for label in config.DISTRACTOR_LABELS if label not in used_labels]
    if not labels:
        raise GenerationError(f"{src.id}: no free distractor label")
    label = labels[int(rng.integers(len(labels)))]

    ids = set(scene.ids())
    k = 0
    while f"distractor{k}" in ids:
        k += 1
    object_id = f"distractor{k}"

    h = config.DISTRACTOR_HALF_EXTENT
    clearance = config.PATH_CLEARANCE + math.sqrt(3.0) * h
    lo, hi = scene.workspace.lo, scene.workspace.hi
    template = SceneObject(object_id, label, (h, h, h), Pose((0.0, 0.0, scene.table_height)))

    for attempt in range(config.MAX_PLACEMENT_ATTEMPTS):
        x = _round_grid(rng.uniform(lo[0] + h, hi[0] - h))
        y = _round_grid(rng.uniform(lo[1] + h, hi[1] - h))
        position = (x, y, scene.table_height)
        if np.hypot(x - target.position[0], y - target.position[1]) < config.DISTRACTOR_SPACING:
            continue
        if point_polyline_distance((x, y, scene.table_height + h), waypoints) < clearance:
            continue
        if not _fits(template, position, list(scene.objects), scene.workspace):
            continue
        logger.debug("%s: distractor placed after %d attempts", src.id, attempt + 1)
        return (replace(src, scene=scene.with_object(template.moved_to(position))),
                {'added_object_id': object_id})

    raise GenerationError(f"{src.id}: no feasible distractor placement after "
                          f"{config.MAX_PLACEMENT_ATTEMPTS} attempts")


def _brighten(src: TestCase, seed: int, cfg: CampaignConfig) -> Tuple[TestCase, Dict[str, Any]]:
    rng = rng_for('mr3', src.id, seed)
    factors = cfg.brightness_factors
    factor = float(factors[int(rng.integers(len(factors)))])
    brightness = src.scene.brightness * factor
    if brightness > config.BRIGHTNESS_MAX:
        raise GenerationError(f"{src.id}: brightness {brightness} above {config.BRIGHTNESS_MAX}")
    return replace(src, scene=replace(src.scene, brightness=brightness)), {'brightness_factor': factor}


def _negate(src: TestCase, seed: int, cfg: CampaignConfig) -> Tuple[TestCase, Dict[str, Any]]:
    p = src.prompt
    if p.negated:
        raise GenerationError(f"{src.id}: prompt is already negated")
    prompt = make_prompt(src.scene, p.task, p.verb, p.target_id, p.reference_id, negated=True)
    return replace(src, prompt=prompt), {}


def _relocate(src: TestCase, seed: int, cfg: CampaignConfig) -> Tuple[TestCase, Dict[str, Any]]:
    scene = src.scene
    rng = rng_for('mr5', src.id, seed)
    target = scene.find(src.prompt.target_id)
    others = [o for o in scene.objects if o.id != target.id]
    x0, y0, z0 = target.position

    for _ in range(config.MAX_PLACEMENT_ATTEMPTS):
        radius = rng.uniform(config.RELOCATION_MIN, config.RELOCATION_MAX)
        angle = rng.uniform(0.0, 2.0 * np.pi)
        dx = _round_grid(radius * np.cos(angle))
        dy = _round_grid(radius * np.sin(angle))
        if not config.RELOCATION_MIN <= math.hypot(dx, dy) <= config.RELOCATION_MAX:
            continue
        position = (x0 + dx, y0 + dy, z0)
        if not _fits(target, position, others, scene.workspace):
            continue
        moved = replace(src, scene=scene.with_replaced(target.moved_to(position)))
        return moved, {'delta_p': [dx, dy], 'original_position': [x0, y0, z0]}

    raise GenerationError(f"{src.id}: no feasible relocation after "
                          f"{config.MAX_PLACEMENT_ATTEMPTS} attempts")


TRANSFORMS = {
    MRKind.MR1_SYNONYM: _synonym,
    MRKind.MR2_OBJECT_ADDITION: _add_distractor,
    MRKind.MR3_BRIGHTNESS: _brighten,
    MRKind.MR4_NEGATION: _negate,
    MRKind.MR5_RELOCATION: _relocate,
}


def followup_id(src_id: str, mr: MRKind) -> str:
    return f"{src_id}-{MRKind(mr).value}"


def generate_followup(mr: MRKind, src: TestCase, seed: int,
                      cfg: Optional[CampaignConfig] = None) -> FollowUpCase:
    """Transform a source case; deterministic in (mr, src, seed)"""
    mr = MRKind(mr)
    cfg = cfg or CampaignConfig()
    test, meta = TRANSFORMS[mr](src, seed, cfg)
    fid = followup_id(src.id, mr)
    return FollowUpCase(fid, src.id, mr, replace(test, id=fid), meta)
