"""
Scenes, objects, prompts and test cases
Object positions are base points: the centre of the box's bottom face
"""
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Dict, Any, Optional, Tuple, Sequence

import numpy as np

import config
from errors import InvalidInputError, UnknownObjectError, ConfigError
from geometry import Pose, Vec3
from seeding import rng_for


class TaskKind(str, Enum):
    PICK_UP = "PickUp"
    MOVE_NEAR = "MoveNear"
    PUT_ON = "PutOn"
    PUT_IN = "PutIn"

    @property
    def needs_reference(self) -> bool:
        return self is not TaskKind.PICK_UP


PROMPT_TEMPLATES = {
    TaskKind.PICK_UP: "{verb} the {target}",
    TaskKind.MOVE_NEAR: "{verb} the {target} near the {reference}",
    TaskKind.PUT_ON: "{verb} the {target} on the {reference}",
    TaskKind.PUT_IN: "{verb} the {target} in the {reference}",
}


@dataclass(frozen=True)
class Box:
    """Axis-aligned box"""
    lo: Vec3
    hi: Vec3

    def contains(self, other: 'Box', tolerance: float = 0.0) -> bool:
        return all(self.lo[i] - tolerance <= other.lo[i] and other.hi[i] <= self.hi[i] + tolerance
                   for i in range(3))

    def contains_point(self, point: Sequence[float]) -> bool:
        return all(self.lo[i] <= point[i] <= self.hi[i] for i in range(3))


@dataclass(frozen=True)
class SceneObject:
    id: str
    label: str
    half_extents: Vec3
    pose: Pose
    is_container: bool = False
    graspable: bool = True

    def __post_init__(self):
        half_extents = tuple(float(v) for v in self.half_extents)
        if len(half_extents) != 3 or not all(v > 0.0 and math.isfinite(v) for v in half_extents):
            raise InvalidInputError(f"Object {self.id}: half extents must be positive, got {half_extents}")
        object.__setattr__(self, 'half_extents', half_extents)

    @property
    def position(self) -> Vec3:
        return self.pose.position

    @property
    def height(self) -> float:
        return 2.0 * self.half_extents[2]

    @property
    def top(self) -> float:
        return self.position[2] + self.height

    def moved_to(self, position: Sequence[float]) -> 'SceneObject':
        return replace(self, pose=Pose(tuple(position), self.pose.orientation))


@dataclass(frozen=True)
class Scene:
    objects: Tuple[SceneObject, ...]
    workspace: Box = Box(config.WORKSPACE_MIN, config.WORKSPACE_MAX)
    table_height: float = config.TABLE_HEIGHT
    brightness: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'objects', tuple(self.objects))

    def find(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise UnknownObjectError(f"Unknown object id: {object_id}")

    def by_label(self, label: str) -> SceneObject:
        for obj in self.objects:
            if obj.label == label:
                return obj
        raise UnknownObjectError(f"No object labelled '{label}'")

    def ids(self) -> List[str]:
        return [obj.id for obj in self.objects]

    def with_object(self, obj: SceneObject) -> 'Scene':
        return replace(self, objects=self.objects + (obj,))

    def with_replaced(self, obj: SceneObject) -> 'Scene':
        return replace(self, objects=tuple(obj if o.id == obj.id else o for o in self.objects))

    @property
    def home(self) -> Vec3:
        lo, hi = self.workspace.lo, self.workspace.hi
        return ((lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0, self.table_height + config.HOME_HEIGHT)


@dataclass(frozen=True)
class Prompt:
    task: TaskKind
    verb: str
    target_id: str
    reference_id: Optional[str] = None
    negated: bool = False
    text: str = ''


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # not a pytest class

    id: str
    prompt: Prompt
    scene: Scene
    seed: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidInputError(f"Seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass(frozen=True)
class SceneIssue:
    kind: str
    message: str
    ids: Tuple[str, ...] = field(default_factory=tuple)


def render_prompt(task: TaskKind, target_label: str, reference_label: Optional[str],
                  verb: str, negated: bool) -> str:
    """Fill the task's instruction template"""
    task = TaskKind(task)
    if task.needs_reference and not reference_label:
        raise InvalidInputError(f"{task.value} needs a reference object")
    if not task.needs_reference and reference_label:
        raise InvalidInputError(f"{task.value} takes no reference object")

    text = PROMPT_TEMPLATES[task].format(verb=verb, target=target_label, reference=reference_label)
    if negated:
        text = "don't " + text
    return text


def make_prompt(scene: Scene, task: TaskKind, verb: str, target_id: str,
                reference_id: Optional[str] = None, negated: bool = False) -> Prompt:
    """Build a prompt whose text is rendered from the scene's labels"""
    task = TaskKind(task)
    target = scene.find(target_id)
    reference = scene.find(reference_id) if reference_id else None
    text = render_prompt(task, target.label, reference.label if reference else None, verb, negated)
    return Prompt(task, verb, target_id, reference_id, negated, text)


def synonym_for(verb: str, task: TaskKind, rng_seed: int,
                lexicon: Optional[Dict[str, List[str]]] = None) -> str:
    """Seeded pick of a different verb from the task's synonym set"""
    lexicon = lexicon or config.VERB_LEXICON
    task = TaskKind(task)
    verbs = lexicon.get(task.value, [])
    if verb not in verbs:
        raise InvalidInputError(f"'{verb}' is not in the {task.value} lexicon")

    candidates = [v for v in verbs if v != verb]
    if not candidates:
        raise InvalidInputError(f"The {task.value} lexicon has no synonym for '{verb}'")
    rng = rng_for('synonym', task.value, verb, rng_seed)
    return candidates[int(rng.integers(len(candidates)))]


def canonical_verb(task: TaskKind, lexicon: Optional[Dict[str, List[str]]] = None) -> str:
    lexicon = lexicon or config.VERB_LEXICON
    return lexicon[TaskKind(task).value][0]


# Box geometry

def box_of(obj: SceneObject, position: Optional[Sequence[float]] = None) -> Box:
    x, y, z = obj.position if position is None else position
    hx, hy, hz = obj.half_extents
    return Box((x - hx, y - hy, z), (x + hx, y + hy, z + 2.0 * hz))


def interior_box(obj: SceneObject, position: Optional[Sequence[float]] = None) -> Box:
    """Free space inside a container: outer box minus walls and floor"""
    if not obj.is_container:
        raise InvalidInputError(f"Object {obj.id} is not a container")
    x, y, z = obj.position if position is None else position
    hx, hy, hz = obj.half_extents
    w = config.CONTAINER_WALL
    return Box((x - hx + w, y - hy + w, z + w), (x + hx - w, y + hy - w, z + 2.0 * hz))


def solid_boxes(obj: SceneObject, position: Optional[Sequence[float]] = None) -> List[Box]:
    """Solid parts of an object; a container is a floor plus four walls"""
    outer = box_of(obj, position)
    if not obj.is_container:
        return [outer]

    (x0, y0, z0), (x1, y1, z1) = outer.lo, outer.hi
    w = config.CONTAINER_WALL
    return [
        Box((x0, y0, z0), (x1, y1, z0 + w)),
        Box((x0, y0, z0), (x0 + w, y1, z1)),
        Box((x1 - w, y0, z0), (x1, y1, z1)),
        Box((x0, y0, z0), (x1, y0 + w, z1)),
        Box((x0, y1 - w, z0), (x1, y1, z1)),
    ]


def penetration_depth(a: Box, b: Box) -> float:
    """Smallest per-axis overlap of two boxes, zero when they only touch or are apart"""
    overlaps = [min(a.hi[i], b.hi[i]) - max(a.lo[i], b.lo[i]) for i in range(3)]
    depth = min(overlaps)
    return depth if depth > 0.0 else 0.0


def point_penetration(point: Sequence[float], box: Box) -> float:
    depth = min(min(point[i] - box.lo[i], box.hi[i] - point[i]) for i in range(3))
    return depth if depth > 0.0 else 0.0


def object_penetration(a: SceneObject, pos_a: Sequence[float],
                       b: SceneObject, pos_b: Sequence[float]) -> float:
    return max(penetration_depth(sa, sb)
               for sa in solid_boxes(a, pos_a) for sb in solid_boxes(b, pos_b))


def validate_scene(s: Scene, prompt: Optional[Prompt] = None) -> List[SceneIssue]:
    """List every invariant breach of a scene (and its prompt); never mutates"""
    issues = []

    seen = set()
    for obj in s.objects:
        if obj.id in seen:
            issues.append(SceneIssue("duplicate_id", f"Object id {obj.id} is used twice", (obj.id,)))
        seen.add(obj.id)

    if not 0.0 < s.brightness <= config.BRIGHTNESS_MAX:
        issues.append(SceneIssue("brightness",
                                 f"Brightness {s.brightness} outside (0, {config.BRIGHTNESS_MAX}]"))

    for obj in s.objects:
        if not s.workspace.contains_point(obj.position):
            issues.append(SceneIssue("outside_workspace",
                                     f"Object {obj.id} at {obj.position} is outside the workspace",
                                     (obj.id,)))

    for i, a in enumerate(s.objects):
        for b in s.objects[i + 1:]:
            depth = object_penetration(a, a.position, b, b.position)
            if depth > config.OVERLAP_TOLERANCE:
                issues.append(SceneIssue("overlap",
                                         f"Objects {a.id} and {b.id} overlap by {depth:.6f} m",
                                         (a.id, b.id)))

    if prompt is not None:
        issues.extend(_prompt_issues(s, prompt))

    return issues


def _prompt_issues(s: Scene, prompt: Prompt) -> List[SceneIssue]:
    issues = []
    ids = set(s.ids())
    for role, object_id in (("target", prompt.target_id), ("reference", prompt.reference_id)):
        if object_id is not None and object_id not in ids:
            issues.append(SceneIssue("dangling_reference",
                                     f"Prompt {role} {object_id} is not in the scene", (object_id,)))

    if prompt.task.needs_reference and prompt.reference_id is None:
        issues.append(SceneIssue("dangling_reference", f"{prompt.task.value} prompt has no reference"))

    if prompt.task is TaskKind.PUT_IN and prompt.reference_id in ids:
        if not s.find(prompt.reference_id).is_container:
            issues.append(SceneIssue("not_container",
                                     f"PutIn reference {prompt.reference_id} is not a container",
                                     (prompt.reference_id,)))
    return issues


# Canonical JSON

def canonical_float(value: float) -> float:
    return float(f"{value:.{config.FLOAT_DIGITS}g}")


def _canonical(value):
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return canonical_float(float(value))
    if isinstance(value, dict):
        return {str(k): _canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_canonical(v) for v in value]
    raise TypeError(f"Cannot serialise {type(value).__name__}")


def canonical_json(obj: Any) -> str:
    """Sorted keys, floats rounded to nine significant digits, trailing newline"""
    return json.dumps(_canonical(obj), sort_keys=True, indent=2) + '\n'


def object_to_dict(obj: SceneObject) -> Dict[str, Any]:
    return {
        'id': obj.id,
        'label': obj.label,
        'half_extents': list(obj.half_extents),
        'pose': {'position': list(obj.pose.position), 'orientation': list(obj.pose.orientation)},
        'is_container': obj.is_container,
        'graspable': obj.graspable,
    }


def scene_to_dict(s: Scene) -> Dict[str, Any]:
    return {
        'objects': [object_to_dict(o) for o in s.objects],
        'workspace': {'min': list(s.workspace.lo), 'max': list(s.workspace.hi)},
        'table_height': s.table_height,
        'brightness': s.brightness,
    }


def prompt_to_dict(p: Prompt) -> Dict[str, Any]:
    return {
        'task': p.task.value,
        'verb': p.verb,
        'target_id': p.target_id,
        'reference_id': p.reference_id,
        'negated': p.negated,
        'text': p.text,
    }


def case_to_dict(tc: TestCase) -> Dict[str, Any]:
    return {
        'id': tc.id,
        'prompt': prompt_to_dict(tc.prompt),
        'scene': scene_to_dict(tc.scene),
        'seed': tc.seed,
    }


def object_from_dict(data: Dict[str, Any]) -> SceneObject:
    pose = data['pose']
    return SceneObject(
        id=str(data['id']),
        label=str(data['label']),
        half_extents=tuple(data['half_extents']),
        pose=Pose(tuple(pose['position']), tuple(pose['orientation'])),
        is_container=bool(data.get('is_container', False)),
        graspable=bool(data.get('graspable', True)),
    )


def scene_from_dict(data: Dict[str, Any]) -> Scene:
    try:
        workspace = data['workspace']
        return Scene(
            objects=tuple(object_from_dict(o) for o in data['objects']),
            workspace=Box(tuple(float(v) for v in workspace['min']),
                          tuple(float(v) for v in workspace['max'])),
            table_height=float(data['table_height']),
            brightness=float(data['brightness']),
        )
    except (KeyError, TypeError) as e:
        raise ConfigError(f"Malformed scene: {e}") from e


def prompt_from_dict(data: Dict[str, Any]) -> Prompt:
    try:
        return Prompt(
            task=TaskKind(data['task']),
            verb=str(data['verb']),
            target_id=str(data['target_id']),
            reference_id=data.get('reference_id'),
            negated=bool(data.get('negated', False)),
            text=str(data.get('text', '')),
        )
    except (KeyError, ValueError) as e:
        raise ConfigError(f"Malformed prompt: {e}") from e


def case_from_dict(data: Dict[str, Any]) -> TestCase:
    try:
        scene = scene_from_dict(data['scene'])
        prompt = prompt_from_dict(data['prompt'])
        case = TestCase(id=str(data['id']), prompt=prompt, scene=scene, seed=int(data['seed']))
        expected = make_prompt(scene, prompt.task, prompt.verb, prompt.target_id,
                               prompt.reference_id, prompt.negated).text
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Malformed test case: {e}") from e

    if prompt.text and prompt.text != expected:
        raise ConfigError(f"Test case {case.id}: prompt text '{prompt.text}' does not match its fields")
    return replace(case, prompt=replace(prompt, text=expected))
