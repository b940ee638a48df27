"""
Deterministic kinematic world and the scripted pick-and-place controller
The controller plans waypoints from what it perceives, then integrates
them at a fixed step; fault profiles perturb the plan or the execution.
"""
import json
import math
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Dict, Any, Optional, Tuple, Iterator

import numpy as np

import config
from errors import ExecutionError, InvalidInputError
from geometry import Trajectory, Vec3, euclidean, IDENTITY_QUATERNION, GRASP_QUATERNION
from scene import (TestCase, Scene, SceneObject, TaskKind, validate_scene, canonical_verb,
                   object_penetration, solid_boxes, point_penetration, interior_box)
from seeding import unit_direction

logger = logging.getLogger(__name__)

OPEN = "open"
CLOSED = "closed"
GRIPPER_ID = "gripper"


class FaultKind(str, Enum):
    NONE = "None"
    PROMPT_VERB_SENSITIVITY = "PromptVerbSensitivity"
    DISTRACTOR_ATTRACTION = "DistractorAttraction"
    ILLUMINATION_SENSITIVITY = "IlluminationSensitivity"
    NEGATION_BLINDNESS = "NegationBlindness"
    RELOCATION_REACTION = "RelocationReaction"
    GRASP_INSTABILITY = "GraspInstability"
    OSCILLATION_NOISE = "OscillationNoise"
    COLLISION_BLINDNESS = "CollisionBlindness"


@dataclass(frozen=True)
class FaultProfile:
    """Behavioural defect injected into the scripted controller"""
    kind: FaultKind = FaultKind.NONE
    magnitude: float = 0.0
    trigger_step: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', FaultKind(self.kind))
        object.__setattr__(self, 'magnitude', float(self.magnitude))
        if self.magnitude < 0.0 or not math.isfinite(self.magnitude):
            raise InvalidInputError(f"Fault magnitude must be a finite value >= 0, got {self.magnitude}")
        if self.trigger_step is not None and self.trigger_step < 0:
            raise InvalidInputError("Fault trigger_step must be >= 0")

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind.value, 'magnitude': self.magnitude, 'trigger_step': self.trigger_step}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'FaultProfile':
        try:
            return cls(FaultKind(data.get('kind', 'None')), data.get('magnitude', 0.0),
                       data.get('trigger_step'))
        except ValueError as e:
            raise InvalidInputError(f"Invalid fault profile {data}: {e}") from e

    @classmethod
    def parse(cls, text: str) -> 'FaultProfile':
        """Parse 'Kind[:magnitude[:trigger_step]]' as given on the command line"""
        parts = text.split(':')
        try:
            kind = FaultKind(parts[0])
            magnitude = float(parts[1]) if len(parts) > 1 else 0.0
            trigger = int(parts[2]) if len(parts) > 2 else None
        except ValueError as e:
            raise InvalidInputError(f"Invalid fault '{text}': {e}") from e
        return cls(kind, magnitude, trigger)


NO_FAULT = FaultProfile()


@dataclass(frozen=True)
class Event:
    step: int
    kind: str  # grasp | release | drop | contact
    objects: Tuple[str, ...]


@dataclass(frozen=True)
class Waypoint:
    position: Vec3
    action: Optional[str] = None  # "close" | "open" on arrival
    free_space: bool = False  # segment leading here is a transit


@dataclass
class ExecutionResult:
    trajectory: Trajectory
    gripper: Tuple[str, ...]
    object_traces: Dict[str, Trajectory]
    events: Tuple[Event, ...]
    steps: int
    moved: bool
    scene: Scene
    grasp_step: Optional[int] = None
    waypoints: Tuple[Vec3, ...] = field(default_factory=tuple)

    def held_at(self, index: int) -> Optional[str]:
        return held_object(self.gripper[index])

    def final_position(self, object_id: str) -> np.ndarray:
        return self.object_traces[object_id].last


def held_object(state: str) -> Optional[str]:
    if state.startswith("holding:"):
        return state[len("holding:"):]
    return None


def _holding(object_id: str) -> str:
    return f"holding:{object_id}"


def resolve_objects(tc: TestCase) -> Tuple[SceneObject, Optional[SceneObject]]:
    """Find the prompt's target and reference the way the controller sees them: by label"""
    scene = tc.scene
    resolved = []
    for object_id in (tc.prompt.target_id, tc.prompt.reference_id):
        if object_id is None:
            resolved.append(None)
            continue
        try:
            obj = scene.find(object_id)
        except InvalidInputError as e:
            raise ExecutionError(f"Test case {tc.id}: {e}") from e
        matches = [o for o in scene.objects if o.label == obj.label]
        if len(matches) != 1:
            raise ExecutionError(f"Test case {tc.id}: label '{obj.label}' is ambiguous")
        resolved.append(obj)
    return resolved[0], resolved[1]


def perceived_target(tc: TestCase, fault: FaultProfile = NO_FAULT,
                     meta: Optional[Dict[str, Any]] = None) -> np.ndarray:
    target, _ = resolve_objects(tc)
    actual = np.array(target.position)

    if fault.kind is FaultKind.ILLUMINATION_SENSITIVITY:
        shift = fault.magnitude * abs(tc.scene.brightness - 1.0)
        return actual + shift * unit_direction('illumination', tc.seed)

    if fault.kind is FaultKind.RELOCATION_REACTION and meta and 'original_position' in meta:
        original = np.array(meta['original_position'], dtype=np.float64)
        return original + fault.magnitude * (actual - original)

    return actual


def _near_placement(tc: TestCase, target: SceneObject, reference: SceneObject) -> np.ndarray:
    """Beside the reference, on its horizontal axis that points towards home"""
    home = np.array(tc.scene.home)
    ref = np.array(reference.position)
    towards = home[:2] - ref[:2]
    axis = 0 if abs(towards[0]) >= abs(towards[1]) else 1
    sign = 1.0 if towards[axis] >= 0.0 else -1.0
    offset = np.zeros(3)
    offset[axis] = sign * (target.half_extents[axis] + reference.half_extents[axis] + config.NEAR_GAP)
    return ref + offset


def plan(tc: TestCase, fault: FaultProfile = NO_FAULT,
         meta: Optional[Dict[str, Any]] = None) -> List[Waypoint]:
    """Waypoint plan of the scripted controller for the prompt's task (negation not applied)"""
    scene = tc.scene
    target, reference = resolve_objects(tc)
    task = tc.prompt.task
    if task is not TaskKind.MOVE_NEAR and not target.graspable:
        raise ExecutionError(f"Test case {tc.id}: target {target.id} is not graspable")
    if task.needs_reference and reference is None:
        raise ExecutionError(f"Test case {tc.id}: {task.value} needs a reference object")

    perceived = perceived_target(tc, fault, meta)
    top = perceived[2] + target.height
    # A collision-blind grasp does not stop at the top face; the held object's
    # base then sits `height` below the end effector.
    blind = fault.kind is FaultKind.COLLISION_BLINDNESS
    height = target.height - config.COLLISION_BLIND_DEPTH if blind else target.height
    # Only a transit to a reference has obstacles to clear; a PickUp lift is the task itself
    clearance = (config.COLLISION_BLIND_CLEARANCE if blind and task.needs_reference
                 else config.LIFT_HEIGHT)
    lift_z = scene.table_height + clearance + height

    x, y = perceived[0], perceived[1]
    waypoints = [
        Waypoint(scene.home),
        Waypoint((x, y, top + config.PRE_GRASP_HEIGHT), free_space=True),
        Waypoint((x, y, perceived[2] + height), action="close"),
        Waypoint((x, y, lift_z)),
    ]

    if task.needs_reference:
        if task is TaskKind.PUT_ON:
            px, py, _ = reference.position
            place_z = reference.top + height
        elif task is TaskKind.PUT_IN:
            if not reference.is_container:
                raise ExecutionError(f"Test case {tc.id}: {reference.id} is not a container")
            px, py, _ = reference.position
            place_z = reference.position[2] + config.CONTAINER_WALL + height
        else:
            px, py, base = _near_placement(tc, target, reference)
            place_z = base + height
        waypoints += [
            Waypoint((px, py, lift_z), free_space=True),
            Waypoint((px, py, place_z), action="open"),
            Waypoint((px, py, lift_z)),
        ]

    return _perturb_plan(tc, waypoints, fault)


def _perturb_plan(tc: TestCase, waypoints: List[Waypoint], fault: FaultProfile) -> List[Waypoint]:
    if fault.kind is FaultKind.PROMPT_VERB_SENSITIVITY:
        verb = tc.prompt.verb
        if verb == canonical_verb(tc.prompt.task):
            return waypoints
        offset = fault.magnitude * unit_direction('verb', verb)
        return [waypoints[0]] + [_shifted(w, offset) for w in waypoints[1:]]

    if fault.kind is FaultKind.DISTRACTOR_ATTRACTION:
        named = {tc.prompt.target_id, tc.prompt.reference_id}
        distractors = [o for o in tc.scene.objects if o.id not in named]
        if not distractors:
            return waypoints
        bent = [waypoints[0]]
        for w in waypoints[1:]:
            p = np.array(w.position)
            nearest = min(distractors, key=lambda o: (np.hypot(o.position[0] - p[0], o.position[1] - p[1]), o.id))
            towards = np.array([nearest.position[0] - p[0], nearest.position[1] - p[1], 0.0])
            norm = np.linalg.norm(towards)
            direction = towards / norm if norm > 0.0 else np.array([1.0, 0.0, 0.0])
            bent.append(_shifted(w, fault.magnitude * direction))
        return bent

    return waypoints


def _shifted(w: Waypoint, offset: np.ndarray) -> Waypoint:
    return Waypoint(tuple(np.array(w.position) + offset), w.action, w.free_space)


def plan_waypoints(tc: TestCase, fault: FaultProfile = NO_FAULT,
                   meta: Optional[Dict[str, Any]] = None) -> List[np.ndarray]:
    return [np.array(w.position) for w in plan(tc, fault, meta)]


def _lateral(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    horizontal = np.array([-d[1], d[0], 0.0])
    norm = np.linalg.norm(horizontal)
    if norm < 1e-12:
        return np.array([1.0, 0.0, 0.0])
    return horizontal / norm


def _triangle(k: int) -> float:
    """0, +1, 0, -1 over one period"""
    return (0.0, 1.0, 0.0, -1.0)[k % config.OSCILLATION_PERIOD]


def integrate(waypoints: List[Waypoint], fault: FaultProfile = NO_FAULT
              ) -> Tuple[List[np.ndarray], Dict[int, str]]:
    """Sample waypoint segments at the fixed step; returns samples and arrival actions by index"""
    samples = [np.array(waypoints[0].position)]
    arrivals = {}
    for prev, cur in zip(waypoints, waypoints[1:]):
        a = np.array(prev.position)
        b = np.array(cur.position)
        n = max(1, math.ceil(euclidean(a, b) / config.STEP_SIZE - 1e-9))
        lateral = None
        if fault.kind is FaultKind.OSCILLATION_NOISE and cur.free_space:
            lateral = _lateral(a, b)
        for k in range(1, n + 1):
            p = b.copy() if k == n else a + (k / n) * (b - a)
            if lateral is not None and k < n:
                p = p + fault.magnitude * _triangle(k) * lateral
            samples.append(p)
        if cur.action:
            arrivals[len(samples) - 1] = cur.action
    return samples, arrivals


def _support_height(obj: SceneObject, position: np.ndarray, scene: Scene,
                    positions: Dict[str, np.ndarray]) -> float:
    """Highest surface below the object's base point"""
    x, y, z = position
    support = scene.table_height
    for other in scene.objects:
        if other.id == obj.id:
            continue
        ox, oy, oz = positions[other.id]
        hx, hy, hz = other.half_extents
        if abs(x - ox) > hx or abs(y - oy) > hy:
            continue
        if other.is_container:
            inner = interior_box(other, positions[other.id])
            inside = inner.lo[0] <= x <= inner.hi[0] and inner.lo[1] <= y <= inner.hi[1]
            surface = inner.lo[2] if inside else oz + 2.0 * hz
        else:
            surface = oz + 2.0 * hz
        if surface <= z + 1e-9:
            support = max(support, surface)
    return support


def _contacts(scene: Scene, positions: Dict[str, np.ndarray], ee: np.ndarray,
              exempt: Tuple[str, ...]) -> List[Tuple[str, str]]:
    pairs = []
    objects = scene.objects
    for i, a in enumerate(objects):
        for b in objects[i + 1:]:
            if object_penetration(a, positions[a.id], b, positions[b.id]) > config.CONTACT_TOLERANCE:
                pairs.append(tuple(sorted((a.id, b.id))))
    for obj in objects:
        if obj.id in exempt:
            continue
        depth = max(point_penetration(ee, box) for box in solid_boxes(obj, positions[obj.id]))
        if depth > config.CONTACT_TOLERANCE:
            pairs.append((GRIPPER_ID, obj.id))
    return pairs


def execute(tc: TestCase, fault: FaultProfile = NO_FAULT,
            meta: Optional[Dict[str, Any]] = None) -> ExecutionResult:
    """Run the scripted controller on a test case; a pure function of its arguments"""
    issues = validate_scene(tc.scene, tc.prompt)
    if issues:
        raise ExecutionError(f"Test case {tc.id} is invalid: " + "; ".join(i.message for i in issues))

    if tc.prompt.negated and fault.kind is not FaultKind.NEGATION_BLINDNESS:
        return stationary_result(tc.scene, config.STATIONARY_STEPS)

    waypoints = plan(tc, fault, meta)
    samples, arrivals = integrate(waypoints, fault)

    scene = tc.scene
    target_id = tc.prompt.target_id
    target = scene.find(target_id)
    positions = {o.id: np.array(o.position, dtype=np.float64) for o in scene.objects}

    held = None
    offset = None
    gripper = OPEN
    falling = set()
    grasp_step = None
    dropped = None  # (object id, grasp offset) while a GraspInstability drop is pending
    regrasp_at = None
    instability_fired = False
    in_contact = set()

    events = []
    gripper_trace = []
    object_samples = {o.id: [] for o in scene.objects}

    for t, ee in enumerate(samples):
        for object_id in sorted(falling):
            obj = scene.find(object_id)
            pos = positions[object_id]
            support = _support_height(obj, pos, scene, positions)
            if pos[2] - support > 1e-12:
                pos[2] = max(support, pos[2] - config.FALL_STEP)
            else:
                falling.discard(object_id)

        if held is not None:
            positions[held] = ee + offset

        action = arrivals.get(t)
        if action == "close":
            top_centre = positions[target_id] + np.array([0.0, 0.0, target.height])
            if target.graspable and euclidean(ee, top_centre) <= config.GRASP_REACH:
                held = target_id
                offset = positions[target_id] - ee
                gripper = _holding(held)
                grasp_step = t
                falling.discard(held)
                events.append(Event(t, "grasp", (held,)))
            else:
                gripper = CLOSED
                logger.debug("%s: grasp missed %s at step %d", tc.id, target_id, t)
        elif action == "open":
            if held is not None:
                events.append(Event(t, "release", (held,)))
                falling.add(held)
                held = None
            dropped = None
            regrasp_at = None
            gripper = OPEN

        if fault.kind is FaultKind.GRASP_INSTABILITY:
            trigger = fault.trigger_step
            if trigger is None and grasp_step is not None:
                trigger = grasp_step + config.GRASP_INSTABILITY_DELAY
            if not instability_fired and held is not None and trigger is not None and t >= trigger:
                instability_fired = True
                events.append(Event(t, "drop", (held,)))
                dropped = (held, offset)
                falling.add(held)
                held = None
                gripper = CLOSED
                regrasp_at = t + config.REGRASP_DELAY
            elif dropped is not None and t == regrasp_at:
                held, offset = dropped
                dropped = None
                positions[held] = ee + offset
                falling.discard(held)
                gripper = _holding(held)
                events.append(Event(t, "grasp", (held,)))

        exempt = (target_id,) if held is None else (target_id, held)
        now = set(_contacts(scene, positions, ee, exempt))
        for pair in sorted(now - in_contact):
            events.append(Event(t, "contact", pair))
        in_contact = now

        gripper_trace.append(gripper)
        for object_id, pos in positions.items():
            object_samples[object_id].append(pos.copy())

    n = len(samples)
    orientations = [IDENTITY_QUATERNION] + [GRASP_QUATERNION] * (n - 1)
    trajectory = Trajectory(np.array(samples), orientations)
    traces = {object_id: Trajectory(np.array(trace)) for object_id, trace in object_samples.items()}
    moved = bool(np.any(np.abs(trajectory.positions - trajectory.first) > 0.0))

    logger.debug("%s: executed %d steps, %d events", tc.id, n, len(events))
    return ExecutionResult(
        trajectory=trajectory,
        gripper=tuple(gripper_trace),
        object_traces=traces,
        events=tuple(events),
        steps=n,
        moved=moved,
        scene=scene,
        grasp_step=grasp_step,
        waypoints=tuple(tuple(float(v) for v in w.position) for w in waypoints),
    )


def stationary_result(scene: Scene, steps: int) -> ExecutionResult:
    """Robot stays at home for the given number of steps; objects stay put"""
    if steps < 1:
        raise InvalidInputError(f"steps must be >= 1, got {steps}")
    home = np.tile(np.array(scene.home), (steps, 1))
    traces = {o.id: Trajectory(np.tile(np.array(o.position), (steps, 1))) for o in scene.objects}
    return ExecutionResult(
        trajectory=Trajectory(home),
        gripper=(OPEN,) * steps,
        object_traces=traces,
        events=(),
        steps=steps,
        moved=False,
        scene=scene,
        waypoints=(tuple(scene.home),),
    )


def result_to_dict(result: ExecutionResult) -> Dict[str, Any]:
    return {
        'steps': result.steps,
        'moved': result.moved,
        'grasp_step': result.grasp_step,
        'trajectory': result.trajectory.positions.tolist(),
        'orientations': result.trajectory.orientations.tolist(),
        'gripper': list(result.gripper),
        'objects': {k: v.positions.tolist() for k, v in result.object_traces.items()},
        'events': [{'step': e.step, 'kind': e.kind, 'objects': list(e.objects)} for e in result.events],
        'waypoints': [list(w) for w in result.waypoints],
    }


def trace_records(result: ExecutionResult) -> Iterator[Dict[str, Any]]:
    """One record per step: end-effector pose, gripper state and object positions"""
    for i, step in enumerate(result.trajectory.steps):
        yield {
            'step': step,
            'ee': result.trajectory.positions[i].tolist(),
            'orientation': result.trajectory.orientations[i].tolist(),
            'gripper': result.gripper[i],
            'objects': {k: v.positions[i].tolist() for k, v in result.object_traces.items()},
        }


def dump_trace(result: ExecutionResult, path: str):
    """Write the per-step trace as JSON lines, events in a trailing record"""
    with open(path, 'w', encoding='utf-8') as f:
        for record in trace_records(result):
            f.write(json.dumps(record, sort_keys=True) + '\n')
        events = [{'step': e.step, 'kind': e.kind, 'objects': list(e.objects)} for e in result.events]
        f.write(json.dumps({'events': events}, sort_keys=True) + '\n')
