"""
Symbolic task-success oracles and the failure-diagnosis heuristics
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Dict, Optional, FrozenSet, Tuple

import numpy as np

import config
from errors import InvalidInputError, UnknownObjectError, ExecutionError
from geometry import path_length
from scene import TestCase, TaskKind, box_of, interior_box, object_penetration, solid_boxes, point_penetration
from simulator import ExecutionResult, FaultKind, GRIPPER_ID, plan_waypoints

logger = logging.getLogger(__name__)

# Absorbs representation error on the inclusive threshold comparisons
EPSILON = 1e-12


class DiagnosisLabel(str, Enum):
    COLLISION = "Collision"
    TRAJECTORY_SUB_OPTIMALITY = "TrajectorySubOptimality"
    CONTROL_INSTABILITY = "ControlInstability"
    GRASP_INSTABILITY = "GraspInstability"
    PLACEMENT_ERROR = "PlacementError"
    INCOMPLETE_TASK = "IncompleteTask"
    INSTRUCTION_VIOLATION = "InstructionViolation"
    NO_MOTION = "NoMotion"


MANIPULATION = "Manipulation"
MOTION = "Motion"
PLANNING = "Planning and Reasoning"

TAXONOMY = {
    DiagnosisLabel.GRASP_INSTABILITY: MANIPULATION,
    DiagnosisLabel.PLACEMENT_ERROR: MANIPULATION,
    DiagnosisLabel.COLLISION: MOTION,
    DiagnosisLabel.TRAJECTORY_SUB_OPTIMALITY: MOTION,
    DiagnosisLabel.CONTROL_INSTABILITY: MOTION,
    DiagnosisLabel.INCOMPLETE_TASK: PLANNING,
    DiagnosisLabel.INSTRUCTION_VIOLATION: PLANNING,
    DiagnosisLabel.NO_MOTION: PLANNING,
}

# Label each injected fault is expected to surface as
FAULT_SIGNATURES = {
    FaultKind.PROMPT_VERB_SENSITIVITY: DiagnosisLabel.INCOMPLETE_TASK,
    FaultKind.DISTRACTOR_ATTRACTION: DiagnosisLabel.INCOMPLETE_TASK,
    FaultKind.ILLUMINATION_SENSITIVITY: DiagnosisLabel.INCOMPLETE_TASK,
    FaultKind.NEGATION_BLINDNESS: DiagnosisLabel.INSTRUCTION_VIOLATION,
    FaultKind.RELOCATION_REACTION: DiagnosisLabel.INCOMPLETE_TASK,
    FaultKind.GRASP_INSTABILITY: DiagnosisLabel.GRASP_INSTABILITY,
    FaultKind.OSCILLATION_NOISE: DiagnosisLabel.CONTROL_INSTABILITY,
    FaultKind.COLLISION_BLINDNESS: DiagnosisLabel.COLLISION,
}


@dataclass(frozen=True)
class OracleVerdict:
    success: bool
    reason: str

    def __post_init__(self):
        if not self.success and not self.reason:
            raise InvalidInputError("A failing verdict needs a reason")


@dataclass(frozen=True)
class FailureDiagnosis:
    labels: FrozenSet[str] = frozenset()
    metrics: Dict[str, float] = field(default_factory=dict)

    @property
    def categories(self) -> FrozenSet[str]:
        return frozenset(taxonomy_category(label) for label in self.labels)

    def sorted_labels(self) -> List[str]:
        return sorted(self.labels)


def taxonomy_category(label: str) -> str:
    try:
        return TAXONOMY[DiagnosisLabel(label)]
    except ValueError as e:
        raise InvalidInputError(f"Unknown diagnosis label: {label}") from e


def fault_signature(kind: FaultKind) -> Optional[str]:
    """Diagnosis label the given fault is designed to trigger (None for the fault-free profile)"""
    label = FAULT_SIGNATURES.get(FaultKind(kind))
    return label.value if label else None


def _trace(r: ExecutionResult, object_id: str) -> np.ndarray:
    try:
        return r.object_traces[object_id].positions
    except KeyError:
        raise UnknownObjectError(f"Unknown object id: {object_id}") from None


def _held_at_end(r: ExecutionResult, object_id: str) -> bool:
    return r.held_at(-1) == object_id


def _was_moved(r: ExecutionResult, object_id: str) -> bool:
    trace = _trace(r, object_id)
    return bool(np.any(np.abs(trace - trace[0]) > EPSILON))


def oracle_pick_up(r: ExecutionResult, target_id: str, table_height: float) -> OracleVerdict:
    """Lifted at least LIFT_THRESHOLD for LIFT_FRAMES consecutive steps and still held at the end"""
    lift = _trace(r, target_id)[:, 2] - table_height
    lifted = lift >= config.LIFT_THRESHOLD - EPSILON

    longest = run = 0
    for flag in lifted:
        run = run + 1 if flag else 0
        longest = max(longest, run)

    if not lifted.any():
        return OracleVerdict(False, f"insufficient lift ({lift.max():.4f} m)")
    if longest < config.LIFT_FRAMES:
        return OracleVerdict(False, f"lift held for only {longest} consecutive frames")
    if not _held_at_end(r, target_id):
        return OracleVerdict(False, "target not held at episode end")
    return OracleVerdict(True, "lifted")


def oracle_move_near(r: ExecutionResult, a_id: str, b_id: str) -> OracleVerdict:
    a = _trace(r, a_id)[-1]
    b = _trace(r, b_id)[-1]
    distance = float(np.hypot(a[0] - b[0], a[1] - b[1]))
    if _held_at_end(r, a_id):
        return OracleVerdict(False, "object still held at episode end")
    if distance > config.NEAR_THRESHOLD + EPSILON:
        return OracleVerdict(False, f"too far from reference ({distance:.4f} m)")
    return OracleVerdict(True, "near")


def oracle_put_on(r: ExecutionResult, a_id: str, b_id: str) -> OracleVerdict:
    """Resting on top of B, centred over its footprint, released and still"""
    scene = r.scene
    a_obj = scene.find(a_id)
    b_obj = scene.find(b_id)
    if b_obj.is_container:
        raise InvalidInputError(f"PutOn reference {b_id} is a container")

    trace = _trace(r, a_id)
    a = trace[-1]
    b = _trace(r, b_id)[-1]

    if _held_at_end(r, a_id):
        return OracleVerdict(False, "object still held at episode end")

    gap = abs(a[2] - (b[2] + b_obj.height))
    if gap > config.STACK_TOLERANCE + EPSILON:
        return OracleVerdict(False, f"not resting on the reference top face (gap {gap:.4f} m)")

    hx, hy, _ = b_obj.half_extents
    if abs(a[0] - b[0]) > hx + EPSILON or abs(a[1] - b[1]) > hy + EPSILON:
        return OracleVerdict(False, "centre outside the reference footprint")

    if len(trace) < config.STILLNESS_FRAMES:
        return OracleVerdict(False, "episode too short to judge stability")
    drift = float(np.linalg.norm(trace[-config.STILLNESS_FRAMES:] - a, axis=1).max())
    if drift > config.STILLNESS_TOLERANCE + EPSILON:
        return OracleVerdict(False, f"{a_obj.label} not stable ({drift:.5f} m drift)")
    return OracleVerdict(True, "stacked")


def oracle_put_in(r: ExecutionResult, a_id: str, b_id: str) -> OracleVerdict:
    scene = r.scene
    a_obj = scene.find(a_id)
    b_obj = scene.find(b_id)
    if not b_obj.is_container:
        raise InvalidInputError(f"PutIn reference {b_id} is not a container")

    inner = interior_box(b_obj, _trace(r, b_id)[-1])
    outer = box_of(a_obj, _trace(r, a_id)[-1])
    if _held_at_end(r, a_id):
        return OracleVerdict(False, "object still held at episode end")
    if not inner.contains(outer, tolerance=1e-9):
        return OracleVerdict(False, "not inside the container")
    return OracleVerdict(True, "contained")


def check_task(r: ExecutionResult, tc: TestCase) -> OracleVerdict:
    """Dispatch on the prompt's task; a negated prompt succeeds iff the robot stayed still"""
    prompt = tc.prompt
    if prompt.negated:
        if r.moved:
            return OracleVerdict(False, "robot moved on a negated instruction")
        return OracleVerdict(True, "stayed still")

    if prompt.task is TaskKind.PICK_UP:
        return oracle_pick_up(r, prompt.target_id, tc.scene.table_height)
    if prompt.task is TaskKind.MOVE_NEAR:
        return oracle_move_near(r, prompt.target_id, prompt.reference_id)
    if prompt.task is TaskKind.PUT_ON:
        return oracle_put_on(r, prompt.target_id, prompt.reference_id)
    return oracle_put_in(r, prompt.target_id, prompt.reference_id)


# Diagnosis

def _offending_contacts(r: ExecutionResult, target_id: str) -> List[Tuple[int, Tuple[str, ...]]]:
    return [(e.step, e.objects) for e in r.events
            if e.kind == "contact" and e.objects != (GRIPPER_ID, target_id)]


def _max_penetration(r: ExecutionResult, contacts) -> float:
    """Deepest penetration of every contacting pair from its onset to the end of the episode"""
    scene = r.scene
    ee = r.trajectory.positions
    deepest = 0.0
    for step, (first, second) in contacts:
        for i in range(step, r.steps):
            if first == GRIPPER_ID:
                obj = scene.find(second)
                depth = max(point_penetration(ee[i], box)
                            for box in solid_boxes(obj, r.object_traces[second].positions[i]))
            else:
                depth = object_penetration(scene.find(first), r.object_traces[first].positions[i],
                                           scene.find(second), r.object_traces[second].positions[i])
            deepest = max(deepest, depth)
    return deepest


def _gripper_penetration(r: ExecutionResult, target_id: str) -> float:
    """Deepest the end effector reaches into the target itself"""
    target = r.scene.find(target_id)
    ee = r.trajectory.positions
    trace = r.object_traces[target_id].positions
    return max(max(point_penetration(ee[i], box) for box in solid_boxes(target, trace[i]))
               for i in range(r.steps))


def velocity_reversals(r: ExecutionResult) -> int:
    """Largest per-axis count of end-effector velocity sign reversals"""
    velocity = np.diff(r.trajectory.positions, axis=0)
    worst = 0
    for axis in range(3):
        v = velocity[:, axis]
        signs = np.sign(v[np.abs(v) > config.VELOCITY_DEADBAND])
        worst = max(worst, int(np.count_nonzero(signs[1:] != signs[:-1])))
    return worst


def _displacement(r: ExecutionResult) -> float:
    positions = r.trajectory.positions
    return float(np.linalg.norm(positions - positions[0], axis=1).max())


def _planned_length(tc: TestCase) -> float:
    try:
        return path_length(np.array(plan_waypoints(tc)))
    except ExecutionError:
        return 0.0


def diagnose(r: ExecutionResult, tc: TestCase, oracle: OracleVerdict) -> FailureDiagnosis:
    prompt = tc.prompt
    metrics = {}

    contacts = _offending_contacts(r, prompt.target_id)
    penetration = max(_max_penetration(r, contacts), _gripper_penetration(r, prompt.target_id))
    if contacts or penetration > config.PENETRATION_THRESHOLD:
        # deepest penetration, or the contact count when nothing sank in measurably
        metrics[DiagnosisLabel.COLLISION.value] = penetration or float(len(contacts))

    drops = sum(1 for e in r.events if e.kind == "drop")
    if drops:
        metrics[DiagnosisLabel.GRASP_INSTABILITY.value] = float(drops)

    bound = _planned_length(tc)
    if bound > 0.0 and r.moved:
        ratio = path_length(r.trajectory) / bound
        if ratio > config.SUBOPTIMALITY_RATIO:
            metrics[DiagnosisLabel.TRAJECTORY_SUB_OPTIMALITY.value] = ratio

    reversals = velocity_reversals(r)
    if reversals > config.REVERSAL_LIMIT:
        metrics[DiagnosisLabel.CONTROL_INSTABILITY.value] = float(reversals)

    if not oracle.success and not prompt.negated and prompt.task.needs_reference:
        # an object that was never moved was not misplaced
        if _was_moved(r, prompt.target_id) and not _held_at_end(r, prompt.target_id):
            a = _trace(r, prompt.target_id)[-1]
            b = _trace(r, prompt.reference_id)[-1]
            miss = float(np.hypot(a[0] - b[0], a[1] - b[1]))
            if miss <= config.PLACEMENT_SLACK * config.NEAR_THRESHOLD + EPSILON:
                metrics[DiagnosisLabel.PLACEMENT_ERROR.value] = miss

    displacement = _displacement(r)
    if prompt.negated and r.moved:
        metrics[DiagnosisLabel.INSTRUCTION_VIOLATION.value] = displacement
    if not prompt.negated and displacement < config.NO_MOTION_THRESHOLD:
        metrics[DiagnosisLabel.NO_MOTION.value] = displacement

    if not oracle.success and not metrics:
        metrics[DiagnosisLabel.INCOMPLETE_TASK.value] = 1.0

    diagnosis = FailureDiagnosis(frozenset(metrics), metrics)
    if diagnosis.labels:
        logger.debug("%s: diagnosed %s", tc.id, ", ".join(diagnosis.sorted_labels()))
    return diagnosis
