"""
Campaign runner: execute sources, filter them by the symbolic oracle, then
generate, execute and judge one follow-up per relation
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import List, Dict, Any, Optional, Sequence, Iterable, Tuple

from config import CampaignConfig
from errors import GenerationError, ExecutionError, InvalidInputError
from oracles import check_task, diagnose
from relations import (MRKind, StrictnessLevel, generate_followup, evaluate, strictness_for,
                       followup_id)
from scene import TestCase, validate_scene
from simulator import FaultProfile, NO_FAULT, ExecutionResult, execute

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_SKIPPED = "skipped"


@dataclass
class CampaignRow:
    source_id: str
    followup_id: str
    task: str
    mr: str
    strictness: str
    delta: Optional[float] = None
    distance: Optional[float] = None
    lower: Optional[float] = None
    upper: Optional[float] = None
    violated: bool = False
    oracle_success: Optional[bool] = None
    oracle_reason: str = ""
    labels: List[str] = field(default_factory=list)
    status: str = STATUS_OK
    skip_reason: str = ""
    fault: str = "None"

    @property
    def row_id(self) -> str:
        return f"{self.followup_id}@{self.strictness}"

    @property
    def sort_key(self) -> Tuple[str, int, int]:
        return self.source_id, MRKind(self.mr).order, StrictnessLevel(self.strictness).order

    @property
    def is_ok(self) -> bool:
        return self.status == STATUS_OK

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CampaignRow':
        return cls(**data)


@dataclass
class _Job:
    source: TestCase
    mrs: List[MRKind]
    levels: List[StrictnessLevel]
    fault: FaultProfile
    seed: int
    cfg: CampaignConfig
    keep_traces: bool = False


@dataclass
class _JobResult:
    rows: List[CampaignRow]
    retained: bool
    traces: Dict[str, ExecutionResult] = field(default_factory=dict)


def _skip_rows(tc: TestCase, mr: MRKind, levels, fault: FaultProfile, reason: str) -> List[CampaignRow]:
    return [CampaignRow(source_id=tc.id, followup_id=followup_id(tc.id, mr), task=tc.prompt.task.value,
                        mr=mr.value, strictness=level.value, status=STATUS_SKIPPED, skip_reason=reason,
                        fault=fault.kind.value)
            for level in levels]


def _run_source(job: _Job) -> _JobResult:
    """Everything for one source case; runs inside a worker process when jobs > 1"""
    src = job.source
    try:
        source_result = execute(src, job.fault)
    except ExecutionError as e:
        logger.warning("%s: source filtered out (%s)", src.id, e)
        return _JobResult([], False)
    verdict = check_task(source_result, src)
    if not verdict.success:
        logger.info("%s: source filtered out (%s)", src.id, verdict.reason)
        return _JobResult([], False)

    traces = {src.id: source_result} if job.keep_traces else {}
    rows = []
    for mr in job.mrs:
        try:
            fup = generate_followup(mr, src, job.seed, job.cfg)
            result = execute(fup.test, job.fault, fup.meta)
        except (GenerationError, ExecutionError) as e:
            logger.warning("%s: %s skipped: %s", src.id, mr.value, e)
            rows.extend(_skip_rows(src, mr, job.levels, job.fault, str(e)))
            continue

        if job.keep_traces:
            traces[fup.id] = result
        oracle = check_task(result, fup.test)
        labels = diagnose(result, fup.test, oracle).sorted_labels()

        for level in job.levels:
            strictness = strictness_for(mr, level, job.cfg)
            v = evaluate(mr, source_result.trajectory, result.trajectory, strictness, fup.meta)
            rows.append(CampaignRow(
                source_id=src.id,
                followup_id=fup.id,
                task=src.prompt.task.value,
                mr=mr.value,
                strictness=level.value,
                delta=strictness.delta,
                distance=v.distance,
                lower=v.lower,
                upper=v.upper,
                violated=v.violated,
                oracle_success=oracle.success,
                oracle_reason=oracle.reason,
                labels=labels,
                fault=job.fault.kind.value,
            ))
    return _JobResult(rows, True, traces)


def run_campaign(sources: Sequence[TestCase], mrs: Iterable[MRKind], strictness_levels: Iterable[StrictnessLevel],
                 fault: FaultProfile = NO_FAULT, seed: int = 0, jobs: int = 1,
                 cfg: Optional[CampaignConfig] = None, storage=None) -> List[CampaignRow]:
    """
    Run a metamorphic campaign over the given sources.

    One row per (retained source, relation, strictness level), sorted by
    (source id, relation, level); the order never depends on `jobs`.
    Follow-ups that cannot be generated become skipped rows.
    """
    cfg = cfg or CampaignConfig()
    mrs = sorted({MRKind(m) for m in mrs}, key=lambda m: m.order)
    levels = sorted({StrictnessLevel(s) for s in strictness_levels}, key=lambda s: s.order)
    if jobs < 1:
        raise InvalidInputError(f"jobs must be >= 1, got {jobs}")

    seen = set()
    for tc in sources:
        if tc.id in seen:
            raise InvalidInputError(f"Duplicate source id: {tc.id}")
        seen.add(tc.id)
        issues = validate_scene(tc.scene, tc.prompt)
        if issues:
            raise InvalidInputError(f"Source {tc.id} is invalid: {issues[0].message}")

    work = [_Job(tc, mrs, levels, fault, seed, cfg, keep_traces=storage is not None) for tc in sources]
    logger.info("Running %d sources x %d relations (fault %s, %d jobs)",
                len(work), len(mrs), fault.kind.value, jobs)

    if jobs == 1 or len(work) < 2:
        results = [_run_source(job) for job in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_source, work))

    rows = []
    retained = 0
    for result in results:
        rows.extend(result.rows)
        retained += result.retained
        if storage is not None:
            for case_id, trace in sorted(result.traces.items()):
                storage.save_trace(case_id, trace)

    skipped = sum(1 for r in rows if not r.is_ok)
    logger.info("Retained %d/%d sources, %d rows (%d skipped)", retained, len(work), len(rows), skipped)
    return sorted(rows, key=lambda r: r.sort_key)


def run_from_config(sources: Sequence[TestCase], cfg: CampaignConfig, storage=None) -> List[CampaignRow]:
    fault = FaultProfile.from_dict(cfg.fault)
    return run_campaign(sources, cfg.mrs, cfg.strictness, fault, cfg.seed, cfg.jobs, cfg, storage)
