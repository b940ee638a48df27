"""
Campaign analytics: threshold calibration, oracle/MR overlap, violation
rates, annotation sampling and the failure-taxonomy breakdown
"""
import math
import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import List, Dict, Any, Optional, Sequence, Tuple

import numpy as np

import config
from campaign import CampaignRow
from errors import InvalidInputError
from oracles import taxonomy_category
from relations import MRKind
from seeding import rng_for

logger = logging.getLogger(__name__)

CALIBRATION_PERCENTILES = (20, 50, 80)
# An exact integer rank p*n/100 must select that sample; the float product
# n*q can round above it, so the percentiles are taken a hair below nominal.
RANK_NUDGE = 1e-9
MIN_CALIBRATION_SAMPLES = 5

ORACLE_ONLY = "oracle_only"
MR_ONLY = "mr_only"
BOTH = "both"


@dataclass(frozen=True)
class VennTriple:
    oracle_only: int = 0
    mr_only: int = 0
    both: int = 0

    @property
    def total(self) -> int:
        return self.oracle_only + self.mr_only + self.both

    def to_dict(self) -> Dict[str, int]:
        return {ORACLE_ONLY: self.oracle_only, MR_ONLY: self.mr_only, BOTH: self.both}


@dataclass(frozen=True)
class RateCell:
    violations: int
    evaluated: int

    @property
    def rate(self) -> float:
        return self.violations / self.evaluated


@dataclass(frozen=True)
class RateMatrix:
    keys: Tuple[str, ...]
    cells: Dict[Tuple[str, ...], RateCell]

    def rate(self, *key: str) -> float:
        return self.cells[tuple(key)].rate

    def to_list(self) -> List[Dict[str, Any]]:
        out = []
        for key in sorted(self.cells, key=_cell_order):
            cell = self.cells[key]
            entry = dict(zip(self.keys, key))
            entry.update(violations=cell.violations, evaluated=cell.evaluated, rate=cell.rate)
            out.append(entry)
        return out


def _cell_order(key: Tuple[str, ...]):
    mr, level = key[0], key[1]
    return (config.MR_KINDS.index(mr), config.STRICTNESS_LEVELS.index(level)) + tuple(key[2:])


def calibrate_thresholds(distances: Sequence[float]) -> Tuple[float, float, float]:
    """Nearest-rank 20th/50th/80th percentiles; every threshold is an observed distance"""
    values = np.asarray(distances, dtype=np.float64)
    if values.size < MIN_CALIBRATION_SAMPLES:
        raise InvalidInputError(f"Calibration needs at least {MIN_CALIBRATION_SAMPLES} distances, "
                                f"got {values.size}")
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("Calibration distances must be finite")
    percentiles = np.asarray(CALIBRATION_PERCENTILES, dtype=np.float64) - RANK_NUDGE
    p20, p50, p80 = np.percentile(values, percentiles, method="inverted_cdf")
    return float(p20), float(p50), float(p80)


def tc_distances(rows: Sequence[CampaignRow]) -> List[float]:
    """One distance per evaluated TC follow-up (distances do not depend on strictness)"""
    seen = {}
    for row in rows:
        if row.is_ok and MRKind(row.mr).pattern == "TC" and row.followup_id not in seen:
            seen[row.followup_id] = row.distance
    return [seen[k] for k in sorted(seen)]


def _evaluated(rows: Sequence[CampaignRow]) -> List[CampaignRow]:
    return [r for r in rows if r.is_ok]


def _single_level(rows: Sequence[CampaignRow]) -> Optional[str]:
    levels = {r.strictness for r in rows}
    if len(levels) > 1:
        raise InvalidInputError(f"Rows mix strictness levels: {', '.join(sorted(levels))}")
    return levels.pop() if levels else None


def _detector(row: CampaignRow) -> Optional[str]:
    oracle_failed = row.oracle_success is False
    if oracle_failed and row.violated:
        return BOTH
    if oracle_failed:
        return ORACLE_ONLY
    if row.violated:
        return MR_ONLY
    return None


def venn(rows: Sequence[CampaignRow]) -> VennTriple:
    """Count each failing follow-up once: oracle failure only, MR violation only, or both"""
    rows = _evaluated(rows)
    _single_level(rows)
    counts = {ORACLE_ONLY: 0, MR_ONLY: 0, BOTH: 0}
    for row in {r.followup_id: r for r in rows}.values():
        detector = _detector(row)
        if detector:
            counts[detector] += 1
    return VennTriple(counts[ORACLE_ONLY], counts[MR_ONLY], counts[BOTH])


def venn_by(rows: Sequence[CampaignRow], keys: Sequence[str] = ("mr",)) -> Dict[Tuple[str, ...], VennTriple]:
    groups = defaultdict(list)
    for row in _evaluated(rows):
        groups[tuple(getattr(row, k) for k in keys)].append(row)
    return {key: venn(group) for key, group in sorted(groups.items())}


def rate_matrix(rows: Sequence[CampaignRow], by_task: bool = False, by_fault: bool = False) -> RateMatrix:
    keys = ("mr", "strictness") + (("task",) if by_task else ()) + (("fault",) if by_fault else ())
    counts = defaultdict(lambda: [0, 0])
    for row in _evaluated(rows):
        cell = counts[tuple(getattr(row, k) for k in keys)]
        cell[0] += int(row.violated)
        cell[1] += 1
    return RateMatrix(keys, {k: RateCell(v, n) for k, (v, n) in counts.items()})


def cochran_sample_size(population: int, confidence_z: float = 1.96, margin: float = 0.05,
                        p: float = 0.5) -> int:
    """Cochran's n0 = z^2 p (1 - p) / e^2 with the finite-population correction, rounded up"""
    if population < 1:
        raise InvalidInputError(f"population must be >= 1, got {population}")
    if not 0.0 < margin < 1.0:
        raise InvalidInputError(f"margin must be in (0, 1), got {margin}")
    if not 0.0 < p < 1.0:
        raise InvalidInputError(f"p must be in (0, 1), got {p}")
    if confidence_z <= 0.0:
        raise InvalidInputError(f"confidence_z must be positive, got {confidence_z}")

    n0 = confidence_z ** 2 * p * (1.0 - p) / margin ** 2
    n = n0 / (1.0 + (n0 - 1.0) / population)
    return min(population, math.ceil(n))


def failing_followups(rows: Sequence[CampaignRow], strictness: str = "Medium") -> Dict[str, CampaignRow]:
    return {r.followup_id: r for r in _evaluated(rows)
            if r.strictness == strictness and _detector(r)}


def _round_robin(pool: List[CampaignRow], size: int, rng) -> List[CampaignRow]:
    strata = defaultdict(list)
    for row in sorted(pool, key=lambda r: r.followup_id):
        strata[(row.mr, row.task)].append(row)
    queues = []
    for key in sorted(strata):
        members = strata[key]
        order = rng.permutation(len(members))
        queues.append([members[i] for i in order])

    picked = []
    while len(picked) < size and any(queues):
        for queue in queues:
            if queue and len(picked) < size:
                picked.append(queue.pop(0))
    return picked


def annotation_sample(rows: Sequence[CampaignRow], size: Optional[int] = None, seed: int = 0,
                      strictness: str = "Medium") -> List[str]:
    """
    Follow-up ids for manual failure annotation.

    Half the sample comes from symbolic-oracle failures and half from MR
    violations, drawn round-robin over (relation, task) strata. The default
    size is Cochran's sample for the number of failing follow-ups.
    """
    failing = failing_followups(rows, strictness)
    if not failing:
        return []
    if size is None:
        size = cochran_sample_size(len(failing))
    size = min(size, len(failing))

    rng = rng_for('annotation', seed, strictness)
    oracle_pool = [r for r in failing.values() if r.oracle_success is False]
    picked = _round_robin(oracle_pool, (size + 1) // 2, rng)
    taken = {r.followup_id for r in picked}
    mr_pool = [r for r in failing.values() if r.violated and r.followup_id not in taken]
    picked += _round_robin(mr_pool, size - len(picked), rng)

    if len(picked) < size:
        taken = {r.followup_id for r in picked}
        rest = [r for r in failing.values() if r.followup_id not in taken]
        picked += _round_robin(rest, size - len(picked), rng)

    logger.info("Annotation sample: %d of %d failing follow-ups", len(picked), len(failing))
    return [r.followup_id for r in picked]


def taxonomy_breakdown(rows: Sequence[CampaignRow], strictness: str = "Medium") -> Dict[str, Dict[str, Dict[str, int]]]:
    """Diagnosis categories and labels of failing follow-ups, split by what detected them"""
    breakdown = {d: {'categories': defaultdict(int), 'labels': defaultdict(int)}
                 for d in (ORACLE_ONLY, MR_ONLY, BOTH)}
    for row in failing_followups(rows, strictness).values():
        entry = breakdown[_detector(row)]
        for label in row.labels:
            entry['labels'][label] += 1
        for category in sorted({taxonomy_category(label) for label in row.labels}):
            entry['categories'][category] += 1
    return {d: {k: dict(sorted(v.items())) for k, v in parts.items()} for d, parts in breakdown.items()}
