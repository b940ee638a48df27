"""
Poses, trajectories and trajectory distances
Distances compare end-effector positions only; orientations are carried along
"""
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Optional, Iterable

import numpy as np
from scipy.spatial.distance import cdist

import config
from errors import InvalidInputError

Vec3 = Tuple[float, float, float]
Quat = Tuple[float, float, float, float]

IDENTITY_QUATERNION: Quat = (0.0, 0.0, 0.0, 1.0)
# 180 degrees about x: tool axis pointing at the table (scalar-last)
GRASP_QUATERNION: Quat = (1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Pose:
    """End-effector or object pose: position in meters, unit quaternion (x, y, z, w)"""
    position: Vec3
    orientation: Quat = IDENTITY_QUATERNION

    def __post_init__(self):
        position = tuple(float(v) for v in self.position)
        orientation = tuple(float(v) for v in self.orientation)
        if len(position) != 3 or len(orientation) != 4:
            raise InvalidInputError("Pose needs a 3-vector position and a 4-vector quaternion")
        if not all(math.isfinite(v) for v in position + orientation):
            raise InvalidInputError(f"Pose coordinates must be finite: {position} {orientation}")

        norm = math.sqrt(sum(v * v for v in orientation))
        if norm == 0.0:
            raise InvalidInputError("Zero quaternion")
        if abs(norm - 1.0) > config.QUATERNION_TOLERANCE:
            orientation = tuple(v / norm for v in orientation)

        object.__setattr__(self, 'position', position)
        object.__setattr__(self, 'orientation', orientation)


class Trajectory:
    """Timestamped pose sequence with strictly increasing step indices"""

    def __init__(self, positions, orientations=None, steps: Optional[Sequence[int]] = None):
        positions = np.array(positions, dtype=np.float64).reshape(-1, 3)
        if positions.shape[0] == 0:
            raise InvalidInputError("Trajectory must not be empty")
        if not np.all(np.isfinite(positions)):
            raise InvalidInputError("Trajectory positions must be finite")

        if orientations is None:
            orientations = np.tile(np.array(IDENTITY_QUATERNION), (positions.shape[0], 1))
        orientations = np.array(orientations, dtype=np.float64).reshape(-1, 4)
        if orientations.shape[0] != positions.shape[0]:
            raise InvalidInputError("Trajectory needs one orientation per position")
        norms = np.linalg.norm(orientations, axis=1)
        if np.any(norms == 0.0):
            raise InvalidInputError("Zero quaternion in trajectory")
        off = np.abs(norms - 1.0) > config.QUATERNION_TOLERANCE
        orientations[off] = orientations[off] / norms[off, None]

        if steps is None:
            steps = range(positions.shape[0])
        steps = tuple(int(s) for s in steps)
        if len(steps) != positions.shape[0]:
            raise InvalidInputError("Trajectory needs one step index per sample")
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise InvalidInputError("Trajectory step indices must be strictly increasing")

        positions.flags.writeable = False
        orientations.flags.writeable = False
        self.positions = positions
        self.orientations = orientations
        self.steps = steps

    @classmethod
    def from_poses(cls, poses: Iterable[Pose], steps: Optional[Sequence[int]] = None) -> 'Trajectory':
        poses = list(poses)
        if not poses:
            raise InvalidInputError("Trajectory must not be empty")
        return cls([p.position for p in poses], [p.orientation for p in poses], steps)

    @property
    def samples(self) -> List[Tuple[int, Pose]]:
        return [(s, self.pose(i)) for i, s in enumerate(self.steps)]

    def pose(self, index: int) -> Pose:
        return Pose(tuple(self.positions[index]), tuple(self.orientations[index]))

    @property
    def first(self) -> np.ndarray:
        return self.positions[0]

    @property
    def last(self) -> np.ndarray:
        return self.positions[-1]

    def translated(self, offset: Sequence[float]) -> 'Trajectory':
        return Trajectory(self.positions + np.asarray(offset, dtype=np.float64),
                          self.orientations, self.steps)

    def __len__(self):
        return self.positions.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (self.steps == other.steps
                and np.array_equal(self.positions, other.positions)
                and np.array_equal(self.orientations, other.orientations))

    def __repr__(self):
        return f"Trajectory({len(self)} samples, {self.first.tolist()} -> {self.last.tolist()})"


def euclidean(p: Sequence[float], q: Sequence[float]) -> float:
    """Euclidean distance between two 3-vectors"""
    d = np.asarray(p, dtype=np.float64) - np.asarray(q, dtype=np.float64)
    return float(math.sqrt(np.dot(d, d)))


def _positions(t) -> np.ndarray:
    if isinstance(t, Trajectory):
        return t.positions
    positions = np.asarray(t, dtype=np.float64).reshape(-1, 3)
    if positions.shape[0] == 0:
        raise InvalidInputError("Trajectory must not be empty")
    return positions


def discrete_frechet(a, b) -> float:
    """
    Discrete Frechet distance between the position polylines of two trajectories.

    The coupling table is filled one anti-diagonal at a time; every cell on an
    anti-diagonal only depends on the two previous ones.
    """
    p = _positions(a)
    q = _positions(b)
    dist = cdist(p, q)
    n, m = dist.shape

    # Padded table: cell (i, j) lives at (i + 1, j + 1); the (0, 0) sentinel
    # seeds the recurrence for the first coupling pair
    table = np.full((n + 1, m + 1), np.inf)
    table[0, 0] = 0.0

    for k in range(n + m - 1):
        i = np.arange(max(0, k - m + 1), min(k, n - 1) + 1)
        j = k - i
        best = np.minimum(np.minimum(table[i, j + 1], table[i + 1, j]), table[i, j])
        table[i + 1, j + 1] = np.maximum(best, dist[i, j])

    return float(table[n, m])


def _couplings(n: int, m: int):
    """Yield every monotone coupling of index ranges [0, n) and [0, m)"""
    def extend(path):
        i, j = path[-1]
        if i == n - 1 and j == m - 1:
            yield path
            return
        if i + 1 < n and j + 1 < m:
            yield from extend(path + [(i + 1, j + 1)])
        if i + 1 < n:
            yield from extend(path + [(i + 1, j)])
        if j + 1 < m:
            yield from extend(path + [(i, j + 1)])

    yield from extend([(0, 0)])


def brute_force_frechet(a, b) -> float:
    """Minimum over all monotone couplings of the largest paired distance (small inputs only)"""
    p = _positions(a)
    q = _positions(b)
    limit = config.BRUTE_FORCE_MAX_SAMPLES
    if p.shape[0] > limit or q.shape[0] > limit:
        raise InvalidInputError(
            f"Brute-force Frechet is limited to {limit} samples per side "
            f"(got {p.shape[0]} and {q.shape[0]})")

    dist = cdist(p, q)
    best = math.inf
    for coupling in _couplings(p.shape[0], q.shape[0]):
        worst = max(dist[i, j] for i, j in coupling)
        best = min(best, worst)
    return float(best)


def path_length(t) -> float:
    """Sum of consecutive position-segment lengths"""
    positions = _positions(t)
    if positions.shape[0] < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(positions, axis=0), axis=1).sum())


def resample_uniform(t: Trajectory, n: int) -> Trajectory:
    """Resample to n poses spaced uniformly by arc length along the position polyline"""
    if n < 2:
        raise InvalidInputError(f"resample_uniform needs n >= 2, got {n}")

    positions = t.positions
    seg = np.linalg.norm(np.diff(positions, axis=0), axis=1) if len(t) > 1 else np.zeros(0)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1]

    if total == 0.0:
        resampled = np.tile(positions[0], (n, 1))
        orientations = np.tile(t.orientations[0], (n, 1))
        return Trajectory(resampled, orientations)

    targets = np.linspace(0.0, total, n)
    resampled = np.column_stack([np.interp(targets, arc, positions[:, axis]) for axis in range(3)])
    resampled[0] = positions[0]
    resampled[-1] = positions[-1]

    # Ties go to the earlier sample (argmin returns the first minimum)
    nearest = np.abs(arc[None, :] - targets[:, None]).argmin(axis=1)
    nearest[-1] = len(t) - 1
    return Trajectory(resampled, t.orientations[nearest])


def point_segment_distance(point: Sequence[float], a: Sequence[float], b: Sequence[float]) -> float:
    """Distance from a point to the closed segment [a, b]"""
    point = np.asarray(point, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ab = b - a
    denom = float(np.dot(ab, ab))
    if denom == 0.0:
        return euclidean(point, a)
    s = min(1.0, max(0.0, float(np.dot(point - a, ab)) / denom))
    return euclidean(point, a + s * ab)


def point_polyline_distance(point: Sequence[float], vertices: Sequence[Sequence[float]]) -> float:
    """Distance from a point to a polyline given by its vertices"""
    vertices = [np.asarray(v, dtype=np.float64) for v in vertices]
    if len(vertices) == 1:
        return euclidean(point, vertices[0])
    return min(point_segment_distance(point, a, b) for a, b in zip(vertices, vertices[1:]))
