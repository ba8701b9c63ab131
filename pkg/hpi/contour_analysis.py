"""
    Open-contour extraction and the geometric observables built on it.

    Dual vertices are integer points ``(x, y)`` with ``0 <= x <= N`` and ``-M <= y <= M``. Cell ``(j, i)`` of a
    padded grid spans ``[j - 1, j] x [i - M - 1, i - M]``, so the frozen left column sits at ``x < 0`` and the
    clamp rows at ``|y| > M``. A dual edge is part of a contour when the two cells it separates differ.
"""

import logging
import math
import pathlib
import typing

import numpy as np

from . import _types, snapshot, utils
from .errors import DomainError, ExtractionError, NumericalError, StatisticsError
from .ground_state import StaircasePath


log = logging.getLogger("hpi")

MIN_WIDTH_PATHS = 100

_EAST, _NORTH, _WEST, _SOUTH = (1, 0), (0, 1), (-1, 0), (0, -1)


class InterfacePath(typing.NamedTuple):
    """
        The open contour of a configuration, as the ordered dual vertices it visits
    """

    vertices: typing.Tuple[_types.Point, ...]
    N: int
    M: int
    theta: float = 0.0

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    @property
    def start(self) -> _types.Point:
        return self.vertices[0]

    @property
    def end(self) -> _types.Point:
        return self.vertices[-1]

    @property
    def minimal_length(self) -> int:
        """
            L1 distance between the endpoints, the length of the shortest contour joining them
        """
        return abs(self.end[0] - self.start[0]) + abs(self.end[1] - self.start[1])

    def edges(self) -> typing.Iterator[typing.Tuple[_types.Point, _types.Point]]:
        return zip(self.vertices[:-1], self.vertices[1:])

    def heights(self) -> _types.FloatArray:
        """
            Mean height of the horizontal path edges in each column ``0..N-1``, NaN for columns the path never
            crosses horizontally
        """
        columns, levels = [], []
        for (x0, y0), (x1, y1) in self.edges():
            if y0 == y1:
                columns.append(min(x0, x1))
                levels.append(y0)
        columns = np.asarray(columns, dtype=np.int64)
        counts = np.bincount(columns, minlength=self.N)[:self.N].astype(np.float64)
        sums = np.bincount(columns, weights=np.asarray(levels, dtype=np.float64), minlength=self.N)[:self.N]
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(counts > 0, sums / counts, np.nan)

    def touches_clamps(self) -> bool:
        """
            Whether any vertex before the terminal one lies on the top or bottom clamp row
        """
        return any(abs(y) == self.M for _, y in self.vertices[:-1])


class CigarSpec(typing.NamedTuple):
    d: float
    kappa: float
    R: float
    theta: float
    N: int

    @classmethod
    def create(cls, d: float, kappa: float, R: float, theta: float, N: int) -> 'CigarSpec':
        if not d > 0:
            raise DomainError(f"cigar width d must be positive, got {d}", parameter="d")
        if not 0 < kappa < 0.5:
            raise DomainError(f"cigar exponent kappa must lie in (0, 1/2), got {kappa}", parameter="kappa")
        if R < 0:
            raise DomainError(f"disk radius R must be non-negative, got {R}", parameter="R")
        if N < 1:
            raise DomainError(f"N must be at least 1, got {N}", parameter="N")
        return cls(float(d), float(kappa), float(R), float(theta), int(N))


class WidthRow(typing.NamedTuple):
    s: float
    mean: float
    variance: float
    stderr: float
    variance_stderr: float


class ContainmentRow(typing.NamedTuple):
    R: float
    containment_freq: float


class WallRow(typing.NamedTuple):
    N: int
    h: int
    wall_fraction: float


class TailRow(typing.NamedTuple):
    L: int
    tail_prob: float


class TailResult(typing.NamedTuple):
    rows: typing.List[TailRow]
    rate: float


def _padded(configuration: typing.Any) -> typing.Tuple[np.ndarray, float]:
    spins = getattr(configuration, "spins", configuration)
    theta = float(getattr(configuration, "theta", 0.0))
    spins = np.asarray(spins)
    if spins.ndim != 2 or spins.shape[0] < 3 or spins.shape[1] < 3:
        raise ExtractionError(f"Expected a single padded grid, got shape {spins.shape}")
    return spins, theta


def _differences(spins: np.ndarray) -> typing.Tuple[np.ndarray, np.ndarray]:
    # hdiff[i, j]: cells (j, i) and (j, i + 1) differ; vdiff[i, j]: cells (j, i) and (j + 1, i) differ
    return spins[:-1, :] != spins[1:, :], spins[:, :-1] != spins[:, 1:]


def boundary_endpoints(spins: np.ndarray) -> typing.List[_types.Point]:
    """
        Dual vertices where sign changes of the frozen ring enter the domain. Corner cells touch no interior
        cell, so each vertex is counted by parity and the corner values drop out.

    :param spins: Padded grid
    :return: Sorted endpoint vertices
    """
    spins, _ = _padded(spins)
    hdiff, vdiff = _differences(spins)
    rows, cols = spins.shape
    M, N = (rows - 2) // 2, cols - 2
    parity: typing.Dict[_types.Point, int] = {}

    def toggle(vertex: _types.Point) -> None:
        parity[vertex] = parity.get(vertex, 0) ^ 1

    for i in np.flatnonzero(hdiff[:, 0]):
        toggle((0, int(i) - M))
    for i in np.flatnonzero(hdiff[:, N + 1]):
        toggle((N, int(i) - M))
    for j in np.flatnonzero(vdiff[0, :]):
        toggle((int(j), -M))
    for j in np.flatnonzero(vdiff[rows - 1, :]):
        toggle((int(j), M))
    return sorted(v for v, odd in parity.items() if odd)


def ground_length(spins: typing.Any) -> int:
    """
        L1 distance between the two boundary endpoints, the length of a minimal open contour
    """
    ends = boundary_endpoints(_padded(spins)[0])
    if len(ends) != 2:
        raise ExtractionError(f"Expected two boundary endpoints, found {len(ends)}")
    (x0, y0), (x1, y1) = ends
    return abs(x1 - x0) + abs(y1 - y0)


def extract_open_contour(configuration: typing.Any) -> InterfacePath:
    """
        Trace the open contour from the left-boundary sign change to the other endpoint. At a vertex where the
        contour could continue in several directions the rightmost turn is taken, which keeps the two diagonal
        plus cells of a checkerboard vertex connected. Closed loops are never entered.

    :param configuration: Padded grid, or anything with ``spins`` and ``theta`` attributes
    :return: The open contour
    """
    spins, theta = _padded(configuration)
    hdiff, vdiff = _differences(spins)
    rows, cols = spins.shape
    M, N = (rows - 2) // 2, cols - 2

    ends = boundary_endpoints(spins)
    if len(ends) != 2:
        raise ExtractionError(f"Expected exactly two boundary endpoints, found {len(ends)}: {ends}")
    if (0, 0) in ends:
        start = (0, 0)
    else:
        start = next((v for v in ends if v[0] == 0), ends[0])
    terminal = ends[1] if ends[0] == start else ends[0]

    x, y = start
    if x == 0 and hdiff[y + M, 0]:
        heading = _EAST
    elif x == N and hdiff[y + M, N + 1]:
        heading = _WEST
    elif y == -M and vdiff[0, x]:
        heading = _NORTH
    else:
        heading = _SOUTH

    def edge(vx: int, vy: int, direction: typing.Tuple[int, int]) -> typing.Optional[typing.Tuple[str, int, int]]:
        if direction == _EAST:
            key = ("h", vy + M, vx + 1) if vx + 1 <= N else None
        elif direction == _WEST:
            key = ("h", vy + M, vx) if vx - 1 >= 0 else None
        elif direction == _NORTH:
            key = ("v", vy + M + 1, vx) if vy + 1 <= M else None
        else:
            key = ("v", vy + M, vx) if vy - 1 >= -M else None
        if key is None:
            return None
        present = hdiff[key[1], key[2]] if key[0] == "h" else vdiff[key[1], key[2]]
        return key if present else None

    used = set()
    vertices = [start]
    limit = int(hdiff.sum() + vdiff.sum())
    while True:
        dx, dy = heading
        for direction in ((dy, -dx), (dx, dy), (-dy, dx)):
            key = edge(x, y, direction)
            if key is not None and key not in used:
                break
        else:
            raise ExtractionError(f"Open contour stuck at vertex {(x, y)} after {len(vertices) - 1} edges")
        used.add(key)
        heading = direction
        x, y = x + direction[0], y + direction[1]
        vertices.append((x, y))
        if (x, y) == terminal:
            break
        if len(used) > limit:
            raise ExtractionError("Open contour walk exceeded the number of dual edges")

    return InterfacePath(tuple(vertices), N, M, theta)


def interface_from_staircase(path: StaircasePath, M: typing.Optional[int] = None) -> InterfacePath:
    """
        Zero-temperature staircase as an interface path

    :param path: Sampled staircase
    :param M: Half height recorded on the result, defaults to the largest excursion
    :return: Interface path with the same vertices
    """
    vertices = tuple(path.vertices())
    width = max(x for x, _ in vertices)
    height = max(abs(y) for _, y in vertices)
    return InterfacePath(vertices, width, height if M is None else M, path.theta)


def read_snapshot_paths(directory: typing.Union[str, pathlib.Path]) -> typing.List[InterfacePath]:
    """
        Extract the open contour of every snapshot in a directory
    """
    return [extract_open_contour(snap) for snap in snapshot.read_directory(directory)]


def cigar_contains(path: InterfacePath, spec: CigarSpec) -> bool:
    """
        Whether every vertex lies in the cigar ``|y - x tan(theta)| <= d (x (N - x) / N)^(1/2 + kappa)`` or in
        one of the two endpoint disks of radius ``R``. Vertices stand in for the edges between them.

    :param path: Path to test
    :param spec: Cigar parameters
    :return: True if the path is contained
    """
    pts = np.asarray(path.vertices, dtype=np.float64)
    x, y = pts[:, 0], pts[:, 1]
    slope = math.tan(spec.theta)
    span = np.clip(x * (spec.N - x) / spec.N, 0.0, None)
    inside = np.abs(y - x * slope) <= spec.d * span ** (0.5 + spec.kappa)
    near_start = np.hypot(x, y) <= spec.R
    near_end = np.hypot(x - spec.N, y - spec.N * slope) <= spec.R
    return bool(np.all(inside | near_start | near_end))


def containment_table(paths: typing.Sequence[InterfacePath], spec: CigarSpec,
                      radii: typing.Iterable[float]) -> typing.List[ContainmentRow]:
    if not paths:
        raise StatisticsError("containment needs at least one path")
    rows = []
    for R in radii:
        scoped = spec._replace(R=float(R))
        rows.append(ContainmentRow(float(R), sum(cigar_contains(p, scoped) for p in paths) / len(paths)))
    return rows


def width_statistics(paths: typing.Sequence[InterfacePath], s_values: typing.Iterable[int],
                     increments: bool = False) -> typing.List[WidthRow]:
    """
        Mean and variance of the deviation ``h(s) - s tan(theta)`` at the requested columns, with jackknife
        errors. With ``increments`` set the statistic is taken over ``h(s + 1) - h(s)`` instead.

    :param paths: At least 100 paths of equal width
    :param s_values: Column indices, ``s = column + 1/2``
    :param increments: Analyse height increments rather than deviations
    :return: One row per column
    """
    if len(paths) < MIN_WIDTH_PATHS:
        raise StatisticsError(f"width statistics need at least {MIN_WIDTH_PATHS} paths, got {len(paths)}")
    columns = [int(c) for c in s_values]
    slope = math.tan(paths[0].theta)
    heights = np.array([p.heights() for p in paths])
    if increments:
        if max(columns) + 1 >= heights.shape[1]:
            raise DomainError(f"increment column {max(columns)} has no right neighbour", parameter="s_values")
        data = heights[:, [c + 1 for c in columns]] - heights[:, columns]
    else:
        data = heights[:, columns] - slope * (np.array(columns) + 0.5)
    if np.isnan(data).any():
        raise StatisticsError("some paths never cross the requested columns horizontally")

    mean, mean_err = utils.jackknife(data, lambda d: d.mean(axis=0))
    var, var_err = utils.jackknife(data, lambda d: d.var(axis=0, ddof=1))
    return [WidthRow(c + 0.5, float(m), float(v), float(me), float(ve))
            for c, m, v, me, ve in zip(columns, mean, var, mean_err, var_err)]


def _wall_fraction(path: InterfacePath, h: int) -> float:
    end_y = path.end[1]
    nearest: typing.Dict[int, int] = {}
    for (x0, y0), (x1, y1) in path.edges():
        if x0 == x1:
            row = min(y0, y1)
            nearest[row] = min(nearest.get(row, x0), x0)
    far = sum(1 for row in range(0, end_y) if nearest.get(row, -1) > h)
    return far / path.N


def wall_avoidance(paths: typing.Sequence[InterfacePath], h: int) -> float:
    """
        Mean over paths of ``|Y| / N``, where ``Y`` holds the rows between the two endpoints in which the
        contour keeps farther than ``h`` from the wall

    :param paths: Paths from runs with the wall boundary, ``theta = pi/2``
    :param h: Distance from the wall
    :return: Mean avoided fraction
    """
    if not paths:
        raise StatisticsError("wall avoidance needs at least one path")
    return float(np.mean([_wall_fraction(p, h) for p in paths]))


def length_tail(paths: typing.Sequence[InterfacePath], ground_length: int) -> TailResult:
    """
        Empirical ``P(|gamma| > L)`` from ``ground_length - 1`` up, and its exponential decay rate

    :param paths: Extracted paths
    :param ground_length: Minimal contour length for the boundary
    :return: Table and fitted rate, NaN when fewer than two tail points are positive
    """
    if not paths:
        raise StatisticsError("length tail needs at least one path")
    lengths = np.array([p.length for p in paths])
    grid = np.arange(ground_length - 1, lengths.max() + 1)
    probs = (lengths[None, :] > grid[:, None]).mean(axis=1)
    rows = [TailRow(int(L), float(P)) for L, P in zip(grid, probs)]
    keep = grid >= ground_length
    try:
        rate = utils.exponential_rate(grid[keep], probs[keep])
    except NumericalError as e:
        log.warning(f"length tail has no usable decay: {e}")
        rate = math.nan
    return TailResult(rows, rate)
