"""
    Zero-temperature interfaces. At ``T = 0`` the open contour is a minimal-length staircase, so partition
    functions become binomial coefficients and the interface law becomes a geometric random walk.

    Angles live in ``[0, pi/4]``; ``(pi/4, pi/2)`` is reached by swapping the roles of the axes, see
    :func:`reduce_angle`.
"""

import functools
import logging
import math
import typing

import numpy as np
from scipy import special, stats

from . import _types, utils
from .errors import DomainError, NumericalError


log = logging.getLogger("hpi")

EXACT_BINOMIAL_LIMIT = 10_000
MAX_EXACT_PAIRS = 8

_QUARTER = 0.25 * math.pi
# tan(pi/4) rounds just below 1
_FLOOR_SLACK = 1e-9


def reduce_angle(theta: float) -> typing.Tuple[float, bool]:
    """
        Map an angle in ``[0, pi/2)`` into ``[0, pi/4]``

    :param theta: Angle in radians
    :return: (reduced angle, whether the axes were swapped)
    """
    if not 0.0 <= theta < 0.5 * math.pi:
        raise DomainError(f"theta={theta} must lie in [0, pi/2)", parameter="theta")
    if theta > _QUARTER:
        return 0.5 * math.pi - theta, True
    return theta, False


def step_probability(theta: float) -> float:
    """
        Probability of a vertical step, ``p = tan(theta) / (1 + tan(theta))``

    :param theta: Angle in ``[0, pi/4]``
    :return: ``p`` in ``[0, 1/2]``
    """
    if not 0.0 <= theta <= _QUARTER:
        raise DomainError(f"theta={theta} must lie in [0, pi/4]", parameter="theta", bound=_QUARTER)
    if theta == _QUARTER:
        return 0.5
    t = math.tan(theta)
    return t / (1.0 + t)


def ray_endpoint(theta: float, N: int) -> typing.Tuple[int, int]:
    """
        Lattice point where the ray of angle ``theta`` leaves the strip of width ``N``

    :param theta: Angle in ``[0, pi/4]``
    :param N: Strip width
    :return: ``(N, floor(N tan(theta)))``
    """
    if N < 1:
        raise DomainError(f"N must be at least 1, got {N}", parameter="N")
    return N, int(math.floor(N * math.tan(theta) + _FLOOR_SLACK))


class StaircasePath(typing.NamedTuple):
    """
        A monotone path from the origin. ``column_increments[x]`` vertical steps are taken at abscissa ``x``
        before the horizontal step to ``x + 1``; ``final_rise`` steps are taken at ``x = N``. A swapped path
        was sampled in reflected coordinates and is reported reflected back about the diagonal.
    """

    theta: float
    column_increments: typing.Tuple[int, ...]
    final_rise: int = 0
    swapped: bool = False

    @property
    def N(self) -> int:
        return len(self.column_increments)

    @property
    def rise(self) -> int:
        return sum(self.column_increments) + self.final_rise

    @property
    def length(self) -> int:
        return self.N + self.rise

    def heights(self) -> _types.FloatArray:
        """
            Height at which the path arrives at each abscissa ``0..N``, in sampling coordinates
        """
        return np.concatenate(([0], np.cumsum(self.column_increments))).astype(np.float64)

    def vertices(self) -> typing.List[_types.Point]:
        points = [(0, 0)]
        y = 0
        for x, rise in enumerate(self.column_increments):
            for _ in range(rise):
                y += 1
                points.append((x, y))
            points.append((x + 1, y))
        for _ in range(self.final_rise):
            y += 1
            points.append((self.N, y))
        if self.swapped:
            points = [(y, x) for x, y in points]
        return points


def _generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def sample_staircase(theta: float, N: int, seed: int) -> StaircasePath:
    """
        Sample the first ``N`` columns of the infinite zero-temperature staircase. Increments are independent and
        geometric, ``P(k) = p^k (1 - p)``, drawn by inverse CDF from a Philox stream.

    :param theta: Angle in ``[0, pi/2)``
    :param N: Number of columns
    :param seed: PRNG seed
    :return: Sampled path
    """
    if N < 1:
        raise DomainError(f"N must be at least 1, got {N}", parameter="N")
    reduced, swapped = reduce_angle(theta)
    p = step_probability(reduced)
    u = _generator(seed).random(N)
    if p == 0.0:
        increments = np.zeros(N, dtype=np.int64)
    else:
        increments = np.floor(np.log1p(-u) / math.log(p)).astype(np.int64)
    return StaircasePath(theta, tuple(int(i) for i in increments), 0, swapped)


def sample_staircase_bridge(theta: float, N: int, seed: int) -> StaircasePath:
    """
        Sample a minimal staircase from ``(0, 0)`` to :func:`ray_endpoint`, uniformly over all of them. This is
        the zero-temperature state of the finite strip.

    :param theta: Angle in ``[0, pi/2)``
    :param N: Strip width
    :param seed: PRNG seed
    :return: Sampled path
    """
    reduced, swapped = reduce_angle(theta)
    _, rise = ray_endpoint(reduced, N)
    slots = np.sort(_generator(seed).choice(N + rise, size=rise, replace=False))
    # a vertical step in slot s follows s - (its rank) horizontal steps
    abscissae = slots - np.arange(rise)
    counts = np.bincount(abscissae, minlength=N + 1)
    return StaircasePath(theta, tuple(int(c) for c in counts[:N]), int(counts[N]), swapped)


def chord_distance(path: StaircasePath) -> float:
    """
        Largest Euclidean distance of a path vertex from the straight line through its two endpoints
    """
    increments = np.asarray(path.column_increments, dtype=np.int64)
    vertical = np.ones(path.length, dtype=np.int64)
    # the horizontal step out of column x follows every vertical step up to and including x
    vertical[np.cumsum(increments) + np.arange(path.N)] = 0
    y = np.concatenate(([0], np.cumsum(vertical)))
    x = np.concatenate(([0], np.cumsum(1 - vertical)))
    a, b = int(x[-1]), int(y[-1])
    return float(np.abs(x * b - y * a).max() / math.hypot(a, b))


def chord_excess_frequency(theta: float, N: int, samples: int, seed: int, epsilon: float = 0.1) -> float:
    """
        Fraction of uniform zero-temperature bridges that stray further than ``N^(1/2 + epsilon)`` from their
        chord. Tends to 0 as ``N`` grows.

    :param theta: Angle in ``[0, pi/2)``
    :param N: Strip width
    :param samples: Number of bridges
    :param seed: Run seed, combined with ``N`` into one seed per bridge
    :param epsilon: Excess exponent
    :return: Frequency in ``[0, 1]``
    """
    if samples < 1:
        raise DomainError(f"samples must be at least 1, got {samples}", parameter="samples")
    threshold = N ** (0.5 + epsilon)
    seeds = np.random.SeedSequence((seed, N)).generate_state(samples, np.uint64)
    hits = sum(chord_distance(sample_staircase_bridge(theta, N, int(s))) > threshold for s in seeds)
    log.debug(f"theta={theta} N={N}: {hits} of {samples} bridges beyond {threshold:.2f} from the chord")
    return float(hits / samples)


def binomial_log(a: int, b: int) -> float:
    """
        ``ln C(a + b, b)``. Exact integer arithmetic up to ``a + b = 10^4``, log-gamma above.

    :param a: Non-negative integer
    :param b: Non-negative integer
    :return: Natural log of the binomial coefficient
    """
    if a < 0 or b < 0:
        raise DomainError(f"binomial entries must be non-negative, got a={a}, b={b}", parameter="a" if a < 0 else "b")
    a, b = int(a), int(b)
    if a + b <= EXACT_BINOMIAL_LIMIT:
        return math.log(math.comb(a + b, b))
    return float(special.gammaln(a + b + 1) - special.gammaln(a + 1) - special.gammaln(b + 1))


def binomial_cross_ratio(aN: int, bN: int, bbarN: int, m: int, n: int) -> float:
    """
        Ratio of the weights of staircases through ``(m, n)`` with endpoints ``(a, b)`` and ``(a, b_bar)``,
        each normalized by the partition function of its endpoint:

            ``[C(a + b - m - n, b - n) / C(a + b, b)] / [C(a + b_bar - m - n, b_bar - n) / C(a + b_bar, b_bar)]``

        The bare quotient of the two numerators grows without bound when ``b - b_bar`` grows; the normalized
        one tends to 1 for ``b - b_bar = o(N)``. Evaluated in log space.

    :return: The ratio, exactly 1 when ``b == b_bar``
    """
    for name, value in (("a - m", aN - m), ("b - n", bN - n), ("b_bar - n", bbarN - n)):
        if value < 0:
            raise DomainError(f"Inadmissible cross ratio entry {name} = {value}", parameter=name)
    if bN == bbarN:
        return 1.0
    upper = binomial_log(aN - m, bN - n) - binomial_log(aN, bN)
    lower = binomial_log(aN - m, bbarN - n) - binomial_log(aN, bbarN)
    return math.exp(upper - lower)


class CrossRatioRow(typing.NamedTuple):
    N: int
    b: int
    b_bar: int
    ratio: float


def cross_ratio_sequence(theta: float, N_list: typing.Iterable[int], m: int = 3,
                         n: int = 2) -> typing.Tuple[typing.List[CrossRatioRow], typing.Optional[int]]:
    """
        Cross ratios along ``b = b_bar + floor(sqrt(N))`` with ``(a, b_bar)`` on the ray of angle ``theta``.
        Also returns the smallest tabulated ``N`` beyond which ``|ratio - 1|`` is non-increasing.

    :param theta: Angle in ``[0, pi/4]``
    :param N_list: Increasing strip widths
    :param m: Horizontal offset
    :param n: Vertical offset
    :return: (rows, threshold ``N`` or None)
    """
    rows = []
    for N in N_list:
        a, b_bar = ray_endpoint(theta, N)
        b = b_bar + math.isqrt(N)
        rows.append(CrossRatioRow(N, b, b_bar, binomial_cross_ratio(a, b, b_bar, m, n)))
    start = utils.monotone_from([abs(r.ratio - 1.0) for r in rows])
    threshold = None if start is None else rows[start].N
    log.info(f"cross ratio at theta={theta}: |ratio - 1| non-increasing from N={threshold}")
    return rows, threshold


def _l1(p: _types.Point, q: _types.Point) -> int:
    return abs(p[0] - q[0]) + abs(p[1] - q[1])


class EndpointSet(typing.NamedTuple):
    """
        Boundary endpoints of the open contours, ``points[0]`` being the origin, with an optional pairing
    """

    points: typing.Tuple[_types.Point, ...]
    pairing: typing.Optional[typing.Tuple[_types.Pair, ...]] = None
    degeneracy: int = 0

    @property
    def cost(self) -> int:
        if self.pairing is None:
            raise ValueError("EndpointSet has no pairing")
        return sum(_l1(self.points[i], self.points[j]) for i, j in self.pairing)

    def segments(self) -> typing.List[typing.Tuple[_types.Point, _types.Point]]:
        if self.pairing is None:
            raise ValueError("EndpointSet has no pairing")
        return [(self.points[i], self.points[j]) for i, j in self.pairing]


def ground_pairing(points: typing.Union[EndpointSet, typing.Sequence[_types.Point]]) -> EndpointSet:
    """
        Exhaustive minimum of the total L1 length over all perfect pairings of the endpoints. Among optimal
        pairings the lexicographically smallest list of sorted index pairs is returned; ``degeneracy`` counts
        how many optimal pairings exist.

    :param points: 2k distinct points, ``k <= 8``
    :return: Endpoint set with its ground pairing
    """
    if isinstance(points, EndpointSet):
        points = points.points
    pts = tuple((int(x), int(y)) for x, y in points)
    if len(pts) % 2:
        raise DomainError(f"Need an even number of endpoints, got {len(pts)}", parameter="points")
    if not 2 <= len(pts) <= 2 * MAX_EXACT_PAIRS:
        raise DomainError(f"Exact pairing supports 1 to {MAX_EXACT_PAIRS} pairs, got {len(pts) // 2}",
                          parameter="points")
    if len(set(pts)) != len(pts):
        raise DomainError("Endpoints must be distinct", parameter="points")

    @functools.lru_cache(maxsize=None)
    def best(mask: int) -> typing.Tuple[int, typing.Tuple[_types.Pair, ...], int]:
        if mask == 0:
            return 0, (), 1
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        choice = None
        for j in range(i + 1, len(pts)):
            if not rest >> j & 1:
                continue
            sub_cost, sub_pairs, sub_count = best(rest & ~(1 << j))
            cost = _l1(pts[i], pts[j]) + sub_cost
            if choice is None or cost < choice[0]:
                choice = (cost, ((i, j),) + sub_pairs, sub_count)
            elif cost == choice[0]:
                choice = (choice[0], choice[1], choice[2] + sub_count)
        return choice

    _, pairing, count = best((1 << len(pts)) - 1)
    return EndpointSet(pts, pairing, count)


def brute_force_pairings(n_points: int) -> typing.Iterator[typing.Tuple[_types.Pair, ...]]:
    """
        Every perfect pairing of ``range(n_points)``, by recursion on the smallest unpaired index
    """
    def pairings(remaining: typing.Tuple[int, ...]) -> typing.Iterator[typing.Tuple[_types.Pair, ...]]:
        if not remaining:
            yield ()
            return
        first, rest = remaining[0], remaining[1:]
        for k, partner in enumerate(rest):
            for tail in pairings(rest[:k] + rest[k + 1:]):
                yield ((first, partner),) + tail
    return pairings(tuple(range(n_points)))


def _segment_hits_box(p: _types.Point, q: _types.Point, lo: typing.Tuple[float, float],
                      hi: typing.Tuple[float, float]) -> bool:
    # Liang-Barsky clip of the closed segment against the closed box
    t0, t1 = 0.0, 1.0
    for axis in (0, 1):
        delta = q[axis] - p[axis]
        for edge, sign in ((lo[axis], -1.0), (hi[axis], 1.0)):
            num = sign * (edge - p[axis])
            den = sign * delta
            if den == 0.0:
                if num < 0.0:
                    return False
                continue
            t = num / den
            if den < 0.0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
            if t0 > t1:
                return False
    return True


def separation_predicate(segments: typing.Union[EndpointSet, typing.Sequence[typing.Tuple[_types.Point, _types.Point]]],
                         N: int) -> bool:
    """
        Whether every segment not anchored at the origin avoids the box ``[0, N/4] x [-N/4, N/4]``

    :param segments: Paired endpoints, or an endpoint set carrying a pairing
    :param N: Size of the domain
    :return: True if the non-principal segments stay clear of the box
    """
    if isinstance(segments, EndpointSet):
        segments = segments.segments()
    quarter = N / 4.0
    lo, hi = (0.0, -quarter), (quarter, quarter)
    for p, q in segments:
        if tuple(p) == (0, 0) or tuple(q) == (0, 0):
            continue
        if _segment_hits_box(p, q, lo, hi):
            return False
    return True


def _entropy_rate(a: int, b: int) -> float:
    n = a + b
    return float(n * special.entr(a / n) + n * special.entr(b / n))


def oz_residuals(theta: float, N_list: typing.Iterable[int]) -> typing.List[typing.Tuple[int, float]]:
    """
        ``ln C(a + b, b) - (a + b) H(b / (a + b))`` on the ray of angle ``theta``, ``H`` the binary entropy

    :return: (N, residual) pairs
    """
    reduced, _ = reduce_angle(theta)
    rows = []
    for N in N_list:
        a, b = ray_endpoint(reduced, int(N))
        rows.append((int(N), binomial_log(a, b) - _entropy_rate(a, b)))
    return rows


def oz_coefficient_fit(theta: float, N_list: typing.Sequence[int]) -> float:
    """
        Coefficient of ``ln N`` in the zero-temperature log partition function after removing its extensive
        part. Stirling gives ``-1/2``.

    :param theta: Angle in ``[0, pi/2)``
    :param N_list: Widths spanning at least two decades
    :return: Fitted coefficient
    """
    N_list = sorted(int(N) for N in N_list)
    if len(N_list) < 2 or N_list[0] < 1 or N_list[-1] < 100 * N_list[0]:
        raise DomainError(f"N_list must span at least two decades, got {N_list}", parameter="N_list")
    rows = oz_residuals(theta, N_list)
    residual = np.array([r for _, r in rows])
    if np.ptp(residual) == 0.0:
        raise NumericalError(f"Degenerate Ornstein-Zernike fit at theta={theta}, residuals are constant",
                             {"theta": theta, "residual": float(residual[0])})
    fit = stats.linregress(np.log(N_list), residual)
    log.info(f"Ornstein-Zernike coefficient at theta={theta}: {fit.slope} (r={fit.rvalue})")
    return float(fit.slope)

