"""
    Monte Carlo simulation of the Ising strip with Dobrushin boundary conditions.

    The lattice is stored padded: a frozen ring of boundary spins around a ``2M x N`` interior, in an ``int8``
    array of shape ``(..., 2M + 2, N + 2)``. Column ``j`` holds cells at ``s = j - 1/2`` and row ``i`` holds
    cells at ``t = i - M - 1/2``; row 0 is the bottom clamp row. Leading axes hold independent replicas which
    every sweep advances together.

    Randomness is counter based. The uniform consumed by a cell is a pure function of (seed, sweep, colour,
    cell), so splitting a half-sweep over threads never changes the result.
"""

import concurrent.futures
import logging
import math
import typing

import numpy as np
from scipy import optimize, special

from . import _types, callbacks, contour_analysis, exact_solution, utils
from .errors import ConfigurationError, ExtractionError, StatisticsError
from .exact_solution import Couplings


log = logging.getLogger("hpi")

N_BATCHES = 32
ESCAPE_LIMIT = 1e-3
DEFAULT_MARGIN = 8


def is_wall(theta: float) -> bool:
    return math.isclose(abs(theta), 0.5 * math.pi, rel_tol=0.0, abs_tol=1e-12)


def boundary_value(s: np.ndarray, t: np.ndarray, theta: float) -> np.ndarray:
    """
        The full-plane pattern ``+1 if t / s >= tan(theta)``, with ``theta = +-pi/2`` giving ``-+1``

    :param s: Horizontal cell coordinates, positive
    :param t: Vertical cell coordinates
    :param theta: Boundary angle
    :return: ``int8`` array of spins broadcast over ``s`` and ``t``
    """
    s, t = np.broadcast_arrays(np.asarray(s, dtype=np.float64), np.asarray(t, dtype=np.float64))
    if is_wall(theta):
        return np.full(s.shape, -1 if theta > 0 else 1, dtype=np.int8)
    return np.where(t >= s * math.tan(theta), 1, -1).astype(np.int8)


def cell_coordinates(N: int, M: int,
                     rows: typing.Optional[int] = None) -> typing.Tuple[_types.FloatArray, _types.FloatArray]:
    """
        ``(s, t)`` of the interior cells of an ``N``-column strip, each of shape ``(rows, N)``

    :param N: Number of columns
    :param M: Half height
    :param rows: Interior row count, defaults to ``2M``
    :return: Meshgrid of cell centres
    """
    rows = 2 * M if rows is None else rows
    s = np.arange(1, N + 1) - 0.5
    t = np.arange(1, rows + 1) - M - 0.5
    return np.meshgrid(s, t)


class SpinLattice:
    """
        Padded spin configuration with its frozen boundary. ``accepted`` and ``attempted`` count Metropolis
        moves since construction.
    """

    def __init__(self, spins: np.ndarray, theta: float = 0.0) -> None:
        spins = np.ascontiguousarray(spins, dtype=np.int8)
        if spins.ndim < 2 or spins.shape[-1] < 3 or spins.shape[-2] < 3:
            raise ConfigurationError(f"Padded lattice needs at least one interior cell, got shape {spins.shape}")
        self.spins = spins
        self.theta = float(theta)
        self.accepted = 0
        self.attempted = 0
        rows, cols = spins.shape[-2:]
        i, j = np.indices((rows - 2, cols - 2)) + 1
        self._colours = [((i + j) % 2) == c for c in (0, 1)]

    @property
    def N(self) -> int:
        return self.spins.shape[-1] - 2

    @property
    def M(self) -> int:
        return (self.spins.shape[-2] - 2) // 2

    @property
    def interior(self) -> np.ndarray:
        return self.spins[..., 1:-1, 1:-1]

    @property
    def replicas(self) -> int:
        return int(np.prod(self.spins.shape[:-2], dtype=np.int64))

    def frozen(self) -> np.ndarray:
        """
            Copy of the frozen ring, as the padded array with the interior zeroed
        """
        ring = self.spins.copy()
        ring[..., 1:-1, 1:-1] = 0
        return ring

    def coordinates(self) -> typing.Tuple[_types.FloatArray, _types.FloatArray]:
        return cell_coordinates(self.N, self.M, self.spins.shape[-2] - 2)

    def replicate(self, count: int) -> 'SpinLattice':
        """
            Stack ``count`` copies of this lattice along a new leading axis
        """
        if count < 1:
            raise ConfigurationError(f"replica count must be positive, got {count}")
        return SpinLattice(np.repeat(self.spins[None, ...], count, axis=0), self.theta)

    def copy(self) -> 'SpinLattice':
        return SpinLattice(self.spins.copy(), self.theta)


def required_half_height(theta: float, N: int, margin: int = DEFAULT_MARGIN) -> int:
    """
        Smallest half height ``M`` accepted for a simulation, ``ceil(N max(1, |tan(theta)|)) + margin``. The wall
        boundary ``|theta| = pi/2`` needs only ``M = N``.
    """
    if is_wall(theta):
        return N
    return int(math.ceil(N * max(1.0, abs(math.tan(theta))))) + margin


def build_boundary(theta: float, N: int, M: int) -> SpinLattice:
    """
        Build the strip: left column ``+1`` above ``t = 0`` and ``-1`` below, right column and clamp rows set to
        the full-plane pattern of angle ``theta``, interior initialised to that same pattern.

    :param theta: Boundary angle in ``[-pi/2, pi/2]``
    :param N: Number of columns
    :param M: Half height, the interior has ``2M`` rows
    :return: Lattice ready for sweeping
    """
    if N < 1 or M < 1:
        raise ConfigurationError(f"Lattice extents must be positive, got N={N}, M={M}")
    if abs(theta) > 0.5 * math.pi + 1e-12:
        raise ConfigurationError(f"theta={theta} lies outside [-pi/2, pi/2]")
    if not is_wall(theta) and (N + 0.5) * abs(math.tan(theta)) >= M:
        raise ConfigurationError(f"M={M} too small, the interface leaves the strip at height {N * math.tan(theta)}")

    s = np.arange(N + 2) - 0.5
    t = np.arange(2 * M + 2) - M - 0.5
    ss, tt = np.meshgrid(s, t)
    spins = np.empty(ss.shape, dtype=np.int8)
    right = ss > 0
    spins[right] = boundary_value(ss[right], tt[right], theta)
    spins[~right] = np.where(tt[~right] > 0, 1, -1)
    return SpinLattice(spins, theta)


def lattice_energy(lattice: SpinLattice, c: Couplings) -> np.ndarray:
    """
        ``H = -k1 sum sigma sigma' (horizontal) - k2 sum sigma sigma' (vertical)`` over bonds touching the interior,
        one value per replica
    """
    s = lattice.spins.astype(np.int64)
    horizontal = (s[..., 1:-1, :-1] * s[..., 1:-1, 1:]).sum(axis=(-2, -1))
    vertical = (s[..., :-1, 1:-1] * s[..., 1:, 1:-1]).sum(axis=(-2, -1))
    return -c.k1 * horizontal - c.k2 * vertical


class CounterStream:
    """
        Philox uniforms addressed by ``(sweep, colour)``. Each half-sweep reads a fresh block from counter
        ``[0, 0, colour, sweep]`` under key ``seed``.
    """

    def __init__(self, seed: int) -> None:
        if seed < 0 or seed >= 2 ** 64:
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = int(seed)

    def uniforms(self, sweep: int, colour: int, shape: typing.Tuple[int, ...]) -> _types.FloatArray:
        bits = np.random.Philox(key=self.seed, counter=[0, 0, colour, sweep])
        return np.random.Generator(bits).random(shape)


def _half_sweep_rows(spins: np.ndarray, mask: np.ndarray, u: np.ndarray, c: Couplings, r0: int, r1: int) -> int:
    # interior rows r0..r1-1, padded rows r0+1..r1
    centre = spins[..., r0 + 1:r1 + 1, 1:-1]
    horizontal = spins[..., r0 + 1:r1 + 1, :-2].astype(np.float64) + spins[..., r0 + 1:r1 + 1, 2:]
    vertical = spins[..., r0:r1, 1:-1].astype(np.float64) + spins[..., r0 + 2:r1 + 2, 1:-1]
    delta = 2.0 * centre * (c.k1 * horizontal + c.k2 * vertical)
    flip = mask[r0:r1] & (u[..., r0:r1, :] < np.exp(-delta))
    centre[flip] *= -1
    return int(flip.sum())


def metropolis_sweep(lattice: SpinLattice, c: Couplings, stream: CounterStream, sweep: int,
                     executor: typing.Optional[concurrent.futures.Executor] = None, blocks: int = 1) -> SpinLattice:
    """
        One checkerboard sweep, colour 0 then colour 1, flipping each cell with probability
        ``min(1, exp(-dE))``. The frozen ring is only ever read.

    :param lattice: Lattice to update in place
    :param c: Couplings, ``k1`` on horizontal bonds and ``k2`` on vertical ones
    :param stream: Uniform source
    :param sweep: Sweep counter addressing the uniforms
    :param executor: Optional pool running row blocks concurrently
    :param blocks: Number of row blocks per half-sweep
    :return: The same lattice
    """
    rows = lattice.spins.shape[-2] - 2
    bounds = np.linspace(0, rows, max(1, min(blocks, rows)) + 1).astype(int)
    shape = lattice.interior.shape
    for colour in (0, 1):
        mask = lattice._colours[colour]
        u = stream.uniforms(sweep, colour, shape)
        spans = list(zip(bounds[:-1], bounds[1:]))
        if executor is None or len(spans) == 1:
            accepted = sum(_half_sweep_rows(lattice.spins, mask, u, c, r0, r1) for r0, r1 in spans)
        else:
            futures = [executor.submit(_half_sweep_rows, lattice.spins, mask, u, c, r0, r1) for r0, r1 in spans]
            accepted = sum(f.result() for f in futures)
        lattice.accepted += accepted
        lattice.attempted += int(mask.sum()) * lattice.replicas
    return lattice


class SimParams(typing.NamedTuple):
    """
        Parameters of one Markov chain
    """

    couplings: Couplings
    theta: float
    N: int
    M: int
    sweeps: int
    thermalization: int
    stride: int = 1
    seed: int = 0
    threads: int = 1
    margin: int = DEFAULT_MARGIN

    @property
    def n_samples(self) -> int:
        return (self.sweeps - self.thermalization) // self.stride

    def validate(self) -> 'SimParams':
        """
            Check extents and sweep counts, raising :class:`~hpi.errors.ConfigurationError`

        :return: Self, for chaining
        """
        if self.N < 2:
            raise ConfigurationError(f"N must be at least 2, got {self.N}")
        need = required_half_height(self.theta, self.N, self.margin)
        if self.M < need:
            raise ConfigurationError(f"M={self.M} too small for N={self.N}, theta={self.theta}; need M >= {need}")
        if self.thermalization < 0 or self.sweeps <= self.thermalization:
            raise ConfigurationError(f"sweeps={self.sweeps} must exceed thermalization={self.thermalization}")
        if self.stride < 1:
            raise ConfigurationError(f"stride must be positive, got {self.stride}")
        if self.threads < 1:
            raise ConfigurationError(f"threads must be positive, got {self.threads}")
        CounterStream(self.seed)
        return self


class Sample(typing.NamedTuple):
    index: int
    sweep: int
    lattice: SpinLattice


def iter_samples(params: SimParams, chain: int = 0) -> typing.Iterator[Sample]:
    """
        Run the chain and yield the lattice every ``stride`` sweeps after thermalization. The yielded lattice is
        live; copy it to keep it. Every sample is also dispatched as the ``sample`` event.

    :param params: Validated parameters
    :param chain: Chain index passed on to callbacks
    :return: Generator of samples
    """
    params.validate()
    lattice = build_boundary(params.theta, params.N, params.M)
    stream = CounterStream(params.seed)
    executor = concurrent.futures.ThreadPoolExecutor(params.threads) if params.threads > 1 else None
    try:
        index = 0
        for sweep in range(params.sweeps):
            metropolis_sweep(lattice, params.couplings, stream, sweep, executor, params.threads)
            done = sweep + 1
            if done > params.thermalization and (done - params.thermalization) % params.stride == 0:
                if index >= params.n_samples:
                    break
                callbacks.dispatch_event("sample", index, lattice, chain=chain)
                yield Sample(index, done, lattice)
                index += 1
    finally:
        if executor is not None:
            executor.shutdown()


class FieldAccumulator:
    """
        Batch-means accumulator of the interior magnetization field. Samples are assigned to one of
        ``N_BATCHES`` consecutive batches; accumulators of chains with the same shape merge by addition.
    """

    def __init__(self, shape: typing.Tuple[int, int], n_samples: int, n_batches: int = N_BATCHES) -> None:
        if n_samples < n_batches:
            raise StatisticsError(f"need at least {n_batches} samples for batch means, got {n_samples}")
        self.n_samples = n_samples
        self.n_batches = n_batches
        self.sums = np.zeros((n_batches,) + tuple(shape), dtype=np.float64)
        self.counts = np.zeros(n_batches, dtype=np.int64)

    def add(self, index: int, interior: np.ndarray) -> None:
        batch = min(index * self.n_batches // self.n_samples, self.n_batches - 1)
        self.sums[batch] += interior
        self.counts[batch] += 1

    def merge(self, other: 'FieldAccumulator') -> 'FieldAccumulator':
        if self.sums.shape != other.sums.shape:
            raise ValueError(f"Cannot merge accumulators of shapes {self.sums.shape} and {other.sums.shape}")
        merged = FieldAccumulator(self.sums.shape[1:], self.n_samples + other.n_samples, self.n_batches)
        merged.sums = self.sums + other.sums
        merged.counts = self.counts + other.counts
        return merged

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def mean(self) -> _types.FloatArray:
        if self.total == 0:
            raise StatisticsError("no samples accumulated")
        return self.sums.sum(axis=0) / self.total

    def stderr(self) -> _types.FloatArray:
        if np.any(self.counts == 0):
            raise StatisticsError("every batch needs at least one sample for error bars")
        batch_means = self.sums / self.counts[:, None, None]
        return batch_means.std(axis=0, ddof=1) / math.sqrt(self.n_batches)


class SimulationResult(typing.NamedTuple):
    params: SimParams
    field: FieldAccumulator
    acceptance_rate: float
    autocorr_time: float
    escape_rate: float
    midpoint: _types.FloatArray

    @property
    def samples(self) -> int:
        return self.field.total


def midpoint_height(lattice: SpinLattice) -> float:
    """
        Interface height proxy in the middle column, ``-sum_t sigma(N/2, t) / 2``
    """
    return -0.5 * float(lattice.interior[..., :, lattice.N // 2].sum())


def run_simulation(params: SimParams, chain: int = 0) -> SimulationResult:
    """
        Run one chain and accumulate the mean field with batch-means error bars. For ``|theta| < pi/2`` every
        sample's open contour is checked against the clamp rows; escapes are dispatched as the ``escape`` event
        and a rate above 0.1 % is logged as a warning.

    :param params: Simulation parameters
    :param chain: Chain index passed on to callbacks
    :return: Accumulated result
    """
    params = params.validate()
    n_samples = params.n_samples
    log.info(f"chain {chain}: N={params.N} M={params.M} theta={params.theta} k={tuple(params.couplings)} "
             f"sweeps={params.sweeps} samples={n_samples} threads={params.threads}")
    field = FieldAccumulator((2 * params.M, params.N), n_samples)
    midpoint = np.empty(n_samples, dtype=np.float64)
    check_escape = not is_wall(params.theta)
    escapes = 0
    lattice = None
    for sample in iter_samples(params, chain):
        lattice = sample.lattice
        field.add(sample.index, lattice.interior)
        midpoint[sample.index] = midpoint_height(lattice)
        if check_escape:
            try:
                path = contour_analysis.extract_open_contour(lattice)
            except ExtractionError as e:
                log.error(f"chain {chain}: extraction failed at sample {sample.index}: {e}")
                path = None
            if path is None or path.touches_clamps():
                escapes += 1
                callbacks.dispatch_event("escape", sample.index, path)

    acceptance = lattice.accepted / lattice.attempted if lattice is not None and lattice.attempted else 0.0
    tau = utils.integrated_autocorr_time(midpoint) if n_samples >= 4 else 0.5
    escape_rate = escapes / n_samples
    log.info(f"chain {chain}: acceptance={acceptance:.4f} tau_int={tau:.2f} escape_rate={escape_rate:.5f}")
    if escape_rate > ESCAPE_LIMIT:
        log.warning(f"chain {chain}: interface touched the clamp rows in {escape_rate:.3%} of samples, increase M")
    return SimulationResult(params, field, acceptance, tau, escape_rate, midpoint)


def bulk_magnetization(result: SimulationResult, distance: typing.Optional[float] = None) -> float:
    """
        Mean ``|<sigma>|`` over cells at least ``distance`` from the straight interface line and from the clamp
        rows. Defaults to ``max(8, N/4)``.
    """
    params = result.params
    distance = max(8.0, params.N / 4.0) if distance is None else distance
    s, t = cell_coordinates(params.N, params.M)
    if is_wall(params.theta):
        off_line = s >= distance
    else:
        off_line = np.abs(-s * math.sin(params.theta) + t * math.cos(params.theta)) >= distance
    keep = off_line & (np.abs(t) <= params.M - distance)
    if not keep.any():
        raise StatisticsError(f"no bulk cells at distance {distance} in a {params.N}x{2 * params.M} strip")
    return float(np.abs(result.field.mean()[keep]).mean())


class MeasuredProfileRow(typing.NamedTuple):
    alpha: float
    y: float
    magnetization: float
    stderr: float
    predicted: float


def measure_profile(result: SimulationResult, theta: float, c: Couplings, L: typing.Optional[float] = None,
                    band: float = 1.0, orientation: int = 1, form: str = "stiffness",
                    min_samples: int = N_BATCHES) -> typing.List[MeasuredProfileRow]:
    """
        Magnetization across the interface at arclength ``L`` from the origin, binned by the normal coordinate
        ``y`` and rescaled to ``alpha = y / sqrt(L)``, next to the limiting profile.

    :param result: Simulation output
    :param theta: Interface angle
    :param c: Couplings of the run
    :param L: Arclength of the measuring band, defaults to the midpoint of the strip
    :param band: Half-width of the band along the interface
    :param orientation: Sign of the magnetization above the interface, ``+1`` for this strip
    :param form: Scale passed to :func:`hpi.exact_solution.z_scaling`
    :param min_samples: Fewest samples accepted
    :return: Rows ordered by ``alpha``
    """
    if result.samples < min_samples:
        raise StatisticsError(f"profile needs at least {min_samples} samples, got {result.samples}")
    params = result.params
    cos, sin = math.cos(theta), math.sin(theta)
    L = params.N / (2.0 * cos) if L is None else L
    s, t = cell_coordinates(params.N, params.M)
    along = s * cos + t * sin
    normal = -s * sin + t * cos
    keep = np.abs(along - L) <= band
    if not keep.any():
        raise StatisticsError(f"no cells within {band} of arclength L={L}")

    mean, err = result.field.mean()[keep], result.field.stderr()[keep]
    centres = np.floor(normal[keep]) + 0.5
    rows = []
    for y in np.unique(centres):
        sel = centres == y
        m = float(mean[sel].mean())
        se = float(np.sqrt((err[sel] ** 2).sum()) / sel.sum())
        alpha = float(y / math.sqrt(L))
        rows.append(MeasuredProfileRow(alpha, float(y), m, se,
                                       exact_solution.limiting_profile(alpha, theta, c, orientation, form)))
    return rows


class ProfileFit(typing.NamedTuple):
    orientation: int
    scale: float
    rms: float


def fit_profile(rows: typing.Sequence[MeasuredProfileRow], m_star: float) -> ProfileFit:
    """
        Fit ``o m* erf(scale alpha)`` to a measured profile for both orientations ``o`` and keep the better one.
        ``rms`` is the deviation of the measured profile from the rows' predictions after choosing only their sign.
    """
    alpha = np.array([r.alpha for r in rows])
    measured = np.array([r.magnetization for r in rows])
    predicted = np.array([r.predicted for r in rows])
    best = None
    for o in (1, -1):
        def model(a: np.ndarray, scale: float) -> np.ndarray:
            return o * m_star * special.erf(scale * a)
        (scale,), _ = optimize.curve_fit(model, alpha, measured, p0=[1.0], bounds=(0.0, np.inf))
        residual = float(np.sqrt(np.mean((model(alpha, scale) - measured) ** 2)))
        if best is None or residual < best[2]:
            best = (o, float(scale), residual)
    rms = min(float(np.sqrt(np.mean((sign * predicted - measured) ** 2))) for sign in (1.0, -1.0))
    return ProfileFit(best[0], best[1], rms)
