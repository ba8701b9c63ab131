"""
    The ``hpi`` command line. Each subcommand wires one group of modules into an experiment and writes
    plot-ready tables to the output directory. Exit codes come from the raised exception: 0 on success,
    2 for invalid input, 3 when a simulation's interface escapes too often, 4 for unreadable snapshots.
"""

import argparse
import asyncio
import logging
import math
import pathlib
import sys
import typing

import numpy as np

from . import (__version__, _types, callbacks, contour_analysis, exact_solution, factories, ground_state, runner,
               snapshot, utils)
from .errors import DomainError, EscapeRateError, HPIError, NumericalError, StatisticsError
from .exact_solution import Couplings
from .mc_engine import ESCAPE_LIMIT, SpinLattice, bulk_magnetization, fit_profile, is_wall, measure_profile
from .verify import verify


log = logging.getLogger("hpi")

COMMANDS = ("tension", "profile", "simulate", "groundstate", "analyze")


def _couplings(params: typing.Mapping[str, typing.Any]) -> Couplings:
    return Couplings.create(params["k1"], params["k2"])


def _table(config: runner.RunConfig, name: str, records: typing.Iterable[typing.NamedTuple]) -> pathlib.Path:
    path = factories.write_table(config.out_dir / name, name, records, config.fmt)
    print(f"wrote {path}")
    return path


@runner.require_config
def cmd_tension() -> int:
    """
        Surface tension, stiffness and the unit z scale over ``theta_grid``
    """
    config = runner.get_config()
    params = config.params
    curve = exact_solution.tension_curve(params["theta_grid"], _couplings(params), params["margin"])
    _table(config, "tension", factories.tension_rows(curve))
    return 0


@runner.require_config
def cmd_profile() -> int:
    """
        Limiting magnetization profile over ``alpha_grid``
    """
    config = runner.get_config()
    params = config.params
    points = exact_solution.profile_points(params["alpha_grid"], params["theta"], _couplings(params),
                                           params["orientation"], params["form"])
    _table(config, "profile", points)
    return 0


def _snapshot_writer(directory: pathlib.Path, every: int, n_samples: int, theta: float) -> _types.Callback:
    def on_sample(index: int, lattice: SpinLattice, chain: int = 0) -> None:
        if index % every == 0:
            snapshot.write_snapshot(directory, chain * n_samples + index, lattice.spins, theta)
    return on_sample


@runner.require_config
def cmd_simulate() -> int:
    """
        Run the strip simulation, write snapshots, the mean field, the measured profile and ``summary.json``.
        Raises :class:`EscapeRateError` after every output is on disk if the interface reached the clamp rows
        too often.
    """
    config = runner.get_config()
    params = config.params
    sim = runner.sim_params_from(params)
    n_samples = sim.n_samples
    snapshot_dir = config.out_dir / "snapshots"
    hook = None
    if params["snapshots"] > 0:
        every = max(1, n_samples // params["snapshots"])
        hook = _snapshot_writer(snapshot_dir, every, n_samples, sim.theta)

    if hook is not None:
        with callbacks.installed(hook, "sample"):
            chains = asyncio.run(runner.run_chains(sim, params["chains"]))
    else:
        chains = asyncio.run(runner.run_chains(sim, params["chains"]))
    result = chains.merged()

    _table(config, "field", factories.field_rows(result.field, sim.M))
    wall = is_wall(sim.theta)
    rows = [] if wall else measure_profile(result, sim.theta, sim.couplings, band=params["band"])
    _table(config, "measured_profile", rows)

    m_star = exact_solution.spontaneous_magnetization(sim.couplings)
    summary: typing.Dict[str, typing.Any] = {
        "acceptance_rate": result.acceptance_rate,
        "autocorr_time": result.autocorr_time,
        "escape_rate": result.escape_rate,
        "samples": result.samples,
        "chains": params["chains"],
        "seed": sim.seed,
        "m_star": m_star,
        "antisymmetric": None,
        "orientation": None,
        "scale": None,
        "profile_rms": None,
        "bulk_magnetization": None,
        "z_unit": None,
    }
    if sim.theta == 0.0:
        summary["antisymmetric"] = bool(verify().field(result).antisymmetric_in_t())
    if wall:
        log.info("wall boundary, no interface profile to measure")
    else:
        try:
            fit = fit_profile(rows, m_star)
            summary.update(orientation=fit.orientation, scale=fit.scale, profile_rms=fit.rms)
        except (RuntimeError, ValueError) as e:
            log.warning(f"profile fit failed: {e}")
        try:
            summary["z_unit"] = {form: exact_solution.z_scaling(1.0, sim.theta, sim.couplings, form)
                                 for form in exact_solution.Z_FORMS}
        except DomainError as e:
            log.warning(f"no predicted profile scale: {e}")
    try:
        summary["bulk_magnetization"] = bulk_magnetization(result)
    except StatisticsError as e:
        log.warning(f"no bulk estimate: {e}")
    summary["midpoint_height"], summary["midpoint_stderr"] = utils.batch_means(result.midpoint)

    factories.write_summary(config.out_dir / "summary.json", summary)
    for key in ("acceptance_rate", "autocorr_time", "escape_rate", "antisymmetric", "orientation", "scale"):
        print(f"{key}: {summary[key]}")

    if result.escape_rate > ESCAPE_LIMIT:
        raise EscapeRateError(f"interface escape rate {result.escape_rate:.3%} exceeds {ESCAPE_LIMIT:.1%}, "
                              f"increase M above {sim.M}", result.escape_rate)
    return 0


@runner.require_config
def cmd_groundstate() -> int:
    """
        Zero-temperature staircase statistics, cross ratios and the Ornstein-Zernike fit over ``N_list``
    """
    config = runner.get_config()
    params = config.params
    theta, N_list = params["theta"], sorted(params["N_list"])
    reduced, _ = ground_state.reduce_angle(theta)

    try:
        oz_fit = ground_state.oz_coefficient_fit(theta, N_list)
        print(f"Ornstein-Zernike coefficient: {oz_fit}")
    except NumericalError:
        log.warning(f"theta={theta}: every staircase is flat, no Ornstein-Zernike correction to fit")
        print("Ornstein-Zernike coefficient: degenerate (flat path)")
        oz_fit = math.nan

    try:
        cross, threshold = ground_state.cross_ratio_sequence(reduced, N_list, params["m"], params["n"])
        print(f"cross ratio monotone from N={threshold}")
    except DomainError as e:
        log.warning(f"theta={theta}: no admissible cross ratio, {e}")
        cross = []
        for N in N_list:
            _, b_bar = ground_state.ray_endpoint(reduced, N)
            cross.append(ground_state.CrossRatioRow(N, b_bar + math.isqrt(N), b_bar, math.nan))
    residuals = dict(ground_state.oz_residuals(theta, N_list))

    rows = []
    for row in cross:
        a, b_bar = ground_state.ray_endpoint(reduced, row.N)
        seeds = np.random.SeedSequence((config.seed, row.N)).generate_state(params["samples"], np.uint64)
        increments = [np.mean(ground_state.sample_staircase(theta, row.N, int(s)).column_increments) for s in seeds]
        excess = ground_state.chord_excess_frequency(theta, row.N, params["samples"], config.seed)
        log.info(f"N={row.N}: {excess:.4f} of the bridges stray beyond N^0.6 from their chord")
        rows.append(factories.GroundStateRow(row.N, theta, row.b, ground_state.binomial_log(a, b_bar), row.ratio,
                                             residuals[row.N], oz_fit, float(np.mean(increments))))
    _table(config, "groundstate", rows)
    return 0


@runner.require_config
def cmd_analyze() -> int:
    """
        Contour statistics over a snapshot directory: cigar containment, width, wall avoidance and the length tail
    """
    config = runner.get_config()
    params = config.params
    paths = contour_analysis.read_snapshot_paths(params["snapshot_dir"])
    first = paths[0]
    wall = is_wall(first.theta)
    log.info(f"analyzing {len(paths)} contours, N={first.N} M={first.M} theta={first.theta}")

    containment: typing.List[contour_analysis.ContainmentRow] = []
    width: typing.List[contour_analysis.WidthRow] = []
    walls: typing.List[contour_analysis.WallRow] = []
    if wall:
        fraction = contour_analysis.wall_avoidance(paths, params["h"])
        walls.append(contour_analysis.WallRow(first.N, params["h"], fraction))
        log.info("wall boundary, containment and width tables stay empty")
    else:
        spec = contour_analysis.CigarSpec.create(params["d"], params["kappa"], 0.0, first.theta, first.N)
        containment = contour_analysis.containment_table(paths, spec, params["radii"])
        heights = np.array([p.heights() for p in paths])
        columns = [c for c in range(heights.shape[1]) if not np.isnan(heights[:, c]).any()]
        if params["increments"]:
            columns = [c for c in columns if c + 1 < heights.shape[1] and c + 1 in columns]
        try:
            width = contour_analysis.width_statistics(paths, columns, params["increments"])
        except StatisticsError as e:
            log.warning(f"width table left empty: {e}")

    tail = contour_analysis.length_tail(paths, first.minimal_length)
    print(f"length tail decay rate: {tail.rate}")

    _table(config, "containment", containment)
    _table(config, "width", width)
    _table(config, "wall", walls)
    _table(config, "tail", tail.rows)
    return 0


DISPATCH: typing.Dict[str, typing.Callable[[], int]] = {
    "tension": cmd_tension,
    "profile": cmd_profile,
    "simulate": cmd_simulate,
    "groundstate": cmd_groundstate,
    "analyze": cmd_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=pathlib.Path, help="flat key = value file")
    common.add_argument("--seed", type=int, help="run seed, unsigned 64-bit")
    common.add_argument("--threads", type=int, help="worker threads for the Monte Carlo sweep")
    common.add_argument("--out", type=pathlib.Path, default=pathlib.Path("."), help="output directory")
    common.add_argument("--format", choices=factories.FORMATS, default="csv", dest="fmt")

    parser = argparse.ArgumentParser(prog="hpi", description="Interfaces of the half-plane Ising model")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        cmd = sub.add_parser(command, parents=[common], help=DISPATCH[command].__doc__.strip().splitlines()[0])
        for key in runner.KEYS[command]:
            if key in ("seed", "threads"):
                continue
            cmd.add_argument(f"--{key.replace('_', '-')}", dest=f"key_{key}", metavar=key.upper())
    return parser


def main(argv: typing.Optional[typing.Sequence[str]] = None) -> int:
    """
        Entry point of the ``hpi`` executable

    :param argv: Arguments, defaults to ``sys.argv[1:]``
    :return: Process exit code
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {name[4:]: value for name, value in vars(args).items() if name.startswith("key_")}
    try:
        file_params = runner.load_config(args.config) if args.config is not None else None
        runner.configure(args.command, file_params, overrides, args.out, args.fmt, args.seed, args.threads)
        return DISPATCH[args.command]()
    except HPIError as e:
        print(f"hpi {args.command}: {e}", file=sys.stderr)
        return e.exit_code
    finally:
        runner.reset_config()


if __name__ == "__main__":
    sys.exit(main())
