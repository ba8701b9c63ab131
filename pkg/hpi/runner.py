"""
    Run configuration and orchestration. Handles reading flat key-value config files, merging them with
    command line flags, validating every parameter before a command runs, and driving independent Monte Carlo
    chains concurrently.

    See also:
        :mod:`hpi.cli`
"""

import asyncio
import concurrent.futures
import functools
import logging
import os
import pathlib
import typing

import numpy as np

from . import _types, callbacks
from .errors import ConfigurationError, DomainError
from .exact_solution import Couplings
from .mc_engine import DEFAULT_MARGIN, FieldAccumulator, SimParams, SimulationResult, run_simulation


REFERENCE_ENV = "HPI_REFERENCE_MODE"


class RunConfig(typing.NamedTuple):
    """
        Validated configuration of one command invocation
    """

    command: str
    params: typing.Dict[str, typing.Any]
    out_dir: pathlib.Path
    fmt: str
    seed: int
    threads: int
    reference_mode: bool


class _Key(typing.NamedTuple):
    parse: typing.Callable[[str], typing.Any]
    default: typing.Any
    check: typing.Optional[typing.Callable[[typing.Any], bool]] = None
    requirement: str = ""


log = logging.getLogger("hpi")
_cur_config: typing.Optional[RunConfig] = None


def parse_grid(text: str) -> typing.List[float]:
    """
        A comma separated list ``0,0.3,0.6`` or an evenly spaced grid ``start:stop:count``
    """
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {text!r} must read start:stop:count")
        return [float(v) for v in np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))]
    return [float(v) for v in text.split(",") if v.strip()]


def parse_int_list(text: str) -> typing.List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _positive(value: typing.Any) -> bool:
    return value > 0


def _non_negative(value: typing.Any) -> bool:
    return value >= 0


def _all_positive(values: typing.Sequence[typing.Any]) -> bool:
    return len(values) > 0 and all(v > 0 for v in values)


_COUPLINGS = {
    "k1": _Key(float, 0.6, _positive, "positive"),
    "k2": _Key(float, None, _positive, "positive"),
}

KEYS: typing.Dict[str, typing.Dict[str, _Key]] = {
    "tension": {
        **_COUPLINGS,
        "theta_grid": _Key(parse_grid, [0.0, 0.3, 0.6, 0.9, 1.2], len, "non-empty"),
        "margin": _Key(float, 0.05, _positive, "positive"),
    },
    "profile": {
        **_COUPLINGS,
        "theta": _Key(float, 0.0),
        "alpha_grid": _Key(parse_grid, parse_grid("-3:3:25"), len, "non-empty"),
        "orientation": _Key(int, -1, lambda v: v in (-1, 1), "-1 or 1"),
        "form": _Key(str, "stiffness", lambda v: v in ("stiffness", "saddle", "gaussian"),
                     "one of stiffness, saddle, gaussian"),
    },
    "simulate": {
        **_COUPLINGS,
        "theta": _Key(float, 0.0),
        "N": _Key(int, 64, lambda v: v >= 2, "at least 2"),
        "M": _Key(int, 96, _positive, "positive"),
        "sweeps": _Key(int, 20_000, _positive, "positive"),
        "thermalization": _Key(int, 2_000, _non_negative, "non-negative"),
        "stride": _Key(int, 10, _positive, "positive"),
        "seed": _Key(int, 0, lambda v: 0 <= v < 2 ** 64, "an unsigned 64-bit integer"),
        "threads": _Key(int, 1, _positive, "positive"),
        "chains": _Key(int, 1, _positive, "positive"),
        "snapshots": _Key(int, 128, _non_negative, "non-negative"),
        "band": _Key(float, 1.0, _positive, "positive"),
        "margin": _Key(int, DEFAULT_MARGIN, _non_negative, "non-negative"),
    },
    "groundstate": {
        "theta": _Key(float, 0.39269908169872414, lambda v: 0 <= v < 1.5707963267948966, "in [0, pi/2)"),
        "N_list": _Key(parse_int_list, [2 ** e for e in range(6, 15)], _all_positive, "positive integers"),
        "seed": _Key(int, 0, lambda v: 0 <= v < 2 ** 64, "an unsigned 64-bit integer"),
        "samples": _Key(int, 1000, _positive, "positive"),
        "m": _Key(int, 3, _non_negative, "non-negative"),
        "n": _Key(int, 2, _non_negative, "non-negative"),
    },
    "analyze": {
        "snapshot_dir": _Key(pathlib.Path, None),
        "d": _Key(float, 1.5, _positive, "positive"),
        "kappa": _Key(float, 0.1, lambda v: 0 < v < 0.5, "in (0, 1/2)"),
        "radii": _Key(parse_grid, [2.0, 4.0, 8.0], _all_positive, "positive"),
        "h": _Key(int, 2, _non_negative, "non-negative"),
        "increments": _Key(parse_bool, False),
    },
}


def require_config(func: typing.Callable[..., _types.T]) -> typing.Callable[..., _types.T]:
    """
        Decorator to enforce that configuration is completed before the decorated function is
        called.

    :param func: Function to decorate
    :return: Function with added check for configuration being setup
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        if _cur_config is None:
            log.error("Attempted to run a command before the runner was configured")
            raise ConfigurationError(f"Configure runner before calling {func.__name__}")
        return func(*args, **kwargs)
    return wrapper


def load_config(path: typing.Union[str, pathlib.Path]) -> typing.Dict[str, str]:
    """
        Read a flat ``key = value`` file. ``#`` starts a comment, blank lines are skipped, a repeated key is an
        error. Values stay strings until :func:`configure` parses them.

    :param path: Config file
    :return: Raw key-value pairs
    """
    try:
        lines = pathlib.Path(path).read_text().splitlines()
    except OSError as e:
        raise ConfigurationError(f"Cannot read config file {path}: {e}") from e
    values: typing.Dict[str, str] = {}
    for number, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{number}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{path}:{number}: empty key")
        if key in values:
            raise ConfigurationError(f"{path}:{number}: duplicate key {key!r}")
        values[key] = value
    return values


def _parse_params(command: str, raw: typing.Mapping[str, typing.Any]) -> typing.Dict[str, typing.Any]:
    table = KEYS[command]
    unknown = sorted(set(raw) - set(table))
    if unknown:
        raise ConfigurationError(f"Unknown keys for {command}: {', '.join(unknown)}")
    params = {}
    for key, spec in table.items():
        if key in raw and raw[key] is not None:
            value = raw[key]
            if isinstance(value, str):
                try:
                    value = spec.parse(value)
                except ValueError as e:
                    raise ConfigurationError(f"Cannot parse {key}={raw[key]!r}: {e}") from e
        else:
            value = spec.default
        if value is not None and spec.check is not None and not spec.check(value):
            raise ConfigurationError(f"{key}={value!r} must be {spec.requirement}")
        params[key] = value
    if "k2" in params and params["k2"] is None:
        params["k2"] = params["k1"]
    return params


def configure(command: str, file_params: typing.Optional[typing.Mapping[str, str]] = None,
              overrides: typing.Optional[typing.Mapping[str, typing.Any]] = None,
              out_dir: typing.Union[str, pathlib.Path] = ".", fmt: str = "csv",
              seed: typing.Optional[int] = None, threads: typing.Optional[int] = None) -> RunConfig:
    """
        Set up the runner configuration for one command. Command line values win over file values; every key is
        parsed and validated here, before the command runs.

    :param command: Subcommand name
    :param file_params: Raw values from :func:`load_config`
    :param overrides: Values given on the command line
    :param out_dir: Output directory
    :param fmt: Table format, ``csv`` or ``json``
    :param seed: ``--seed`` flag, overrides a ``seed`` key
    :param threads: ``--threads`` flag, overrides a ``threads`` key
    :return: The new current configuration
    """
    global _cur_config

    if command not in KEYS:
        raise ConfigurationError(f"Unknown command {command!r}, expected one of {sorted(KEYS)}")
    if fmt not in ("csv", "json"):
        raise ConfigurationError(f"Unknown output format {fmt!r}")

    raw: typing.Dict[str, typing.Any] = dict(file_params or {})
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if seed is not None:
        raw["seed"] = seed
    if threads is not None:
        raw["threads"] = threads

    reference_mode = os.environ.get(REFERENCE_ENV, "") == "1"
    flag_keys = {"seed", "threads"} - set(KEYS[command])
    extras = {k: raw.pop(k) for k in flag_keys if k in raw}
    params = _parse_params(command, raw)
    if reference_mode and "threads" in params:
        params["threads"] = 1

    run_seed = params.get("seed", extras.get("seed", 0))
    run_threads = params.get("threads", extras.get("threads", 1))
    if reference_mode:
        run_threads = 1

    if command == "simulate":
        sim_params_from(params).validate()
    if command == "analyze" and params["snapshot_dir"] is None:
        raise ConfigurationError("analyze needs snapshot_dir")

    _cur_config = RunConfig(command, params, pathlib.Path(out_dir), fmt, int(run_seed), int(run_threads),
                            reference_mode)
    log.debug(f"configured {command}: {params}")
    return _cur_config


def get_config() -> RunConfig:
    """
        Get the current runner configuration

    :return: Current runner config
    """
    return _cur_config


def reset_config() -> None:
    global _cur_config
    _cur_config = None


def sim_params_from(params: typing.Mapping[str, typing.Any]) -> SimParams:
    """
        Build simulation parameters from validated ``simulate`` keys
    """
    try:
        couplings = Couplings.create(params["k1"], params["k2"])
    except DomainError as e:
        raise ConfigurationError(str(e)) from e
    return SimParams(couplings, params["theta"], params["N"], params["M"], params["sweeps"],
                     params["thermalization"], params["stride"], params["seed"], params["threads"],
                     params["margin"])


def chain_seeds(seed: int, chains: int) -> typing.List[int]:
    """
        Independent 64-bit seeds for ``chains`` chains, spawned from the run seed
    """
    children = np.random.SeedSequence(seed).spawn(chains)
    return [int(child.generate_state(1, np.uint64)[0]) for child in children]


class ChainsResult(typing.NamedTuple):
    results: typing.List[SimulationResult]
    field: FieldAccumulator

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean([r.acceptance_rate for r in self.results]))

    @property
    def autocorr_time(self) -> float:
        return float(max(r.autocorr_time for r in self.results))

    @property
    def escape_rate(self) -> float:
        return float(np.mean([r.escape_rate for r in self.results]))

    def merged(self) -> SimulationResult:
        """
            The first chain's result carrying the merged field of all chains
        """
        return self.results[0]._replace(field=self.field, acceptance_rate=self.acceptance_rate,
                                        autocorr_time=self.autocorr_time, escape_rate=self.escape_rate)


async def run_chains(params: SimParams, chains: int = 1) -> ChainsResult:
    """
        Run independent chains concurrently in a thread pool and merge their fields. Chain ``i`` uses the
        ``i``-th seed of :func:`chain_seeds`; ``chain_done`` is dispatched as each one finishes.

    :param params: Parameters shared by all chains, ``seed`` being the run seed
    :param chains: Number of chains
    :return: Per-chain results and the merged field
    """
    if chains < 1:
        raise ConfigurationError(f"chains must be positive, got {chains}")
    params.validate()
    seeds = chain_seeds(params.seed, chains)
    loop = asyncio.get_running_loop()

    async def one(index: int, seed: int) -> SimulationResult:
        result = await loop.run_in_executor(pool, run_simulation, params._replace(seed=seed), index)
        callbacks.dispatch_event("chain_done", index, result)
        return result

    with concurrent.futures.ThreadPoolExecutor(max_workers=chains) as pool:
        results = await asyncio.gather(*(one(i, s) for i, s in enumerate(seeds)))

    field = functools.reduce(FieldAccumulator.merge, (r.field for r in results))
    return ChainsResult(list(results), field)
