"""
    Binary spin snapshots. A snapshot is a 32-byte little-endian header followed by the padded ``int8`` grid,
    frozen ring included, row 0 being the bottom clamp row.

    Header layout: magic ``b"HPIS"``, format version, ``N``, ``M``, sample index, ``theta``.
"""

import logging
import pathlib
import struct
import typing

import numpy as np

from . import _types
from .errors import SnapshotError


log = logging.getLogger("hpi")

MAGIC = b"HPIS"
VERSION = 1
HEADER = struct.Struct("<4sIIIQd")
FILE_PATTERN = "snapshot_*.bin"


class Snapshot(typing.NamedTuple):
    N: int
    M: int
    index: int
    theta: float
    spins: _types.SpinArray


def snapshot_name(index: int) -> str:
    return f"snapshot_{index:08d}.bin"


def write_snapshot(directory: typing.Union[str, pathlib.Path], index: int, spins: np.ndarray,
                   theta: float) -> pathlib.Path:
    """
        Write one padded configuration

    :param directory: Output directory, created if missing
    :param index: Sample index, also used in the file name
    :param spins: Padded grid of shape ``(2M + 2, N + 2)``
    :param theta: Boundary angle the configuration was sampled at
    :return: Path of the written file
    """
    grid = np.ascontiguousarray(spins, dtype=np.int8)
    if grid.ndim != 2 or grid.shape[0] % 2:
        raise ValueError(f"Snapshots hold a single padded grid with an even row count, got shape {grid.shape}")
    rows, cols = grid.shape
    directory = pathlib.Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / snapshot_name(index)
    with open(path, "wb") as file:
        file.write(HEADER.pack(MAGIC, VERSION, cols - 2, (rows - 2) // 2, index, float(theta)))
        file.write(grid.tobytes(order="C"))
    return path


def read_snapshot(path: typing.Union[str, pathlib.Path]) -> Snapshot:
    """
        Read and validate one snapshot file

    :param path: File to read
    :return: Decoded snapshot
    """
    try:
        data = pathlib.Path(path).read_bytes()
    except OSError as e:
        raise SnapshotError(f"Cannot read snapshot {path}: {e}") from e
    if len(data) < HEADER.size:
        raise SnapshotError(f"Snapshot {path} is truncated, no complete header")
    magic, version, N, M, index, theta = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError(f"Snapshot {path} has bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"Snapshot {path} has unsupported version {version}")
    shape = (2 * M + 2, N + 2)
    body = data[HEADER.size:]
    if len(body) != shape[0] * shape[1]:
        raise SnapshotError(f"Snapshot {path} body holds {len(body)} bytes, expected {shape[0] * shape[1]}")
    spins = np.frombuffer(body, dtype=np.int8).reshape(shape).copy()
    if not np.all(np.abs(spins) == 1):
        raise SnapshotError(f"Snapshot {path} contains values other than +1 and -1")
    return Snapshot(N, M, index, theta, spins)


def read_directory(directory: typing.Union[str, pathlib.Path]) -> typing.List[Snapshot]:
    """
        Read every snapshot in a directory, ordered by file name

    :param directory: Directory written by ``hpi simulate``
    :return: Snapshots, never empty
    """
    directory = pathlib.Path(directory)
    if not directory.is_dir():
        raise SnapshotError(f"Snapshot directory {directory} does not exist")
    files = sorted(directory.glob(FILE_PATTERN))
    if not files:
        raise SnapshotError(f"No snapshots found in {directory}")
    log.debug(f"reading {len(files)} snapshots from {directory}")
    return [read_snapshot(f) for f in files]
