"""
    Module for stateless conversion between result records and table rows. Every table the command line
    writes has a versioned schema here; CSV and JSON are two renderings of the same rows and both parse back
    into the producing record type.
"""

import csv
import io
import json
import logging
import math
import pathlib
import typing

import numpy as np

from . import _types
from .contour_analysis import ContainmentRow, TailRow, WallRow, WidthRow
from .exact_solution import ProfilePoint, TensionCurve
from .mc_engine import FieldAccumulator, MeasuredProfileRow


log = logging.getLogger("hpi")

FORMATS = ("csv", "json")


class TensionRow(typing.NamedTuple):
    theta: float
    nu: float
    tau: float
    stiffness: float
    z_unit: float


class FieldRow(typing.NamedTuple):
    s: float
    t: float
    mean: float
    stderr: float


class GroundStateRow(typing.NamedTuple):
    N: int
    theta: float
    b: int
    log_binomial: float
    cross_ratio: float
    oz_residual: float
    oz_fit: float
    mean_increment: float


class Schema(typing.NamedTuple):
    name: str
    version: int
    record: typing.Type[typing.NamedTuple]

    @property
    def columns(self) -> typing.Tuple[str, ...]:
        return self.record._fields

    def types(self) -> typing.List[type]:
        hints = typing.get_type_hints(self.record)
        return [hints[c] for c in self.columns]


SCHEMAS: typing.Dict[str, Schema] = {s.name: s for s in (
    Schema("tension", 1, TensionRow),
    Schema("profile", 1, ProfilePoint),
    Schema("measured_profile", 1, MeasuredProfileRow),
    Schema("field", 1, FieldRow),
    Schema("groundstate", 1, GroundStateRow),
    Schema("width", 1, WidthRow),
    Schema("containment", 1, ContainmentRow),
    Schema("wall", 1, WallRow),
    Schema("tail", 1, TailRow),
)}


def get_schema(name: str) -> Schema:
    try:
        return SCHEMAS[name]
    except KeyError:
        raise ValueError(f"Unknown table schema {name!r}, expected one of {sorted(SCHEMAS)}") from None


def schema_for_header(header: typing.Sequence[str]) -> Schema:
    """
        Find the schema whose column list is exactly ``header``
    """
    for schema in SCHEMAS.values():
        if tuple(header) == schema.columns:
            return schema
    raise ValueError(f"No schema has columns {list(header)}")


def tension_rows(curve: TensionCurve) -> typing.List[TensionRow]:
    return [TensionRow(*map(float, values)) for values in zip(*curve)]


def field_rows(field: FieldAccumulator, M: int) -> typing.List[FieldRow]:
    """
        One row per interior cell, ``t`` outermost, from the accumulated mean and its batch-means error
    """
    mean, err = field.mean(), field.stderr()
    rows, cols = mean.shape
    return [FieldRow(j + 0.5, i - M + 0.5, float(mean[i, j]), float(err[i, j]))
            for i in range(rows) for j in range(cols)]


def _plain(value: typing.Any) -> typing.Union[int, float, str]:
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def _cell(value: typing.Union[int, float, str]) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def _parse(text: str, kind: type) -> typing.Union[int, float]:
    return int(text) if kind is int else float(text)


def make_row(record: typing.NamedTuple) -> typing.List[typing.Union[int, float, str]]:
    return [_plain(v) for v in record]


def render_csv(schema: Schema, records: typing.Iterable[typing.NamedTuple]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(schema.columns)
    for record in records:
        writer.writerow([_cell(v) for v in make_row(record)])
    return buffer.getvalue()


def render_json(schema: Schema, records: typing.Iterable[typing.NamedTuple]) -> str:
    document: _types.JsonDict = {
        "schema": schema.name,
        "version": schema.version,
        "columns": list(schema.columns),
        "rows": [make_row(r) for r in records],
    }
    return json.dumps(document, sort_keys=True, indent=1) + "\n"


def write_table(path: typing.Union[str, pathlib.Path], schema_name: str,
                records: typing.Iterable[typing.NamedTuple], fmt: str = "csv") -> pathlib.Path:
    """
        Write records as a table. The file suffix follows ``fmt``.

    :param path: Destination without suffix, or with the matching one
    :param schema_name: Name of a schema in :data:`SCHEMAS`
    :param records: Records of the schema's type
    :param fmt: ``csv`` or ``json``
    :return: Path actually written
    """
    if fmt not in FORMATS:
        raise ValueError(f"Unknown table format {fmt!r}, expected one of {FORMATS}")
    schema = get_schema(schema_name)
    path = pathlib.Path(path).with_suffix("." + fmt)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = render_csv(schema, records) if fmt == "csv" else render_json(schema, records)
    with open(path, "w", newline="") as file:
        file.write(text)
    log.debug(f"wrote {schema.name} table to {path}")
    return path


def read_table(path: typing.Union[str, pathlib.Path]) -> typing.Tuple[Schema, typing.List[typing.NamedTuple]]:
    """
        Parse a table written by :func:`write_table` back into records

    :param path: ``.csv`` or ``.json`` file
    :return: The schema and its records
    """
    path = pathlib.Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        document = json.loads(text)
        schema = get_schema(document["schema"])
        if document["version"] != schema.version or tuple(document["columns"]) != schema.columns:
            raise ValueError(f"{path} does not match schema {schema.name} v{schema.version}")
        kinds = schema.types()
        return schema, [schema.record(*(int(v) if k is int else float(v) for v, k in zip(row, kinds)))
                        for row in document["rows"]]

    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    schema = schema_for_header(header)
    kinds = schema.types()
    return schema, [schema.record(*(_parse(cell, k) for cell, k in zip(row, kinds))) for row in reader if row]


def write_summary(path: typing.Union[str, pathlib.Path], summary: _types.JsonDict) -> pathlib.Path:
    """
        Write a run summary as sorted JSON. Non-finite floats become ``null``.
    """
    def clean(value: _types.JsonVal) -> _types.JsonVal:
        if isinstance(value, dict):
            return {k: clean(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [clean(v) for v in value]
        if isinstance(value, (bool, np.bool_)):
            return bool(value)
        value = _plain(value)
        if isinstance(value, float) and not math.isfinite(value):
            return None
        return value

    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as file:
        file.write(json.dumps(clean(summary), sort_keys=True, indent=1) + "\n")
    return path
