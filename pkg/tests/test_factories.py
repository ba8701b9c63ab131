import json
import math
import pathlib
import numpy as np
import pytest
import hpi
from hpi import factories
from hpi import exact_solution as es
from hpi import mc_engine as mc
from hpi.contour_analysis import ContainmentRow, TailRow, WallRow


GOLDEN = pathlib.Path(__file__).parent / "data" / "golden"


@pytest.mark.parametrize("name", sorted(factories.SCHEMAS))
def test_golden_headers(tmp_path, name):
    path = factories.write_table(tmp_path / name, name, [])
    assert path.read_text() == (GOLDEN / f"{name}.csv").read_text()


def test_schema_lookup():
    assert factories.get_schema("tail").columns == ("L", "tail_prob")
    assert factories.schema_for_header(["R", "containment_freq"]).name == "containment"
    with pytest.raises(ValueError):
        factories.get_schema("histogram")
    with pytest.raises(ValueError):
        factories.schema_for_header(["R"])


def test_tension_rows(couplings):
    curve = es.tension_curve([0.0, 0.4], couplings)
    rows = factories.tension_rows(curve)
    assert len(rows) == 2
    assert rows[0].theta == 0.0
    assert rows[1].tau == curve.tau[1]
    assert all(type(v) is float for v in rows[1])


def test_field_rows():
    acc = mc.FieldAccumulator((4, 2), 32)
    for i in range(32):
        acc.add(i, np.arange(8, dtype=np.float64).reshape(4, 2))
    rows = factories.field_rows(acc, 2)
    assert len(rows) == 8
    assert rows[0] == factories.FieldRow(0.5, -1.5, 0.0, 0.0)
    assert rows[-1] == factories.FieldRow(1.5, 1.5, 7.0, 0.0)


def test_csv_round_trip(tmp_path):
    rows = [WallRow(64, 2, 0.125), WallRow(128, 2, 1 / 3)]
    path = factories.write_table(tmp_path / "wall", "wall", rows)
    assert path.suffix == ".csv"
    schema, back = factories.read_table(path)
    assert schema.name == "wall"
    assert back == rows
    assert type(back[0].N) is int


def test_json_round_trip(tmp_path):
    rows = [TailRow(1, 1.0), TailRow(2, 0.5)]
    path = factories.write_table(tmp_path / "tail.csv", "tail", rows, "json")
    assert path.name == "tail.json"
    document = json.loads(path.read_text())
    assert document["schema"] == "tail" and document["version"] == 1
    assert document["rows"] == [[1, 1.0], [2, 0.5]]
    assert factories.read_table(path) == (factories.get_schema("tail"), rows)


def test_numpy_values_are_plain(tmp_path):
    rows = [ContainmentRow(np.float64(2.0), np.float32(0.5))]
    path = factories.write_table(tmp_path / "containment", "containment", rows)
    assert path.read_text().splitlines()[1] == "2.0,0.5"


def test_bad_format(tmp_path):
    with pytest.raises(ValueError):
        factories.write_table(tmp_path / "tail", "tail", [], "xlsx")


def test_json_schema_mismatch(tmp_path):
    path = factories.write_table(tmp_path / "tail", "tail", [TailRow(1, 1.0)], "json")
    document = json.loads(path.read_text())
    document["version"] = 7
    path.write_text(json.dumps(document))
    with pytest.raises(ValueError):
        factories.read_table(path)


def test_summary(tmp_path):
    path = factories.write_summary(tmp_path / "out" / "summary.json", {
        "rate": math.nan,
        "samples": np.int64(32),
        "antisymmetric": np.bool_(True),
        "scale": np.float64(1.25),
        "nested": {"values": [math.inf, 1.0]},
    })
    assert json.loads(path.read_text()) == {
        "antisymmetric": True,
        "nested": {"values": [None, 1.0]},
        "rate": None,
        "samples": 32,
        "scale": 1.25,
    }
    assert "NaN" not in path.read_text()


def test_profile_table(tmp_path, couplings):
    points = es.profile_points([-1.0, 0.0, 1.0], 0.0, couplings)
    _, back = factories.read_table(factories.write_table(tmp_path / "profile", "profile", points))
    assert back == points
    assert isinstance(back[0], hpi.ProfilePoint)
