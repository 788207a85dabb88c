import json

import numpy as np
import pytest

from rainmrf.anomaly import extract_anomalies
from rainmrf.errors import IncompleteGrid, ParseError
from rainmrf.files import (
    dumps_json,
    membership_to_field,
    read_anomaly_signs,
    read_header,
    read_state_field,
    write_anomalies,
    write_labels,
    write_marginals,
    write_membership,
    write_state_field,
    write_trace,
)
from rainmrf.grid import rect_grid
from rainmrf.lwa import StateField

YEARS = [1990, 1991, 1992]


def test_state_field_round_trip(tmp_path, rng):
    f = StateField(rng.integers(1, 4, size=(5, 3)), rng.integers(1, 4, size=3))
    write_state_field(tmp_path / "z.csv", f, YEARS)
    assert read_state_field(tmp_path / "z.csv", 5, YEARS) == f
    assert read_header(tmp_path / "z.csv") == ["location_id", "year", "state"]


def test_labels_read_back_with_normal_aggregate(tmp_path, rng):
    z = rng.integers(1, 4, size=(4, 3))
    write_labels(tmp_path / "l.csv", z, YEARS)
    back = read_state_field(tmp_path / "l.csv", 4, YEARS)
    assert np.array_equal(back.z, z)
    assert back.z_aimr.tolist() == [3, 3, 3]


@pytest.mark.parametrize("body, err", [
    ("location_id,year,state\n0,1990,4\n", ParseError),
    ("location_id,year,state\n0,1985,1\n", ParseError),
    ("loc,year,state\n", ParseError),
    ("location_id,year,state\n0,1990,1\n", IncompleteGrid),
])
def test_state_field_errors(tmp_path, body, err):
    (tmp_path / "bad.csv").write_text(body)
    with pytest.raises(err):
        read_state_field(tmp_path / "bad.csv", 1, YEARS)


def test_membership_round_trip(tmp_path, rng):
    g = rect_grid(3, 3)
    z = rng.integers(1, 4, size=(9, 3))
    anomalies = extract_anomalies(z, g)
    write_anomalies(tmp_path / "a.csv", anomalies)
    write_membership(tmp_path / "m.csv", anomalies, YEARS)
    back = membership_to_field(tmp_path / "m.csv", read_anomaly_signs(tmp_path / "a.csv"), 9, YEARS)
    assert np.array_equal(back.z, z)


def test_marginals_and_trace_files(tmp_path):
    m = np.full((2, 3, 3), 1 / 3)
    write_marginals(tmp_path / "p.csv", m, np.full((3, 3), 1 / 3), YEARS)
    rows = (tmp_path / "p.csv").read_text().splitlines()
    assert rows[0] == "location_id,year,p1,p2,p3"
    assert len(rows) == 1 + 6 + 3
    assert sum(float(v) for v in rows[1].split(",")[2:]) == pytest.approx(1.0)
    write_trace(tmp_path / "t.csv", [1, 2], [-1.5, -1.25])
    assert (tmp_path / "t.csv").read_text() == "sweep,loglik\n1,-1.5\n2,-1.25\n"


def test_json_handles_numpy_and_sets():
    doc = json.loads(dumps_json({"a": np.int64(3), "b": np.float32(0.5), "c": frozenset({2, 1}),
                                 "d": np.arange(2)}))
    assert doc == {"a": 3, "b": 0.5, "c": [1, 2], "d": [0, 1]}
    with pytest.raises(TypeError):
        dumps_json({"x": object()})
