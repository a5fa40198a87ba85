import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vgeo.cli import main, parse_point
from vgeo.core import SampledCurve
from vgeo.tables import dedupe, fmt, read_csv, read_curve, write_csv, write_curve


@settings(max_examples=300, deadline=None)
@given(st.floats(allow_nan=False))
def test_float_round_trip_exact(x):
    assert float(fmt(x)) == x


def test_fmt_specials():
    assert fmt(None) == "" and fmt(np.nan) == "nan" and fmt(-np.inf) == "-inf" and fmt(True) == "true"


def test_csv_round_trip(tmp_path):
    rows = [[0.1, 1 / 3, "a"], [np.pi, -0.0, "b"]]
    write_csv(tmp_path / "t.csv", ["x", "y", "z"], rows)
    back = read_csv(tmp_path / "t.csv")
    assert back[0]["y"] == 1 / 3 and back[1]["x"] == np.pi and back[1]["z"] == "b"


def test_curve_round_trip(tmp_path):
    t = np.linspace(0, 1, 9)
    c = SampledCurve(t, np.column_stack([t, t**2]), np.column_stack([np.ones(9), 2 * t]))
    write_curve(tmp_path / "c.csv", c)
    grid, pts, der = read_curve(tmp_path / "c.csv")
    assert np.array_equal(grid, c.grid) and np.array_equal(pts, c.points) and np.array_equal(der, c.deriv)


def test_dedupe_keeps_first():
    rows = [{"set": "a", "property": "p", "eps": 0.5, "radius": 0.25, "seed": 1, "verdict": "x"},
            {"set": "a", "property": "p", "eps": 0.5, "radius": 0.25, "seed": 1, "verdict": "y"},
            {"set": "a", "property": "p", "eps": 0.25, "radius": 0.25, "seed": 1, "verdict": "z"}]
    out = dedupe(rows)
    assert len(out) == 2 and {r["verdict"] for r in out} == {"x", "z"}


def test_parse_point():
    assert parse_point("-1,0.5").tolist() == [-1.0, 0.5]
    with pytest.raises(Exception):
        parse_point("1,,2")


def test_check_violation_exit_code(tmp_path, capsys):
    code = main(["check", "--catalog", "parabola-pair", "--point", "0,0", "--property", "super-regularity",
                 "--eps", "0.3333333333333333", "--radius", "0.5", "--out", str(tmp_path)])
    assert code == 2
    rows = read_csv(tmp_path / "check_parabola-pair.csv")
    assert rows[0]["verdict"] == "violated"
    w = json.loads(rows[0]["witness"])
    assert w["family_index"] == 3


def test_check_clean_exit_code(tmp_path):
    code = main(["check", "--catalog", "unit-ball", "--point", "0,0", "--property", "prox-regularity,clarke-regularity",
                 "--radius", "0.25", "--out", str(tmp_path), "--format", "json"])
    assert code == 0
    data = json.loads((tmp_path / "check_unit-ball.json").read_text())
    assert all(r["verdict"] == "no-violation-found" for r in data)


def test_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": ')
    assert main(["path", "--spec", str(bad), "--from", "0,0", "--to", "1,1", "--eps", "0.5", "--out", str(tmp_path)]) == 1
    assert "byte" in capsys.readouterr().err
    assert main(["check", "--catalog", "nope", "--point", "0,0"]) == 1
    assert main(["check", "--catalog", "unit-ball", "--point", "0,0", "--property", "function-approx-convexity"]) == 1
    assert main(["report", str(tmp_path / "empty")]) == 1


def test_negative_coordinates_accepted(tmp_path, capsys):
    code = main(["geodesic", "--catalog", "unit-circle", "--from", "-1,0", "--to", "0,-1", "--out", str(tmp_path)])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["length"] == pytest.approx(np.pi / 2, abs=1e-6)
    _, pts, _ = read_curve(tmp_path / "geodesic_unit-circle_curve.csv")
    assert np.allclose(pts[0], [-1, 0]) and np.allclose(pts[-1], [0, -1])


def test_path_and_descend(tmp_path, capsys):
    assert main(["path", "--catalog", "parabola-epigraph", "--from", "0,0", "--to", "0.3,0.5", "--eps", "0.1",
                 "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "path_parabola-epigraph_report.json").read_text())
    assert rep["passed"]
    capsys.readouterr()
    assert main(["descend", "--catalog", "power32-graph", "--point", "0,0", "--objective", "x1",
                 "--direction", "-1,0", "--out", str(tmp_path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["slope"] <= -0.5


def test_same_seed_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["check", "--catalog", "unit-circle", "--point", "1,0", "--property", "super-regularity,uag",
                     "--eps", "0.25", "--radius", "0.125", "--samples", "50", "--seed", "5",
                     "--out", str(tmp_path / d)]) == 0
    a = (tmp_path / "a" / "check_unit-circle.csv").read_bytes()
    assert a == (tmp_path / "b" / "check_unit-circle.csv").read_bytes()


def test_report_matrix(tmp_path):
    main(["check", "--catalog", "unit-ball", "--point", "0,0", "--property", "clarke-regularity", "--out", str(tmp_path)])
    main(["check", "--catalog", "unit-ball", "--point", "0,0", "--property", "clarke-regularity", "--out", str(tmp_path),
          "--output", str(tmp_path / "again.csv")])
    assert main(["report", str(tmp_path), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "matrix.csv", numeric=False)
    assert len(rows) == 1
    assert "regular" in json.dumps(rows[0])
