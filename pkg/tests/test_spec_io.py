import json

import numpy as np
import pytest

from vgeo.spec_io import SpecError, canonical, dump_spec, load_spec, load_spec_file, parse_spec_text


def test_preimage_spec_round_trip():
    spec = {"kind": "preimage", "name": "disc", "F": ["x1^2 + x2^2 - 1"], "D": {"type": "orthant", "dim": 1}}
    C = load_spec(spec)
    assert C.contains([0.5, 0.5]) and not C.contains([1.0, 1.0])
    again = load_spec(dump_spec(C))
    X = np.random.default_rng(0).uniform(-1.5, 1.5, (200, 2))
    assert np.array_equal(C.members(X), again.members(X))
    assert canonical(dump_spec(again)) == dump_spec(C)


def test_graph_and_epigraph_specs():
    G = load_spec({"kind": "graph", "f": "abs(x1)^(3/2)"})
    assert G.contains([0.25, 0.125])
    E = load_spec({"kind": "epigraph", "f": "x1^2"})
    assert E.contains([0.5, 1.0]) and not E.contains([0.5, 0.0])


def test_curve_union_spec():
    spec = {"kind": "curve-union", "bbox": [[-2, -2], [2, 2]],
            "branches": [{"param": ["x1", "x1^2"], "interval": [-1, 1]},
                         {"param": ["x1", "-x1^2"], "interval": [-1, 1]}]}
    C = load_spec(spec)
    assert C.contains([0.5, 0.25]) and C.contains([0.5, -0.25]) and not C.contains([0.5, 0.0])


def test_catalog_spec():
    assert load_spec({"kind": "catalog", "name": "unit-circle"}).contains([0.0, 1.0])
    with pytest.raises(SpecError, match="available"):
        load_spec({"kind": "catalog", "name": "nope"})


def test_malformed_json_reports_byte_offset():
    with pytest.raises(SpecError, match="byte 13"):
        parse_spec_text('{"kind": "x",}')


@pytest.mark.parametrize("spec, where", [
    ({"kind": "preimage", "F": ["x1"]}, "D"),
    ({"kind": "weird"}, "kind"),
    ({"kind": "graph", "f": "x1", "extra": 1}, "extra"),
    ({"kind": "preimage", "F": ["x1 +"], "D": {"type": "orthant", "dim": 1}}, r"F\[0\]"),
    ({"kind": "preimage", "F": ["x1", "x2"], "D": {"type": "orthant", "dim": 1}}, "dimension"),
    ({"kind": "graph", "f": "x1", "bbox": [[0, 0], [0, 1]]}, "bbox"),
])
def test_invalid_specs(spec, where):
    with pytest.raises(SpecError, match=where):
        load_spec(spec)


def test_file_name_defaults_to_stem(tmp_path):
    p = tmp_path / "myset.json"
    p.write_text(json.dumps({"kind": "epigraph", "f": "x1^2"}))
    assert load_spec_file(p).name == "myset"
