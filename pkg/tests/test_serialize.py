from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from preproj.adapted import all_diagrams, setup_from_diagram
from preproj.exactlinalg import FieldSpec
from preproj.quiver import dynkin_a, star_quiver
from preproj.serialize import (
    FormatError,
    dumps,
    field_from_json,
    fraction_str,
    load_json,
    module_from_json,
    module_to_json,
    parse_scalar,
    quiver_from_json,
    quiver_to_json,
    setup_from_json,
    setup_to_json,
)
from preproj.suite import suite_modules


@pytest.mark.parametrize("name,m", suite_modules(), ids=[n for n, _ in suite_modules()])
def test_module_roundtrip(name, m):
    g = quiver_from_json(json.loads(dumps(quiver_to_json(m.graph))))
    back = module_from_json(json.loads(dumps(module_to_json(m))), g)
    assert back == m


@given(st.sampled_from([d for n in range(5) for d in all_diagrams(n)]))
def test_setup_roundtrip(d):
    s = setup_from_diagram(d, range(1, d.k + 1))
    assert setup_from_json(json.loads(dumps(setup_to_json(s)))) == s


def test_prime_field_setup_roundtrip():
    d = next(iter(all_diagrams(3)))
    s = setup_from_diagram(d, [], FieldSpec.prime(5))
    out = setup_to_json(s)
    assert out["field"] == {"prime": 5}
    assert setup_from_json(out) == s


def test_scalars():
    F = FieldSpec.prime(7)
    assert parse_scalar("1/2", F) == 4
    assert fraction_str(parse_scalar("-3/6", FieldSpec())) == "-1/2"
    for bad in (1.5, True, None, "x"):
        with pytest.raises(FormatError):
            parse_scalar(bad, F)
    with pytest.raises(FormatError):
        parse_scalar("1/7", F)


def test_field_errors():
    with pytest.raises(FormatError):
        field_from_json({"prime": 4})
    with pytest.raises(FormatError):
        field_from_json("reals")


def test_bad_setups():
    base = {"n": 2, "k": 1, "x": [[0, 1], [0, 0]], "W": [[1, 0]], "J": [2]}
    assert setup_from_json(base).k == 1
    for key in ("n", "x", "W", "J"):
        broken = dict(base)
        del broken[key]
        with pytest.raises(FormatError):
            setup_from_json(broken)
    with pytest.raises(FormatError):
        setup_from_json({**base, "k": 2})
    with pytest.raises(FormatError):
        setup_from_json({**base, "x": [[0, 1]]})


def test_bad_modules():
    g = dynkin_a(2)
    with pytest.raises(FormatError):
        module_from_json({"dims": {"9": 1}}, g)
    with pytest.raises(FormatError):
        module_from_json({"dims": {"1": 1, "2": 1}, "maps": {"zz": [[1]]}}, g)
    with pytest.raises(FormatError):
        module_from_json({"dims": {"1": 1, "2": 1}, "maps": {"a1": [[1, 1]]}}, g)
    with pytest.raises(FormatError):
        quiver_from_json({"vertices": ["1"]})


def test_quiver_json_shape():
    obj = quiver_to_json(star_quiver(2))
    assert obj == {
        "vertices": ["0", "1", "2"],
        "edges": [{"id": "r1", "source": "0", "target": "1"}, {"id": "r2", "source": "0", "target": "2"}],
    }


def test_load_json_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(FormatError):
        load_json(p)
    with pytest.raises(FormatError):
        load_json(tmp_path / "missing.json")


def test_fixture_files_load(fixtures_dir):
    for name in ("example1", "example2", "adversarial", "tampered"):
        setup_from_json(load_json(fixtures_dir / f"{name}.json"))
    g = quiver_from_json(load_json(fixtures_dir / "a2_quiver.json"))
    module_from_json(load_json(fixtures_dir / "a2_extension.json"), g)
