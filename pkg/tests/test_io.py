import hashlib
import json
import math

import numpy as np
from hypothesis import given, strategies as st

from lagtop import __version__
from lagtop.io import Provenance, canonical_json, config_hash, format_value, read_csv, write_csv, write_json


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_seventeen_digits_round_trip(x):
    assert float(format_value(x)) == x
    assert float(format_value(np.float64(x))) == x


def test_format_special_values():
    assert format_value(True) == "1" and format_value(np.bool_(False)) == "0"
    assert format_value(np.int64(7)) == "7"
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(math.inf) == "inf" and format_value(math.nan) == "nan"


@given(st.dictionaries(st.text(max_size=5), st.one_of(st.integers(), st.floats(allow_nan=False), st.text(max_size=5)),
                       max_size=6))
def test_hash_ignores_key_order(d):
    rev = dict(reversed(list(d.items())))
    assert canonical_json(d) == canonical_json(rev)
    assert config_hash(d) == config_hash(rev)


def test_hash_known_value():
    # sha256 of '{"a":1,"b":[0.5,"x"]}'
    assert config_hash({"b": [0.5, "x"], "a": 1}) == hashlib.sha256(b'{"a":1,"b":[0.5,"x"]}').hexdigest()
    assert canonical_json({"x": math.inf, "y": math.nan}) == '{"x":"inf","y":"nan"}'


def test_csv_round_trip_with_provenance(tmp_path):
    prov = Provenance("simulate", {"c": 1.0, "a": 3.0}, 11, ("dt",))
    rows = [[0.1, 1, "x"], [1 / 3, 2, "y"]]
    path = write_csv(str(tmp_path / "t.csv"), ("a", "b", "name"), rows, prov)
    comments, cols, body = read_csv(path)
    assert cols == ["a", "b", "name"]
    assert [float(r[0]) for r in body] == [0.1, 1 / 3]
    assert f"# version: {__version__}" in comments
    assert f"# config_sha256: {config_hash({'a': 3.0, 'c': 1.0})}" in comments
    assert "# seed: 11" in comments
    assert all(c.startswith("# ") for c in comments)
    text = open(path).read()
    assert write_csv(str(tmp_path / "u.csv"), ("a", "b", "name"), rows, prov) and open(tmp_path / "u.csv").read() == text


def test_json_document(tmp_path):
    prov = Provenance("naff", {"n": 4}, 0)
    path = write_json(str(tmp_path / "r.json"), {"v": np.array([1.0, math.nan])}, prov)
    doc = json.load(open(path))
    assert doc["result"]["v"] == [1.0, "nan"]
    assert doc["provenance"]["config_sha256"] == config_hash({"n": 4})
    assert doc["provenance"]["version"] == __version__ and doc["provenance"]["seed"] == 0
