import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinflip.config import ConfigError, parse_bool, parse_grid, parse_param_sets, resolve
from spinflip.table import ResultTable


def _table():
    t = ResultTable(["a", "b", "c", "flag"], ["time", "", "", ""], [], {"seed": 3, "config": {"x": [1, 2]}})
    t.append([1, 0.1, "EE", True])
    t.append({"a": 2, "b": math.nan, "c": None, "flag": False})
    t.append([np.int64(3), np.float64(1 / 3), "CU", np.bool_(False)])
    return t


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_round_trip(fmt):
    t = _table()
    back = ResultTable.loads(t.dumps(fmt))
    assert back.columns == t.columns and back.units == t.units
    assert back.rows == t.rows
    assert back.metadata == t.metadata
    assert back.dumps(fmt) == t.dumps(fmt)


def test_nan_becomes_missing():
    t = _table()
    assert t.rows[1][1] is None
    assert "\n2,,,false\n" in t.to_csv()


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
@settings(max_examples=50, deadline=None)
def test_floats_round_trip_bit_exact(values):
    t = ResultTable(["x"])
    for v in values:
        t.append([float(v)])
    back = ResultTable.from_csv(t.to_csv())
    assert [r[0] for r in back.rows] == [float(v) for v in values]
    assert all(isinstance(r[0], float) for r in back.rows)


def test_row_length_checked():
    with pytest.raises(ValueError):
        ResultTable(["a"]).append([1, 2])
    with pytest.raises(ValueError):
        ResultTable(["a", "b"], ["x"])


def test_records_and_column():
    t = _table()
    assert t.column("c") == ["EE", None, "CU"]
    assert t.records()[0]["a"] == 1


def test_unknown_format():
    with pytest.raises(ValueError):
        _table().dumps("xml")


@pytest.mark.parametrize(
    "text,expected",
    [
        ("1.05,1.1,1.2", [1.05, 1.1, 1.2]),
        ("0:1:0.25", [0.0, 0.25, 0.5, 0.75, 1.0]),
        ("lin:0:1:3", [0.0, 0.5, 1.0]),
        ("log:1e-4:1e-1:4", [1e-4, 1e-3, 1e-2, 1e-1]),
        ("", []),
    ],
)
def test_parse_grid(text, expected):
    np.testing.assert_allclose(parse_grid(text), expected, rtol=1e-12)


def test_step_grid_includes_stop():
    g = parse_grid("0.5:1.5:0.01")
    assert len(g) == 101 and g[0] == 0.5 and g[-1] == 1.5


@pytest.mark.parametrize("text", ["1,0.5", "1:0:0.1", "0:1:0", "lin:0:1", "log:0:1:3", "a,b", "1:2", "lin:0:1:0"])
def test_parse_grid_errors(text):
    with pytest.raises(ConfigError):
        parse_grid(text)


def test_parse_param_sets():
    assert parse_param_sets("25,1.0,1.2; 15,0.8,1.2,0.9;") == [(25, 1.0, 1.0, 1.2), (15, 0.8, 1.2, 0.9)]
    assert parse_param_sets("") == []
    with pytest.raises(ConfigError):
        parse_param_sets("1,2")


def test_parse_bool():
    assert parse_bool("Yes") and not parse_bool("0")
    with pytest.raises(ConfigError):
        parse_bool("maybe")


def test_resolve_precedence():
    text = "[run]\nseed = 9\nformat = json\n\n[ensemble]\ncount = 20\neps = 1.2\n"
    cfg = resolve("ensemble", text, ["count=5", "delta=0.1"], workers=2)
    assert cfg.values["count"] == 5 and cfg.values["eps"] == [1.2] and cfg.values["delta"] == [0.1]
    assert cfg.seed == 9 and cfg.fmt == "json" and cfg.workers == 2
    assert resolve("ensemble", text, seed=4, workers=1).seed == 4


def test_provenance_ignores_workers():
    a = resolve("stability", None, ["eps=1.2"], workers=1)
    b = resolve("stability", None, ["eps=1.2"], workers=4)
    assert a.digest() == b.digest()
    assert a.digest() != resolve("stability", None, ["eps=1.3"], workers=1).digest()


@pytest.mark.parametrize(
    "overrides,kwargs",
    [
        (["bogus=1"], {}),
        (["count"], {}),
        (["count=many"], {}),
        ([], {"seed": -1}),
        ([], {"seed": 2**64}),
        ([], {"workers": 0}),
        ([], {"fmt": "xml"}),
    ],
)
def test_resolve_errors(overrides, kwargs):
    with pytest.raises(ConfigError):
        resolve("ensemble", None, overrides, **{"workers": 1, **kwargs})


def test_workers_env(monkeypatch):
    monkeypatch.setenv("SPINFLIP_WORKERS", "3")
    assert resolve("cherry").workers == 3
    monkeypatch.setenv("SPINFLIP_WORKERS", "x")
    with pytest.raises(ConfigError):
        resolve("cherry")


def test_result_file_as_config():
    cfg = resolve("stability", None, ["eps=1.1,1.3"], seed=7, workers=1)
    t = ResultTable(["x"], metadata={"config": cfg.provenance()})
    again = resolve("stability", t.to_csv(), workers=1)
    assert again.provenance() == cfg.provenance()
    with pytest.raises(ConfigError):
        resolve("ensemble", t.to_csv(), workers=1)


def test_bad_ini():
    with pytest.raises(ConfigError):
        resolve("cherry", "[cherry\nM=3", workers=1)
