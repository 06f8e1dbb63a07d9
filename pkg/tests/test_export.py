import json

import numpy as np
import pytest

from r4bp.export import SvgFigure, dumps_csv, dumps_json, fmt


def test_float_round_trip():
    for v in (0.1, 1 / 3, -2.0e-300, 1.9254372940134374):
        assert float(fmt(v)) == v
    assert fmt(np.float64(0.5)) == "0.5"
    assert fmt(True) == "true" and fmt(np.int64(3)) == "3"


def test_json_is_sorted_and_stable():
    obj = {"b": [1.0, 2 + 3j, (1, 2)], "a": {"z": np.float64(0.1), "y": np.arange(2)}}
    s = dumps_json(obj)
    assert s == dumps_json(obj)
    back = json.loads(s)
    assert list(back) == ["a", "b"]
    assert back["b"] == [1.0, [2.0, 3.0], [1, 2]]
    assert back["a"]["y"] == [0, 1]


def test_json_rejects_nan():
    with pytest.raises(ValueError):
        dumps_json({"x": float("nan")})


def test_csv():
    text = dumps_csv(["a", "b"], [(0.1, 2), (np.float32(1.5), "ok")])
    assert text == "a,b\n0.10000000000000001,2\n1.5,ok\n"


def test_svg():
    fig = SvgFigure(title="t <x>")
    fig.scatter([[0, 0], [1, 1]]).polyline([[0, 1], [1, 0], [np.nan, 0]])
    s = fig.to_string()
    assert s.startswith("<svg") and s.rstrip().endswith("</svg>")
    assert s.count("<circle") == 2 and "<polyline" in s and "t &lt;x&gt;" in s
    assert SvgFigure().to_string().count("<circle") == 0
