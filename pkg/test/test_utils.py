import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from distlearn.utils import InvalidParam, dump_json, float_from_json, jsonable

def test_dump_json_floats():
    assert json.loads(dump_json({"x": 0.1})) == {"x": 0.1}
    assert '"x": 0.1\n' in dump_json({"x": 0.1})
    assert "0.10000000000000001" not in dump_json([0.1])
    assert json.loads(dump_json([1e-300, 2.0**60, 1 / 3])) == [1e-300, 2.0**60, 1 / 3]

def test_jsonable():
    assert jsonable({"a": (np.float64(0.5), np.int64(3), np.bool_(True))}) == {"a": [0.5, 3, True]}
    assert jsonable([math.inf, -math.inf]) == ["inf", "-inf"]
    assert jsonable(np.array([1, 2])) == [1, 2]
    with pytest.raises(ValueError):
        jsonable(math.nan)

def test_float_from_json():
    assert float_from_json("inf", "x") == math.inf
    assert float_from_json("-inf", "x") == -math.inf
    assert float_from_json(3, "x") == 3.0
    for bad in (True, "1.0", None, [1.0]):
        with pytest.raises(InvalidParam):
            float_from_json(bad, "x")

@given(st.floats(allow_nan=False))
def test_floats_round_trip(x):
    assert float_from_json(json.loads(dump_json(x)), "x") == x
