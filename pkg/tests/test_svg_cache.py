import math

import numpy as np
import pytest

import tipcurve as tc
from tipcurve.cache import ResultsCache, cache_key, canonical_json


class TestEmitSvg:
    def test_structure(self):
        xs = np.linspace(0, 10, 50)
        svg = tc.emit_svg([("wave", xs, np.sin(xs))], title="demo", x_label="t", y_label="x")
        assert svg.startswith("<svg ")
        assert svg.rstrip().endswith("</svg>")
        assert "polyline" in svg
        assert "demo" in svg

    def test_deterministic(self):
        xs = np.linspace(0, 1, 20)
        args = [("s", xs, xs**2)]
        assert tc.emit_svg(args, title="t") == tc.emit_svg(args, title="t")

    def test_nan_splits_segments(self):
        xs = np.linspace(0, 1, 9)
        ys = xs.copy()
        ys[4] = math.nan
        svg = tc.emit_svg([("gap", xs, ys)])
        assert svg.count("<polyline") == 2

    def test_escapes_markup(self):
        xs = np.array([0.0, 1.0])
        svg = tc.emit_svg([("a<b", xs, xs)], title="x & y")
        assert "a&lt;b" in svg and "x &amp; y" in svg
        assert "a<b" not in svg

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            tc.emit_svg([])
        with pytest.raises(ValueError):
            tc.emit_svg([("inf", np.array([0.0, 1.0]), np.array([0.0, math.inf]))])
        with pytest.raises(ValueError):
            tc.emit_svg([("nan only", np.array([0.0, 1.0]), np.full(2, math.nan))])


class TestCacheKey:
    def test_canonical_json_is_order_insensitive(self):
        assert canonical_json({"b": 1, "a": [2, 3]}) == canonical_json({"a": [2, 3], "b": 1})

    def test_key_changes_with_content(self):
        assert cache_key({"mode": "classify", "c": 0.1}) != cache_key({"mode": "classify", "c": 0.2})

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            cache_key({"x": math.nan})


class TestResultsCache:
    def test_roundtrip(self, tmp_path):
        cache = ResultsCache(tmp_path)
        key = cache_key({"mode": "classify"})
        assert cache.get(key) is None
        artifacts = {"result.json": '{"a": 1}\n', "out.csv": "c,v\n0,1\n"}
        cache.put(key, artifacts)
        assert cache.get(key) == artifacts

    def test_corrupt_entry_is_a_miss(self, tmp_path):
        cache = ResultsCache(tmp_path)
        key = cache_key({"mode": "classify"})
        cache.put(key, {"result.json": "{}"})
        (tmp_path / f"{key}.json").write_text("not json")
        assert cache.get(key) is None
