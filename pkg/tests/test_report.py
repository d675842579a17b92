"""Text formatting helpers and random substreams."""

import json
import math

import numpy as np

from qbound.report import csv_text, fmt, header_line, json_text
from qbound.rng import substream


class TestFormat:
    def test_numbers(self):
        assert fmt(0.1 + 0.2) == "0.3"
        assert fmt(1 / 3) == "0.333333333333"
        assert fmt(np.int64(7)) == "7"
        assert fmt(math.inf) == "divergent"
        assert fmt(True) == "true"
        assert fmt(None) == ""

    def test_header(self):
        h = header_line(["kappa", "--mode", "biased"], 0.07, "beta-squared-approx")
        assert h.startswith("# qbound ")
        assert "command: qbound kappa --mode biased" in h
        assert "kappa: 0.07" in h and "alpha: beta-squared-approx" in h

    def test_csv_layout(self):
        text = csv_text(["a", "b"], [[1, math.inf]], "# head", ["note"])
        assert text == "# head\n# note\na,b\n1,divergent\n"

    def test_json(self):
        data = json.loads(json_text({"x": 1 / 3, "y": math.inf, "z": [np.float64(2.0)]}))
        assert data == {"x": 0.333333333333, "y": "divergent", "z": [2.0]}


class TestSubstreams:
    def test_reproducible(self):
        a = substream(5, "trial", 3).random(4)
        b = substream(5, "trial", 3).random(4)
        np.testing.assert_array_equal(a, b)

    def test_separated_by_tag_index_and_seed(self):
        ref = substream(5, "trial", 3).random()
        assert substream(5, "boot", 3).random() != ref
        assert substream(5, "trial", 4).random() != ref
        assert substream(6, "trial", 3).random() != ref

    def test_large_seed(self):
        substream(2**70 + 1, "test", 0).random()
