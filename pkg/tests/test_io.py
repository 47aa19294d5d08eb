import json

import numpy as np
import pytest

from pwl import io


def test_float_format_round_trips():
    for x in (0.1, 1 / 3, 1e-300, 2.0**60, -7.25):
        s = io.fmt_float(x)
        assert float(s) == x
    assert io.fmt_float(0.1) == "0.10000000000000001"
    assert io.fmt_float(float("nan")) == "nan" and io.fmt_float(-float("inf")) == "-inf"


def test_csv_text():
    text = io.csv_text(["a", "b", "c"], [{"a": 1, "b": 0.5, "c": "x,y"}, (True, None, np.int64(3))])
    assert text == 'a,b,c\n1,0.5,"x,y"\ntrue,,3\n'


def test_csv_file_bytes(tmp_path):
    p = io.write_csv(tmp_path / "sub" / "f.csv", ["x"], [[1.5], [2]])
    assert p.read_bytes() == b"x\n1.5\n2\n"


def test_json_stable_order_and_floats():
    obj = {"b": 1, "a": [0.1, np.float64(2.5), float("nan")], "c": {"z": True, "y": None}}
    text = io.json_text(obj)
    assert list(json.loads(text)) == ["b", "a", "c"]
    assert '"nan"' in text and "0.10000000000000001" in text
    assert json.loads(io.json_text(obj, indent=None))["a"][1] == 2.5
    assert io.ndjson_line({"t": 1}) == '{"t": 1}\n'


def test_json_file_identical(tmp_path):
    obj = {"x": [1, 2.0], "y": "é"}
    a = io.write_json(tmp_path / "a.json", obj).read_bytes()
    b = io.write_json(tmp_path / "b.json", obj).read_bytes()
    assert a == b and "é".encode() in a


def test_ndjson(tmp_path):
    p = io.write_ndjson(tmp_path / "x.ndjson", [{"a": 1}, {"a": 2}])
    assert p.read_text().splitlines() == ['{"a": 1}', '{"a": 2}']


def test_thread_count(monkeypatch):
    monkeypatch.setenv("PWL_THREADS", "3")
    assert io.thread_count() == 3
    for bad in ("0", "x"):
        monkeypatch.setenv("PWL_THREADS", bad)
        with pytest.raises(ValueError):
            io.thread_count()
    monkeypatch.delenv("PWL_THREADS")
    assert io.thread_count() >= 1


@pytest.mark.parametrize("threads", ["1", "4"])
def test_parallel_map_keeps_order(monkeypatch, threads):
    monkeypatch.setenv("PWL_THREADS", threads)
    assert io.parallel_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]
