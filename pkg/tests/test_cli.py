import json

import pytest

from pwl.cli import exit_time_rows, main
from pwl.effective import exit_time_dp


def test_simulate_dump(tmp_path, capsys):
    dump = tmp_path / "walk.ndjson"
    assert main(["simulate", "--lattice", "tri", "--steps", "50", "--seed", "3", "--dump-path", str(dump)]) == 0
    recs = [json.loads(x) for x in dump.read_text().splitlines()]
    assert len(recs) == 51 and list(recs[0]) == ["t", "a", "b", "W_t", "H_t"]
    assert recs[0] == {"t": 0, "a": 0, "b": 0, "W_t": 1, "H_t": 1}
    summary = json.loads(capsys.readouterr().out)
    assert summary["steps"] == 50 and summary["end"] == [recs[-1]["a"], recs[-1]["b"]]


def test_exit_times_csv(tmp_path):
    assert main(["exit-times", "--L", "4", "--samples", "5000", "--seed", "1", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "exit_times_L4.csv").read_text().splitlines()
    assert lines[0] == "L,m,p_exact,p_empirical,stderr"
    assert lines[1].startswith("4,1,1.0,1.0,")


def test_exit_time_rows_agree_with_dp():
    rows = exit_time_rows(6, 20000, 2)
    d = exit_time_dp(6, 100)
    for r in rows[:20]:
        assert r["p_exact"] == pytest.approx(d.survival(r["m"]), abs=1e-12)
        assert abs(r["p_empirical"] - r["p_exact"]) < 5 * r["stderr"] + 1e-3
    assert rows[-1]["p_exact"] <= 1e-4
    big = exit_time_rows(70, 500, 2)
    assert big[0]["p_exact"] is None and len(big) >= int(70**1.5)


def test_experiment_and_report(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_samples": 10, "k_range": [10, 100, 1000], "seed": 2}))
    out = tmp_path / "out"
    code = main(["experiment", "lemma3", "--config", str(cfg), "--out", str(out)])
    assert code in (0, 1)
    assert (out / "lemma3.csv").exists() and (out / "lemma3.json").exists()
    rep = json.loads((out / "lemma3.json").read_text())
    assert code == (0 if rep["passed"] else 1)
    assert main(["report", "--dir", str(out)]) == code
    assert "1 experiments" in capsys.readouterr().out


def test_failing_report_exits_one(tmp_path):
    (tmp_path / "x.json").write_text(json.dumps({"experiment": "lemma2", "status": "fail", "checks": []}))
    (tmp_path / "y.json").write_text(json.dumps({"experiment": "lemma3", "status": "pass", "checks": []}))
    assert main(["report", "--dir", str(tmp_path)]) == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["experiment", "nope"],
        ["simulate", "--lattice", "hex", "--steps", "3", "--seed", "1"],
        ["simulate", "--steps", "3"],
        ["exit-times", "--L", "0", "--samples", "10", "--seed", "1", "--out", "x"],
        [],
    ],
)
def test_usage_errors_exit_two(argv):
    with pytest.raises(SystemExit) as e:
        raise SystemExit(main(argv))
    assert e.value.code == 2


def test_invalid_config_exits_two(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"n_samples": 0, "lattice": "hex"}))
    assert main(["experiment", "lemma1", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "n_samples" in err and "lattice" in err
    (tmp_path / "broken.json").write_text("{")
    assert main(["experiment", "lemma1", "--config", str(tmp_path / "broken.json")]) == 2


def test_report_without_reports(tmp_path):
    assert main(["report", "--dir", str(tmp_path)]) == 2
    assert main(["report", "--dir", str(tmp_path / "missing")]) == 2


def test_bad_thread_env(monkeypatch, tmp_path):
    monkeypatch.setenv("PWL_THREADS", "zero")
    assert main(["report", "--dir", str(tmp_path)]) == 2
