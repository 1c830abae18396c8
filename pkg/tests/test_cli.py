import csv
import json
import os

import pytest

from conftest import reference_problem
from fracplap.cli import EXIT_ERROR, EXIT_FAIL, EXIT_OK, EXIT_REFUSED, main
from fracplap.config import config_from_dict


def write_cfg(tmp_path, **top):
    raw = {"problem": reference_problem(128).to_dict(), **top}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return path


def run_cli(tmp_path, path, *extra, out="out"):
    return main(["--config", str(path), "--out", str(tmp_path / out), "--quiet", *extra])


def header(path):
    with open(path) as fh:
        return next(csv.reader(fh))


def test_verify_pass_writes_all_files(tmp_path):
    path = write_cfg(tmp_path, mode="verify", theorems=["T1_1", "T1_2"], n_required=2, seed=1)
    assert run_cli(tmp_path, path) == EXIT_OK
    out = tmp_path / "out"
    assert header(out / "solutions.csv") == ["solution", "t", "u", "Lu"]
    assert header(out / "curves.csv") == ["curve", "run", "x", "y"]
    assert header(out / "summary.csv")[:2] == ["theorem_id", "pass"]
    report = json.loads((out / "report.json").read_text())
    assert [r["theorem_id"] for r in report["reports"]] == ["T1_1", "T1_2"]
    echoed = config_from_dict(report["config_echo"])
    assert echoed == config_from_dict(json.loads(path.read_text()))


def test_verify_fail_exit_code(tmp_path):
    path = write_cfg(tmp_path, mode="verify", theorems=["T1_2"], n_required=3)
    assert run_cli(tmp_path, path) == EXIT_FAIL


def test_refused_exit_code(tmp_path):
    raw = {"problem": {"alpha": 0.75, "p": 2, "N": 64,
                       "nonlinearity": {"family": "power_odd", "r": 1.5, "b": 0.0}},
           "mode": "verify", "theorems": ["T1_1"]}
    path = tmp_path / "zero.json"
    path.write_text(json.dumps(raw))
    assert run_cli(tmp_path, path) == EXIT_REFUSED
    rep = json.loads((tmp_path / "out" / "report.json").read_text())["reports"][0]
    assert rep["refused"] and rep["refusal"]["hypothesis"] == "H2"


def test_invalid_config_exits_one(tmp_path, caplog):
    raw = {"problem": {"alpha": 0.4, "p": 2, "N": 64}}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(raw))
    assert run_cli(tmp_path, path) == EXIT_ERROR
    assert "problem.alpha" in caplog.text
    path.write_text("{")
    assert run_cli(tmp_path, path) == EXIT_ERROR
    assert run_cli(tmp_path, tmp_path / "missing.json") == EXIT_ERROR


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable_output(tmp_path):
    path = write_cfg(tmp_path, mode="solve")
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    try:
        assert run_cli(tmp_path, path, out="locked/x") == EXIT_ERROR
    finally:
        locked.chmod(0o700)


def test_output_path_is_a_file(tmp_path):
    path = write_cfg(tmp_path, mode="solve")
    (tmp_path / "blocker").write_text("")
    assert run_cli(tmp_path, path, out="blocker/x") == EXIT_ERROR


def test_unknown_key_warning(tmp_path, caplog):
    path = write_cfg(tmp_path, mode="embedding", embedding_samples=20, colour="red")
    assert run_cli(tmp_path, path) == EXIT_OK
    assert "colour" in caplog.text


def test_mode_override_and_embedding(tmp_path):
    path = write_cfg(tmp_path, mode="solve", embedding_samples=30)
    assert run_cli(tmp_path, path, "--mode", "embedding") == EXIT_OK
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["mode"] == "embedding" and report["embedding"]["samples"] == 30


def test_solve_zero_rhs(tmp_path):
    raw = {"problem": {"alpha": 0.75, "p": 2, "N": 64,
                       "nonlinearity": {"family": "power_odd", "r": 1.5, "b": 0.0}},
           "mode": "solve"}
    path = tmp_path / "zero.json"
    path.write_text(json.dumps(raw))
    assert run_cli(tmp_path, path) == EXIT_OK
    with open(tmp_path / "out" / "solutions.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 65 and max(abs(float(r["u"])) for r in rows) < 1e-10


def test_multistart_mode(tmp_path):
    path = write_cfg(tmp_path, mode="multistart", n_seeds=2)
    assert run_cli(tmp_path, path) == EXIT_OK
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert len(report["results"]) >= 2


def test_sweep_lists_invalid_combinations(tmp_path):
    path = write_cfg(tmp_path, mode="sweep", sweep={"alpha": [0.4, 0.75], "r": [1.5]})
    assert run_cli(tmp_path, path) == EXIT_OK
    with open(tmp_path / "out" / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["status"] for r in rows] == ["invalid", "pass"]


def test_dump_operator(tmp_path):
    path = write_cfg(tmp_path, mode="embedding", embedding_samples=10)
    assert run_cli(tmp_path, path, "--dump-operator") == EXIT_OK
    with open(tmp_path / "out" / "operator.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) >= 129


def test_thread_count_does_not_change_output(tmp_path, monkeypatch):
    path = write_cfg(tmp_path, mode="multistart", n_seeds=3)
    monkeypatch.setenv("FRACPLAP_THREADS", "1")
    assert run_cli(tmp_path, path, out="one") == EXIT_OK
    monkeypatch.setenv("FRACPLAP_THREADS", "3")
    assert run_cli(tmp_path, path, out="three") == EXIT_OK
    assert ((tmp_path / "one" / "solutions.csv").read_bytes()
            == (tmp_path / "three" / "solutions.csv").read_bytes())
