import json

import pytest

from rail3d.cli import EXIT_CONTRACT, EXIT_OK, EXIT_SELFTEST, EXIT_SOLVER, main
from rail3d.errors import SingularityError
from rail3d.snapshot import load


def test_run_writes_files_and_snapshot(tmp_path, capsys):
    out = tmp_path / "run"
    snap = tmp_path / "u.tuck3"
    code = main(["run", "--problem", "advdiff", "--n", "8", "--tf", "0.1", "--lambda", "1.0",
                 "--out", str(out), "--snapshot", str(snap)])
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["problem"] == "advdiff" and (out / "history.csv").exists()
    assert load(snap).shape == (8, 8, 8)


def test_contract_errors_exit_2(capsys):
    assert main(["run", "--problem", "advdiff", "--n", "7"]) == EXIT_CONTRACT
    assert main(["converge", "--problem", "advdiff", "--n", "8", "--lambdas", "0.5,x"]) == EXIT_CONTRACT
    assert main(["converge", "--problem", "advdiff", "--n", "8", "--lambdas", "0.5,1"]) == EXIT_CONTRACT
    assert "contract error" in capsys.readouterr().err


def test_thread_env_validated(monkeypatch):
    monkeypatch.setenv("RAIL3D_THREADS", "zero")
    assert main(["run", "--problem", "advdiff", "--n", "8", "--tf", "0.05"]) == EXIT_CONTRACT
    monkeypatch.setenv("RAIL3D_THREADS", "2")
    assert main(["run", "--problem", "advdiff", "--n", "8", "--tf", "0.05"]) == EXIT_OK


def test_solver_failure_exit_3(monkeypatch):
    import rail3d.bench as bench

    def boom(*args, **kwargs):
        raise SingularityError("forced", (0, 0))

    monkeypatch.setattr(bench, "rail_step", boom)
    assert main(["run", "--problem", "advdiff", "--n", "8", "--tf", "0.05"]) == EXIT_SOLVER


def test_selftest_exit_codes(monkeypatch, capsys):
    assert main(["selftest"]) == EXIT_OK
    assert capsys.readouterr().out.count("PASS") == 9
    import rail3d.selftest as st

    monkeypatch.setattr(st, "run_all", lambda seed=0, stream=None: 2)
    assert main(["selftest"]) == EXIT_SELFTEST


def test_unknown_choices_rejected():
    with pytest.raises(SystemExit):
        main(["run", "--problem", "nope"])
