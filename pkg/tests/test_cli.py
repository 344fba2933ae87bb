import json
import subprocess
import sys

import numpy as np
import pytest

from relind import harness
from relind.cli import main


@pytest.fixture
def data_csv(tmp_path):
    x = np.random.default_rng(1).normal(size=(40, 6))
    x[:, 1] = x[:, 0] + 0.3 * x[:, 1]
    path = tmp_path / "d.csv"
    harness.write_csv(path, x, header=[f"v{k}" for k in range(6)])
    return path


def test_test_text(data_csv, capsys):
    code = main(["test", "--input", str(data_csv), "--header", "--boot", "30"])
    out = capsys.readouterr().out
    assert code == 0
    assert "decision = reject" in out
    assert "(1,2)" in out


def test_test_json(data_csv, capsys):
    code = main(["test", "--input", str(data_csv), "--header", "--method", "asymptotic", "--json"])
    out = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out["n"] == 40 and out["p"] == 6
    assert out["reject"] is True
    assert out["exceedances"][0][:2] == [1, 2]


def test_do_not_reject_still_exit_zero(tmp_path, capsys):
    path = tmp_path / "i.csv"
    harness.write_csv(path, np.random.default_rng(2).normal(size=(40, 4)))
    code = main(["test", "--input", str(path), "--method", "asymptotic", "--delta", "0.5"])
    assert code == 0
    assert "do not reject" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["test", "--input", "x.csv", "--kernel", "pearson"],
    ["test", "--input", "x.csv", "--method", "asymptotic", "--variant", "abs"],
    ["test", "--input", "x.csv", "--direction", "classical"],
    ["simulate", "--reps", "0"],
    ["power", "--tau-grid", "0.3:0.1:0.1"],
    ["bogus"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 2


def test_data_errors(tmp_path, capsys):
    bad = tmp_path / "b.csv"
    bad.write_text("1,2\n3\n")
    assert main(["test", "--input", str(bad)]) == 3
    assert "line 2" in capsys.readouterr().err
    assert main(["test", "--input", str(tmp_path / "missing.csv")]) == 3
    spec = tmp_path / "s.txt"
    spec.write_text("n_p = 20x5\ncolour = blue\n")
    assert main(["table", "--spec", str(spec), "--out", str(tmp_path / "o.csv")]) == 3


def test_resource_cap(data_csv, capsys):
    code = main(["test", "--input", str(data_csv), "--header", "--kernel", "bkr-r",
                 "--variant", "nv", "--boot", "20"])
    assert code == 4
    assert "cap" in capsys.readouterr().err


def test_numeric_error(tmp_path, capsys):
    x = np.random.default_rng(3).normal(size=(30, 3))
    x[:, 2] = 1.0
    path = tmp_path / "c.csv"
    harness.write_csv(path, x)
    assert main(["test", "--input", str(path), "--method", "asymptotic"]) == 5
    assert "(1,3)" in capsys.readouterr().err.replace(" ", "")


def test_simulate_csv(tmp_path):
    out = tmp_path / "s.csv"
    code = main(["simulate", "--n", "25", "--p", "6", "--reps", "4", "--boot", "20",
                 "--variant", "abs", "--tau", "0.2", "--out", str(out)])
    assert code == 0
    header, row = out.read_text().splitlines()
    assert header == ",".join(harness.CSV_COLUMNS)
    fields = dict(zip(harness.CSV_COLUMNS, row.split(",")))
    assert fields["tau"] == "0.2" and fields["variant"] == "abs" and fields["wall_time_s"] == ""


def test_power_csv(tmp_path, capsys):
    code = main(["power", "--n", "25", "--p", "6", "--reps", "3", "--boot", "20",
                 "--variant", "nv", "--tau-grid", "0.1:0.3:0.1"])
    lines = capsys.readouterr().out.splitlines()
    assert code == 0
    assert [ln.split(",")[10] for ln in lines[1:]] == ["0.1", "0.2", "0.3"]


def test_module_entry_point(data_csv):
    proc = subprocess.run(
        [sys.executable, "-m", "relind", "test", "--input", str(data_csv), "--header",
         "--method", "asymptotic"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "decision" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "relind", "simulate", "--model", "m9"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
