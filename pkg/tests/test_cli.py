import json
import subprocess
import sys

import pytest

from qkmin import cli
from qkmin.oracle import generate_dataset


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_run_kmin_prop(capsys):
    code, out, _ = run(["run", "--algo", "kmin-prop", "--n", "1024", "--k", "8", "--dist", "permutation",
                        "--seed", "7", "--backend", "analytic", "--qc-mode", "exact"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert len(doc["found"]) == 8
    # the command seeds the dataset with the same seed
    assert set(doc["found"]) == generate_dataset(1024, "permutation", 7).smallest(8)
    assert doc["queries"] == sum(doc["phases"].values())


def test_run_grover(capsys):
    code, out, _ = run(["run", "--algo", "grover", "--n", "4", "--k", "1", "--seed", "1"], capsys)
    assert code == 0 and json.loads(out)["success"] is True


def test_run_missing_n(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["run", "--algo", "grover"])
    assert info.value.code == 1
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["run", "--algo", "grover", "--n", "0"],
    ["run", "--algo", "grover", "--n", "8", "--k", "9"],
    ["run", "--algo", "kmin-prop", "--n", "8", "--k", "0"],
    ["run", "--algo", "grover", "--n", "64", "--backend", "statevector", "--max-qubits", "4"],
    ["run", "--algo", "grover", "--n", "8", "--data", "/nonexistent.csv"],
])
def test_run_usage_errors(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 1 and "error" in err


def test_run_failure_exit(capsys):
    code, out, _ = run(["run", "--algo", "kmin-conv", "--n", "256", "--k", "4", "--strategy", "min",
                        "--retries", "0"], capsys)
    assert code == 2
    assert json.loads(out)["success"] is False


def test_run_trials_summary(capsys):
    code, out, _ = run(["run", "--algo", "fm", "--n", "256", "--trials", "5", "--seed", "3"], capsys)
    doc = json.loads(out)
    assert doc["summary"]["trials"] == 5 and len(doc["reports"]) == 5


def test_run_with_data_file(tmp_path, capsys):
    path = tmp_path / "d.csv"
    assert cli.main(["gen-data", "--n", "100", "--dist", "gaussian", "--seed", "4", "--out", str(path)]) == 0
    code, out, _ = run(["run", "--algo", "kmin-prop", "--n", "100", "--k", "3", "--data", str(path)], capsys)
    assert code == 0
    assert set(json.loads(out)["found"]) == generate_dataset(100, "gaussian", 4).smallest(3)
    code, _, err = run(["run", "--algo", "grover", "--n", "50", "--data", str(path)], capsys)
    assert code == 1 and "does not match" in err


def _write_cfg(path, **kw):
    doc = {"algorithms": ["kmin-prop", "kmin-conv"], "n_grid": [64, 128, 256, 512], "k_grid": [2],
           "trials": 4, "master_seed": 1, "output": str(path.parent / "out.csv")}
    doc.update(kw)
    path.write_text(json.dumps(doc))
    return path


def test_sweep_writes_csv_and_is_reproducible(tmp_path, capsys):
    cfg = _write_cfg(tmp_path / "s.cfg")
    assert cli.main(["sweep", str(cfg)]) == 0
    first = (tmp_path / "out.csv").read_bytes()
    assert cli.main(["sweep", str(cfg), "--threads", "3"]) == 0
    assert (tmp_path / "out.csv").read_bytes() == first
    assert first.startswith(b"algo,backend,dist,N,k")
    assert "kmin-conv" in capsys.readouterr().out


def test_sweep_json_stdout(tmp_path, capsys):
    cfg = _write_cfg(tmp_path / "s.cfg")
    code, out, err = run(["sweep", str(cfg), "--out", "-", "--format", "json"], capsys)
    assert code == 0
    assert len(json.loads(out)) == 8
    assert "algo" in err


@pytest.mark.parametrize("override, key", [({"n_grid": []}, "n_grid"), ({"k_grid": []}, "k_grid"),
                                           ({"trials": -1}, "trials")])
def test_sweep_bad_config(tmp_path, capsys, override, key):
    cfg = _write_cfg(tmp_path / "s.cfg", **override)
    code, _, err = run(["sweep", str(cfg)], capsys)
    assert code == 1 and key in err


def test_sweep_syntax_error_location(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text('{"algorithms": ["fm"],\n "n_grid": [4 4]}')
    code, _, err = run(["sweep", str(cfg)], capsys)
    assert code == 1 and "line 2" in err


def test_sweep_missing_config(capsys):
    code, _, err = run(["sweep", "no-such-config.cfg"], capsys)
    assert code == 1 and "not found" in err


def test_gen_data_stdout(capsys):
    code, out, _ = run(["gen-data", "--n", "4", "--dist", "adversarial"], capsys)
    assert code == 0
    assert out.splitlines() == ["index,value", "0,3.0", "1,2.0", "2,1.0", "3,0.0"]


def test_verify_quick(capsys):
    code, out, _ = run(["verify", "--quick"], capsys)
    assert code == 0
    assert out.count("PASS") == 4


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qkmin", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "verify" in proc.stdout
