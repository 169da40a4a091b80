import json
import subprocess
import sys

import pytest

CLI = [sys.executable, "-m", "hypermatch.cli"]


def run_cli(*args, check=True):
    proc = subprocess.run(CLI + list(args), capture_output=True, text=True)
    if check:
        assert proc.returncode == 0, proc.stderr
    return proc


def test_count_json():
    proc = run_cli("count", "--n", "9", "--r", "3")
    data = json.loads(proc.stdout)
    assert data["phi"] == "280"
    assert data["m"] == 84


def test_count_file(tmp_path):
    fixture = tmp_path / "h.txt"
    fixture.write_text("6 3 2\n1 2 3\n4 5 6\n")
    proc = run_cli("count", "--file", str(fixture))
    assert json.loads(proc.stdout)["phi"] == "1"


def test_weights_csv():
    proc = run_cli("weights", "--n", "6", "--r", "3")
    lines = proc.stdout.strip().splitlines()
    assert lines[0] == "rset,weight"
    assert len(lines) == 21
    assert all(line.endswith(",1") for line in lines[1:])


def test_trace_csv():
    proc = run_cli("trace", "--n", "6", "--r", "3", "--seed", "4")
    lines = proc.stdout.strip().splitlines()
    assert lines[0].startswith("step,edge,xi_num")
    # up to 20 - n/r steps plus header; fewer if Phi hit 0 and the run aborted
    assert 2 <= len(lines) <= 19


def test_config_error_exit_2():
    proc = run_cli("count", check=False)          # neither --file nor --n/--r
    assert proc.returncode == 2
    proc = run_cli("scan", "--n-list", "6", "--m-grid", "99",
                   "--trials", "5", check=False)
    assert proc.returncode == 2


def test_resource_guard_exit_3():
    proc = run_cli("tcuckler", "--n", "18", "--r", "3", check=False)
    assert proc.returncode == 3


def test_entropy_report():
    proc = run_cli("entropy", "--n", "6", "--r", "3")
    data = json.loads(proc.stdout)
    assert data["log_phi"] == pytest.approx(2.302585092994, rel=1e-9)
    assert data["gap"] == pytest.approx(data["log_phi"], rel=1e-9)


def test_tcuckler_report():
    proc = run_cli("tcuckler", "--n", "6", "--r", "3")
    data = json.loads(proc.stdout)
    assert data["mode"] == "exhaustive"
    assert len(data["table"]) == 60


def test_qs_verify_passes():
    proc = run_cli("qs-verify", "--pms", "3", "--pairs", "2", "--seed", "5")
    lines = proc.stdout.strip().splitlines()
    assert lines[0].startswith("f_index,v,Y,tau")
    assert len(lines) == 7


def test_manifest_replay_byte_identical(tmp_path):
    out1 = tmp_path / "scan1.csv"
    run_cli("scan", "--n-list", "6,9", "--m-grid", "10,20", "--trials", "30",
            "--seed", "11", "--out", str(out1))
    manifest = json.loads((tmp_path / "scan1.csv.manifest.json").read_text())
    assert manifest["schema_version"] == 1
    assert manifest["command"] == "scan"
    out2 = tmp_path / "scan2.csv"
    run_cli("scan", "--config", str(out1) + ".manifest.json",
            "--out", str(out2))
    assert out1.read_bytes() == out2.read_bytes()


def test_config_command_mismatch(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"schema_version": 1, "command": "scan",
                               "args": {}}))
    proc = run_cli("count", "--config", str(cfg), check=False)
    assert proc.returncode == 2
    cfg.write_text(json.dumps({"schema_version": 99, "args": {}}))
    proc = run_cli("count", "--config", str(cfg), "--n", "6", "--r", "3",
                   check=False)
    assert proc.returncode == 2


def test_workers_identical(tmp_path):
    outs = []
    for w, name in ((1, "a.json"), (8, "b.json")):
        out = tmp_path / name
        run_cli("hitting", "--n", "9", "--r", "3", "--trials", "40",
                "--seed", "3", "--workers", str(w), "--out", str(out))
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_verify_lemmas():
    proc = run_cli("verify-lemmas", "--seed", "1")
    data = json.loads(proc.stdout)
    assert data["all_pass"] is True
