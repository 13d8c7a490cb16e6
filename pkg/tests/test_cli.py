import json
import subprocess
import sys

import pytest

from conftest import CONFIGS, DATA
from reflexia import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out


def run_to_file(tmp_path, command, config, *extra):
    out = tmp_path / f"{command}.json"
    code = cli.main([command, "--config", str(config), "--out", str(out), *extra])
    return code, json.loads(out.read_text()), out


def make_config(tmp_path, name, **overrides):
    base = json.loads((CONFIGS / f"{name}.json").read_text())
    for key in ("algebra", "involution", "k_basis", "h_matrix"):
        if key in base:
            base[key] = str((CONFIGS / base[key]).resolve())
    base.update(overrides)
    path = tmp_path / f"{name}_custom.json"
    path.write_text(json.dumps(base))
    return path


@pytest.mark.parametrize("name,code,flags", [
    ("so3", 0, (True, True, True)),
    ("sl2", 0, (True, True, True)),
    ("heisenberg_central", 1, (True, True, False)),
    ("heisenberg_nongenerating", 1, (True, False, True)),
    ("so3_plus_r", 1, (True, False, True)),
    # Ad of the corrupted h is a rotation with no -1 eigenspace, so H2 goes too
    ("so3_corrupted_h", 1, (False, False, True)),
])
def test_analyze(tmp_path, name, code, flags):
    rc, rep, _ = run_to_file(tmp_path, "analyze", CONFIGS / f"{name}.json")
    assert rc == code and rep["exit_code"] == code
    res = rep["result"]
    assert (res["h1"], res["h2"], res["h3"]) == flags


def test_verify(tmp_path):
    rc, rep, _ = run_to_file(tmp_path, "verify", CONFIGS / "so3.json")
    assert rc == 0 and rep["result"]["passed"]
    rc, rep, _ = run_to_file(tmp_path, "verify", CONFIGS / "so3_corrupted_h.json")
    assert rc == 1 and rep["result"]["residuals"]["A2"] > 1e-2
    assert not rep["result"]["model_invariants_passed"]


def test_verify_skip_rate(tmp_path):
    rc, rep, _ = run_to_file(tmp_path, "verify", CONFIGS / "so3_wide.json")
    assert rc == 1 and rep["error"].startswith("SkipRateExceeded")
    assert rep["result"]["skip_rate"] > 0.5


def test_roundtrip(tmp_path):
    rc, rep, _ = run_to_file(tmp_path, "roundtrip", CONFIGS / "sl2.json")
    res = rep["result"]
    assert rc == 0 and res["reconstruction"]["gx_dim"] == 3 and res["gx_dim_stable"]
    assert res["comparison"]["match"]
    for name in ("so3_plus_r", "so3_flat_factor"):
        rc, rep, _ = run_to_file(tmp_path, "roundtrip", CONFIGS / f"{name}.json")
        assert rc == 1 and rep["result"]["reconstruction"]["transitive"] is False


def test_flows_even_field_fails(tmp_path):
    rc, rep, _ = run_to_file(tmp_path, "flows", CONFIGS / "so3_even_field.json")
    assert rc == 1 and rep["error"].startswith("ParityViolated")


def test_flows_small(tmp_path):
    cfg = make_config(tmp_path, "sl2", n_probes=3, flow_times=[0.05])
    rc, rep, _ = run_to_file(tmp_path, "flows", cfg)
    assert rc == 0
    fields = rep["result"]["fields"]
    assert len(fields) == 2 and all(f["max_residual"] <= 1e-5 for f in fields)


def test_input_errors(tmp_path, capsys):
    rc, out = run(capsys, "analyze", "--config", str(tmp_path / "nope.json"))
    assert rc == 2 and json.loads(out.out)["exit_code"] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(capsys, "verify", "--config", str(bad))[0] == 2
    cfg = make_config(tmp_path, "so3", tolerance=0)
    assert run(capsys, "verify", "--config", str(cfg))[0] == 2
    # a 3x3 h cannot act on the 2x2 matrices of sl(2)
    cfg = make_config(tmp_path, "so3", algebra=str(DATA / "algebras" / "sl2.json"))
    assert run(capsys, "analyze", "--config", str(cfg))[0] == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["explode", "--config", str(cfg)])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["analyze"])
    assert info.value.code == 2


def test_threads_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("REFLEXIA_THREADS", "1")
    assert run(capsys, "analyze", "--config", str(CONFIGS / "so3.json"))[0] == 0
    monkeypatch.setenv("REFLEXIA_THREADS", "many")
    assert run(capsys, "analyze", "--config", str(CONFIGS / "so3.json"))[0] == 2


def test_report_embeds_config_and_seed(tmp_path):
    _, rep, _ = run_to_file(tmp_path, "verify", CONFIGS / "sl2.json", "--seed", "7")
    cfg = rep["config"]
    assert cfg["seed"] == 7 and rep["result"]["seed"] == 7
    for key in ("tolerance", "trust_radius", "fd_step", "jacobian_step", "n_samples"):
        assert key in cfg


def test_config_out_field(tmp_path, capsys):
    cfg = make_config(tmp_path, "so3", out="reports/analyze.json")
    rc, out = run(capsys, "analyze", "--config", str(cfg))
    assert rc == 0 and out.out == ""
    assert json.loads((tmp_path / "reports" / "analyze.json").read_text())["passed"]


@pytest.mark.parametrize("command", ["analyze", "verify", "roundtrip"])
def test_deterministic_bytes(tmp_path, command):
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    _, _, pa = run_to_file(a, command, CONFIGS / "so3.json")
    _, _, pb = run_to_file(b, command, CONFIGS / "so3.json")
    assert pa.read_bytes() == pb.read_bytes()


def test_console_script_subprocess(tmp_path):
    out = tmp_path / "r.json"
    proc = subprocess.run([sys.executable, "-m", "reflexia.cli", "analyze", "--config",
                           str(CONFIGS / "heisenberg_central.json"), "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert "FAIL" in proc.stderr
    assert json.loads(out.read_text())["result"]["h3"] is False
