import json
import os
from pathlib import Path

import pytest

from majorana_ladder.cli import main


def run(args, tmp_path, name):
    out = tmp_path / name
    code = main(args + ["--out", str(out)])
    return code, out


def test_rabi_outputs_and_manifest(tmp_path):
    code, out = run(["rabi"], tmp_path, "rabi")
    assert code == 0
    assert (out / "rabi.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["format_version"] == "1"
    assert manifest["experiment"] == "rabi"
    assert "rabi.csv" in manifest["outputs"]
    assert manifest["summary"]["relative_error"] < 0.01
    header = (out / "rabi.csv").read_text().splitlines()[0]
    assert header.split(",")[:4] == ["scheme", "t", "pop_initial", "pop_target"]


def test_rerun_is_byte_identical(tmp_path):
    _, out1 = run(["parity"], tmp_path, "p1")
    _, out2 = run(["parity"], tmp_path, "p2")
    assert (out1 / "parity.csv").read_bytes() == (out2 / "parity.csv").read_bytes()


def test_manifest_checksums_match(tmp_path):
    import hashlib

    _, out = run(["micromotion"], tmp_path, "mm")
    manifest = json.loads((out / "manifest.json").read_text())
    for name, digest in manifest["outputs"].items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest


def test_rgscan_with_config_and_threshold_flag(tmp_path):
    cfg = tmp_path / "scan.ini"
    cfg.write_text("[rg]\nu0_num = 4\nalpha_num = 4\nl_max = 400\n")
    code, out = run(["rgscan", "--config", str(cfg), "--threshold", "5.0"], tmp_path, "scan")
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["rg"]["threshold"] == 5.0
    rows = (out / "rgscan.csv").read_text().splitlines()
    assert rows[0] == "U0,alpha,nu,outcome,l_star,xi_inv,K_minus_bare"
    assert len(rows) == 17


def test_json_config_and_json_format(tmp_path):
    cfg = tmp_path / "scan.json"
    cfg.write_text(json.dumps({"rg": {"u0_num": 3, "alpha_num": 3, "l_max": 400}}))
    code, out = run(
        ["rgscan", "--config", str(cfg), "--format", "json"], tmp_path, "scanj"
    )
    assert code == 0
    data = json.loads((out / "rgscan.json").read_text())
    assert data["format_version"] == "1"
    assert len(data["rows"]) == 9


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[rg]\nbogus_knob = 3\n")
    code, _ = run(["rgscan", "--config", str(cfg)], tmp_path, "bad")
    assert code == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert "bogus_knob" in err["error"]["message"]


def test_unknown_section_rejected(tmp_path, capsys):
    cfg = tmp_path / "bad2.ini"
    cfg.write_text("[nonsense]\nx = 1\n")
    code, _ = run(["parity", "--config", str(cfg)], tmp_path, "bad2")
    assert code == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert "nonsense" in err["error"]["message"]


def test_infeasible_size_rejected(tmp_path, capsys):
    cfg = tmp_path / "huge.ini"
    cfg.write_text("[model]\nl = 30\n[gaps]\nn_particles = 30\n")
    code, _ = run(["gaps", "--config", str(cfg)], tmp_path, "huge")
    assert code == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert "dimension" in err["error"]["message"]


def test_outdir_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("MAJORANA_LADDER_OUTDIR", str(tmp_path / "envout"))
    monkeypatch.chdir(tmp_path)
    assert main(["micromotion"]) == 0
    assert (tmp_path / "envout" / "micromotion" / "micromotion.csv").exists()


def test_gaps_threads_match_serial(tmp_path):
    cfg = tmp_path / "g.ini"
    cfg.write_text(
        "[model]\nu0 = -1.2\nl = 4\n[gaps]\nn_particles = 2\n"
        "alpha_min = 0.3\nalpha_max = 0.7\nalpha_num = 3\n"
    )
    _, out1 = run(["gaps", "--config", str(cfg)], tmp_path, "g1")
    _, out2 = run(["gaps", "--config", str(cfg), "--threads", "3"], tmp_path, "g2")
    assert (out1 / "gaps.csv").read_bytes() == (out2 / "gaps.csv").read_bytes()


def test_entspec_and_correlations_small(tmp_path):
    cfg = tmp_path / "s.ini"
    cfg.write_text(
        "[model]\nu0 = -1.5\nl = 6\n[sector]\nn_particles = 3\nparity = -1\n"
        "alpha = 0.5\ncut_rung = 3\n"
    )
    code, out = run(["entspec", "--config", str(cfg)], tmp_path, "es")
    assert code == 0
    rows = (out / "entspec.csv").read_text().splitlines()
    assert rows[0].startswith("xi,charge_left,parity_left")
    code, out = run(["correlations", "--config", str(cfg)], tmp_path, "co")
    assert code == 0
    assert len((out / "correlations.csv").read_text().splitlines()) == 7


def test_impure_pulse_agreement_summary(tmp_path):
    cfg = tmp_path / "imp.ini"
    cfg.write_text("[run]\nn_periods = 100\n")
    code, out = run(["impure-pulse", "--config", str(cfg)], tmp_path, "imp")
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    for key, val in manifest["summary"].items():
        assert val < 0.1, key


def test_kitaev_validate_passes(tmp_path):
    code, out = run(["kitaev-validate"], tmp_path, "kv")
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["summary"]["all_passed"] is True


def test_continuous_drive_summary(tmp_path):
    cfg = tmp_path / "cd.ini"
    cfg.write_text("[run]\nn_periods = 5\n")
    code, out = run(["continuous-drive", "--config", str(cfg)], tmp_path, "cd")
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["summary"]["first_order_correction_norm"] < 1e-8
    assert manifest["summary"]["kick_operator_residual"] < 0.01


def test_missing_config_file_errors(tmp_path, capsys):
    code, _ = run(["rabi", "--config", str(tmp_path / "nope.ini")], tmp_path, "x")
    assert code == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"]["type"] == "ConfigError"
