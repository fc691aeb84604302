"""Command-line harness: subcommands, CSV/report formats, exit codes,
byte-level determinism."""

import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from macroqkd.cli import config_from_dict, main, report_text
from macroqkd.protocol import run_session

BASELINE_P_ERR = 1.891139854477733e-08
P_ERR_HALF_LOSS = 0.04860510117992879
EVE_HALF_PROBABILITY = 0.9513948988200712


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(x) for x in row.split(",")] for row in lines[1:]])
    return header, data


# --------------------------------------------------------------------- figures


def test_fig1_no_loss(tmp_path):
    out = tmp_path / "fig1.csv"
    assert main(["fig1", "--loss", "0", "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert header == ["n", "pdf_correct_bit1", "pdf_correct_bit0", "pdf_incorrect"]
    n = data[:, 0]
    dn = n[1] - n[0]
    assert n[np.argmax(data[:, 1])] == pytest.approx(2460.0, abs=dn)
    assert n[np.argmax(data[:, 2])] == pytest.approx(-2460.0, abs=dn)
    assert n[np.argmax(data[:, 3])] == pytest.approx(0.0, abs=dn)
    for col in (1, 2, 3):
        assert np.trapezoid(data[:, col], n) == pytest.approx(1.0, abs=1e-6)


def test_fig1_half_loss_peaks(tmp_path):
    out = tmp_path / "fig1.csv"
    assert main(["fig1", "--loss", "0.5", "--out", str(out)]) == 0
    _, data = read_csv(out)
    n = data[:, 0]
    dn = n[1] - n[0]
    assert n[np.argmax(data[:, 1])] == pytest.approx(1230.0, abs=dn)
    assert n[np.argmax(data[:, 2])] == pytest.approx(-1230.0, abs=dn)
    # broadened: lower peak density than the lossless curve
    full = tmp_path / "fig1_full.csv"
    main(["fig1", "--loss", "0", "--out", str(full)])
    _, data0 = read_csv(full)
    assert max(data[:, 1]) < max(data0[:, 1])


def test_fig2_anchors_and_monotonicity(tmp_path):
    out = tmp_path / "fig2.csv"
    assert main(["fig2", "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert header == ["eta", "p_err"]
    assert data[0, 0] == 0.0
    assert data[0, 1] == pytest.approx(BASELINE_P_ERR, rel=1e-9)
    mid = data[np.isclose(data[:, 0], 0.5)]
    assert mid[0, 1] == pytest.approx(P_ERR_HALF_LOSS, rel=1e-9)
    assert np.all(np.diff(data[:, 1]) > 0)


def test_fig3_anchors(tmp_path):
    out = tmp_path / "fig3.csv"
    assert main(["fig3", "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert header == ["eta", "p_eta"]
    assert data[0, 1] == 0.5
    assert data[np.isclose(data[:, 0], 0.5)][0, 1] == pytest.approx(
        EVE_HALF_PROBABILITY, rel=1e-9
    )
    assert data[-1, 1] == pytest.approx(1.0 - BASELINE_P_ERR, rel=1e-12)


def test_fig_csv_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["fig2", "--grid", "0:0.8:17", "--out", str(a)])
    main(["fig2", "--grid", "0:0.8:17", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()  # LF endings


# ------------------------------------------------------------------------- run


def run_args(*extra: str) -> list[str]:
    return [
        "run",
        "--pulses", "2000",
        "--seed", "42",
        "--loss", "0.2",
        "--detector-nen", "0",
        *extra,
    ]


def test_run_report_roundtrip(tmp_path):
    out = tmp_path / "report.json"
    assert main(run_args("--out", str(out))) == 0
    payload = json.loads(out.read_text())
    assert payload["config"]["seed"] == 42
    assert payload["report"]["pulses_sent"] == 2000
    # parsing the echoed config reproduces the run exactly
    config = config_from_dict(payload["config"])
    report = run_session(config)
    assert report_text(config, report, "report") == out.read_text()


def test_run_byte_identical_reports(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(run_args("--out", str(a)))
    main(run_args("--out", str(b)))
    assert a.read_bytes() == b.read_bytes()


def test_run_csv_format(tmp_path):
    out = tmp_path / "report.csv"
    assert main(run_args("--format", "csv", "--out", str(out))) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "key,value"
    keys = {line.split(",")[0] for line in lines[1:]}
    assert "report.estimated_error_rate" in keys
    assert "config.seed" in keys


def test_run_attack_flag(tmp_path):
    out = tmp_path / "r.json"
    assert main(run_args("--attack", "intercept_resend", "--out", str(out))) == 0
    payload = json.loads(out.read_text())
    assert payload["report"]["detection_verdict"] == "eavesdropper_detected"
    assert payload["report"]["estimated_error_rate"] == pytest.approx(0.25, abs=0.1)


# ------------------------------------------------------------------ exit codes


def test_exit_code_config_errors(capsys):
    assert main(["run", "--loss", "1.5", "--pulses", "0"]) == 1
    err = capsys.readouterr().err
    # every offending field is listed
    assert "channel_loss" in err and "num_pulses" in err
    assert main(["run", "--attack", "nonsense"]) == 1
    assert main(["fig2", "--grid", "0.9:0:5"]) == 1
    assert main(["run", "--attack", "beamsplitter_tap"]) == 1  # missing tap fraction
    assert main(["nonexistent-command"]) == 1


def test_exit_code_io_error(tmp_path):
    missing_dir = tmp_path / "no" / "such" / "dir" / "x.csv"
    assert main(["fig2", "--out", str(missing_dir)]) == 3


def test_exit_code_validation(tmp_path):
    out = tmp_path / "validate.csv"
    assert main(["validate", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("r,alpha_v_sq,alpha_h_sq,eta,basis,quantity")
    assert len(lines) == 1 + 3 * 3 * 3 * 2 * 2 * 2
    assert all(line.endswith(",pass") for line in lines[1:])
    # an absurdly tight tolerance must flip the exit code to 2
    assert main(["validate", "--tol", "1e-18", "--out", str(out)]) == 2


def test_console_entry_point(tmp_path):
    out = tmp_path / "fig3.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "macroqkd", "fig3", "--grid", "0:1:3", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert out.read_text().splitlines()[0] == "eta,p_eta"
