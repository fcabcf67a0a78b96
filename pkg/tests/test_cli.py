import subprocess
import sys

import numpy as np
import pytest

from dotsaa.cli import main
from dotsaa.harness import ExperimentConfig, read_summary

SMALL = ["--set", "nx=31", "--set", "ny=31", "--set", "n_s=8", "--set", "n_d=8",
         "--set", "l_s=3", "--set", "l_d=3", "--set", "s=1", "--set", "max_iter=4"]


def test_synth_writes_data(tmp_path):
    assert main(["synth", "--out", str(tmp_path)] + SMALL) == 0
    D = np.loadtxt(tmp_path / "D_meas.csv", delimiter=",")
    assert D.shape == (8, 8)
    sm = read_summary(tmp_path / "summary.txt")
    assert float(sm["noise_rel"]) == pytest.approx(1e-3 * np.sqrt(0.1), rel=1e-9)
    assert ExperimentConfig.load(tmp_path / "config.txt").nx == 31


def test_run_with_config_file_and_env(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("mode = saa\nnx = 31\nny = 31\nn_s = 8\nn_d = 8\nl_s = 3\nl_d = 3\n"
                   "max_iter = 3\n")
    monkeypatch.setenv("DOTSAA_OUTPUT", str(tmp_path / "root"))
    assert main(["run", "--config", str(cfg), "--seed", "7"]) == 0
    out = tmp_path / "root" / "run_saa_seed7"
    assert (out / "history.csv").exists() and (out / "mu.pgm").exists()
    assert "saa:" in capsys.readouterr().out


def test_sweep_and_report(tmp_path, capsys):
    args = ["sweep", "--out", str(tmp_path), "--modes", "full,saa_replace", "--s", "1,2",
            "--trials", "2"] + SMALL
    assert main(args) == 0
    assert (tmp_path / "table.txt").exists()
    for name in ("full", "saa_replace_s1", "saa_replace_s2"):
        assert (tmp_path / name / "trial_001" / "summary.txt").exists()
    capsys.readouterr()
    assert main(["report", "--dir", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert text.count("saa_replace") == 2 and "full" in text


def test_report_empty_dir(tmp_path):
    assert main(["report", "--dir", str(tmp_path)]) == 1


def test_bad_override_is_an_error(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path), "--set", "mode=turbo"]) == 2
    assert "error" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "dotsaa", "--help"], capture_output=True,
                         text=True, check=True)
    for cmd in ("synth", "run", "sweep", "report"):
        assert cmd in res.stdout
