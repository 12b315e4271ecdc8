import filecmp
import json
from pathlib import Path

import numpy as np
import pytest

from respfit.cli import main

CONFIG_TEXT = """\
alpha = 0.5
beta = 0.8
p0_alpha = 0.3
p0_beta = 0.5
sigma = 0.2
seed = 1
"""


def test_run_example_exit_zero(tmp_path, capsys):
    code = main(["run-example", "ex1", "--out", str(tmp_path / "run")])
    assert code == 0
    out = capsys.readouterr().out
    assert "ex1" in out
    assert "LM" in out and "TR" in out
    assert (tmp_path / "run" / "summary.json").exists()


def test_run_example_seed_and_sigma_overrides(tmp_path):
    code = main(
        ["run-example", "ex1", "--seed", "7", "--sigma", "0.1", "--out", str(tmp_path)]
    )
    assert code == 0
    with open(tmp_path / "summary.json") as fh:
        summary = json.load(fh)
    assert summary["seed"] == 7
    assert summary["sigma"] == 0.1


def test_unknown_example_is_config_error(tmp_path, capsys):
    code = main(["run-example", "ex7", "--out", str(tmp_path)])
    assert code == 1
    assert capsys.readouterr().err != ""


def test_bad_flag_is_config_error(capsys):
    assert main(["run-example", "ex1", "--bogus"]) == 1
    assert main(["no-such-command"]) == 1
    capsys.readouterr()


def test_run_config_file(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(CONFIG_TEXT + f"out_dir = {tmp_path / 'cfg_run'}\n")
    assert main(["run-config", str(cfg)]) == 0
    assert (tmp_path / "cfg_run" / "summary.json").exists()
    capsys.readouterr()


def test_run_config_default_out_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(CONFIG_TEXT + "name = demo\n")
    assert main(["run-config", str(cfg)]) == 0
    assert (tmp_path / "out_demo" / "summary.json").exists()
    capsys.readouterr()


def test_run_config_unknown_key_exit_one(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(CONFIG_TEXT + "frobnicate = yes\n")
    assert main(["run-config", str(cfg)]) == 1
    assert "frobnicate" in capsys.readouterr().err


def test_missing_config_file_exit_one(tmp_path, capsys):
    assert main(["run-config", str(tmp_path / "nope.cfg")]) == 1
    capsys.readouterr()


def test_solver_failure_exit_two(tmp_path, capsys):
    # an interval that is not a whole number of steps fails inside the solver
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(CONFIG_TEXT + f"t_end = 5.013\nout_dir = {tmp_path / 'r'}\n")
    assert main(["run-config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "solver failure" in err
    assert "generate_dataset" in err  # failing stage is named


def test_io_failure_exit_three(tmp_path, capsys):
    target = tmp_path / "blocked"
    target.write_text("a file where the run directory should go")
    code = main(["run-example", "ex1", "--out", str(target)])
    assert code == 3
    assert "i/o failure" in capsys.readouterr().err


def test_run_summary_and_determinism(tmp_path, capsys):
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert main(["run-summary", "--seeds", "1,2", "--out", str(a)]) == 0
    assert main(["run-summary", "--seeds", "1,2", "--out", str(b)]) == 0
    out = capsys.readouterr().out
    assert "example" in out  # aligned table is printed

    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_run_summary_bad_seed_list(tmp_path, capsys):
    assert main(["run-summary", "--seeds", "1,two", "--out", str(tmp_path)]) == 1
    assert "seeds" in capsys.readouterr().err


def test_console_script_is_wired():
    import importlib.metadata as md

    eps = md.entry_points()
    scripts = eps.select(group="console_scripts") if hasattr(eps, "select") else eps["console_scripts"]
    names = {ep.name: ep.value for ep in scripts}
    assert names.get("respfit") == "respfit.cli:main"
