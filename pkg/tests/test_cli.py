import numpy as np
import pytest

from expsums.cli import main

REFINE_CONFIG = """
name = "cli-refine"

[model]
kind = "classical"

[grid]
x0 = 0.0
h = 1.0
count = 20
T = 3.0

[truth]
terms = [
  { c = "1.2", alpha = "-0.45" },
  { c = "-0.8", alpha = "0.2" },
]

[solver]
kind = "varpro"
L = 5
epsilon = 1e-3
rank_mode = "relative"

[solver.varpro]
max_iterations = 30

[noise]
sigma = 0.005
seed = 3
"""


@pytest.fixture
def refine_config(tmp_path):
    path = tmp_path / "refine.toml"
    path.write_text(REFINE_CONFIG, encoding="utf-8")
    return path


def test_run_command(tmp_path, refine_config, capsys):
    rc = main(["run", "--config", str(refine_config), "--out", str(tmp_path / "out")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "cli-refine: ok" in out
    assert (tmp_path / "out" / "cli-refine.report.txt").exists()
    assert (tmp_path / "out" / "cli-refine.samples.csv").exists()
    assert (tmp_path / "out" / "cli-refine.trace.csv").exists()


def test_trace_csv_columns(tmp_path, refine_config):
    main(["refine", "--config", str(refine_config), "--out", str(tmp_path / "out")])
    header, *rows = (
        (tmp_path / "out" / "cli-refine.trace.csv").read_text().strip().splitlines()
    )
    assert header == "iteration,objective,damping,step_norm"
    objectives = [float(r.split(",")[1]) for r in rows]
    assert all(b <= a for a, b in zip(objectives, objectives[1:]))


def test_refine_requires_varpro_solver(tmp_path):
    cfg = tmp_path / "direct.toml"
    cfg.write_text(
        REFINE_CONFIG.replace('kind = "varpro"', 'kind = "direct"')
        .replace("L = 5", "M = 2"),
        encoding="utf-8",
    )
    rc = main(["refine", "--config", str(cfg)])
    assert rc == 2


def test_preset_command(tmp_path, capsys):
    rc = main(["preset", "ex-table3", "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "ex-table3-esprit" in out and "ex-table3-direct" in out
    assert (tmp_path / "ex-table3-esprit.report.txt").exists()
    assert (tmp_path / "ex-table3-direct.report.txt").exists()


def test_preset_noise_override(tmp_path):
    rc = main(["preset", "ex-gauss", "--noise-sigma", "0.01", "--seed", "9",
               "--out", str(tmp_path)])
    assert rc == 0
    text = (tmp_path / "ex-gauss.report.txt").read_text()
    assert "sigma = 0.01" in text
    assert "seed = 9" in text


def test_unknown_preset_exit_code():
    assert main(["preset", "does-not-exist"]) == 2


def test_missing_config_exit_code():
    assert main(["run", "--config", "/nonexistent/x.toml"]) == 2


def test_solver_failure_exit_code(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text(
        """
name = "rank-deficient"
[model]
kind = "classical"
[grid]
x0 = 0.0
h = 1.0
count = 4
T = 3.0
[truth]
terms = [ { c = "1.0", alpha = "0.0" } ]
[solver]
kind = "direct"
M = 2
""",
        encoding="utf-8",
    )
    assert main(["run", "--config", str(cfg)]) == 1
