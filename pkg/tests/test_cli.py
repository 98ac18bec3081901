"""Scenario runner: config parsing, outputs, exit codes, determinism."""

import json
import subprocess
import sys

import pytest

from pdclab.cli import ComparisonRow, Scenario, main, parse_config
from pdclab.errors import ConfigError

GOOD = """
# comment lines and blank lines are ignored
name = demo
tasks = occupation, gap

params.g = 0.1
params.lambda_a = 0.01
params.gamma_a = 10.0
params.gamma_b = 1.0   # trailing comment

sweep.parameter = g
sweep.values = 0.02, 0.05, 0.1
truncation.signal_dim = 20
tolerances.rel = 1e-7
"""


def write(tmp_path, text, name="scenario.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parse_config_round_trip(tmp_path):
    sc = parse_config(write(tmp_path, GOOD))
    assert sc.name == "demo"
    assert sc.tasks == ["occupation", "gap"]
    assert sc.params.g == 0.1
    assert sc.params.gamma_b == 1.0
    assert sc.sweep == ("g", (0.02, 0.05, 0.1))
    assert sc.signal_dim == 20
    assert sc.rel_tol == 1e-7
    # untouched keys fall back to defaults
    assert sc.pump_dim == 15
    assert sc.floor == 1e-12


def test_parse_config_unknown_key_strict(tmp_path):
    path = write(tmp_path, GOOD + "params.typo = 1\n")
    with pytest.raises(ConfigError, match="unknown config keys"):
        parse_config(path)
    sc = parse_config(path, strict=False)
    assert sc.name == "demo"


def test_parse_config_missing_required(tmp_path):
    path = write(tmp_path, "tasks = occupation\nparams.g = 0.1\n")
    with pytest.raises(ConfigError, match="params.lambda_a"):
        parse_config(path)


def test_parse_config_empty_tasks(tmp_path):
    path = write(
        tmp_path,
        "params.g = 0.1\nparams.lambda_a = 1\nparams.gamma_a = 1\nparams.gamma_b = 1\n",
    )
    with pytest.raises(ConfigError, match="empty task list"):
        parse_config(path)


def test_parse_config_sweep_errors(tmp_path):
    base = "tasks = occupation\nparams.g = 0.1\nparams.lambda_a = 1\nparams.gamma_a = 1\nparams.gamma_b = 1\n"
    with pytest.raises(ConfigError, match="both"):
        parse_config(write(tmp_path, base + "sweep.parameter = g\n", "a.cfg"))
    with pytest.raises(ConfigError, match="sweep.parameter"):
        parse_config(
            write(tmp_path, base + "sweep.parameter = x\nsweep.values = 1\n", "b.cfg")
        )
    with pytest.raises(ConfigError, match="numbers"):
        parse_config(
            write(
                tmp_path,
                base + "sweep.parameter = g\nsweep.values = one, two\n",
                "c.cfg",
            )
        )


def test_parse_config_duplicate_key(tmp_path):
    path = write(tmp_path, GOOD + "params.g = 0.2\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(path)


def test_parse_config_rejects_bad_name(tmp_path):
    path = write(tmp_path, GOOD.replace("name = demo", "name = de mo/.."))
    with pytest.raises(ConfigError, match="name"):
        parse_config(path)


def test_parse_config_invalid_params_rejected(tmp_path):
    path = write(
        tmp_path,
        "tasks = occupation\nparams.g = 0.1\nparams.lambda_a = 1\n"
        "params.gamma_a = -1\nparams.gamma_b = 1\n",
    )
    with pytest.raises(ConfigError, match="invalid parameters"):
        parse_config(path)


def test_comparison_row_semantics():
    row = ComparisonRow("x", analytic=2.0, numeric=2.002, tolerance=1e-2)
    assert row.rel_dev == pytest.approx(1e-3)
    assert row.passed
    tight = ComparisonRow("x", analytic=2.0, numeric=2.002, tolerance=1e-4)
    assert not tight.passed
    # zero reference: the floor keeps the ratio finite
    null = ComparisonRow("x", analytic=0.0, numeric=1e-13, tolerance=1.0)
    assert null.rel_dev == pytest.approx(0.1)


def test_run_end_to_end_and_outputs(tmp_path, capsys):
    cfg = write(tmp_path, GOOD)
    out = tmp_path / "out"
    code = main(["run", str(cfg), "--out-dir", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "occupation_rel_dev_strictly_decreasing_toward_small_g" in printed

    csv_path = out / "demo_occupation.csv"
    json_path = out / "demo_occupation.json"
    assert csv_path.exists() and json_path.exists()
    assert (out / "demo_gap.csv").exists()

    lines = csv_path.read_text().splitlines()
    assert lines[0] == "g,Nb_three_level,Nb_exact,rel_dev"
    assert len(lines) == 4
    # 17-significant-digit floats: 0.05 keeps its binary expansion
    assert lines[2].startswith("0.050000000000000003,")

    payload = json.loads(json_path.read_text())
    assert payload["schema_version"] == 1
    assert payload["task"] == "occupation"
    assert payload["scenario"] == "demo"
    assert payload["params"]["gamma_a"] == 10.0
    assert payload["truncation"] == {"signal_dim": 20, "pump_dim": 15}
    assert payload["sweep"] == {"parameter": "g", "values": [0.02, 0.05, 0.1]}
    assert payload["columns"][0] == "g"
    assert len(payload["rows"]) == 3
    assert all("pass" in c for c in payload["comparisons"])


def test_run_byte_identical_across_thread_counts(tmp_path):
    cfg = write(tmp_path, GOOD)
    out1, out4 = tmp_path / "one", tmp_path / "four"
    assert main(["run", str(cfg), "--out-dir", str(out1)]) == 0
    assert main(["run", str(cfg), "--out-dir", str(out4), "--threads", "4"]) == 0
    for name in ("demo_occupation.csv", "demo_occupation.json", "demo_gap.csv", "demo_gap.json"):
        assert (out1 / name).read_bytes() == (out4 / name).read_bytes()


def test_run_exit_1_on_tolerance_failure(tmp_path, capsys):
    text = (
        "name = tight\ntasks = steady_moments\n"
        "params.g = 0.1\nparams.lambda_a = 0.01\n"
        "params.gamma_a = 10.0\nparams.gamma_b = 1.0\n"
        "truncation.signal_dim = 16\ntolerances.rel = 0.0\n"
    )
    code = main(["run", str(write(tmp_path, text)), "--out-dir", str(tmp_path / "o")])
    assert code == 1
    assert "NO" in capsys.readouterr().out


def test_run_exit_2_on_config_error(tmp_path, capsys):
    path = write(tmp_path, GOOD + "bogus.key = 1\n")
    assert main(["run", str(path), "--out-dir", str(tmp_path / "o")]) == 2
    assert "config error" in capsys.readouterr().err


def test_run_exit_2_on_task_domain_error(tmp_path, capsys):
    text = (
        "name = x\ntasks = qfi\n"
        "params.g = 0.1\nparams.lambda_a = 1.0\n"
        "params.gamma_a = 10.0\nparams.gamma_b = 0.5\nparams.kappa_e = 0.1\n"
    )
    assert main(["run", str(write(tmp_path, text)), "--out-dir", str(tmp_path / "o")]) == 2
    assert "gamma_b = 0" in capsys.readouterr().err


def test_run_exit_3_on_solver_failure(tmp_path, capsys):
    # two-photon-only loss has a degenerate steady manifold
    text = (
        "name = degen\ntasks = steady_moments\n"
        "params.g = 0.2\nparams.lambda_a = 0.5\n"
        "params.gamma_a = 4.0\nparams.gamma_b = 0.0\nparams.kappa_e = 0.05\n"
        "truncation.signal_dim = 12\n"
    )
    code = main(["run", str(write(tmp_path, text)), "--out-dir", str(tmp_path / "o")])
    assert code == 3
    assert "solver failure" in capsys.readouterr().err


def test_list_tasks_and_defaults(capsys):
    assert main(["list-tasks"]) == 0
    out = capsys.readouterr().out
    for task in ("steady_moments", "qfi", "uncertainty", "meanfield", "gap", "occupation", "sensor"):
        assert task in out
    assert main(["print-defaults"]) == 0
    out = capsys.readouterr().out
    assert "params.g" in out and "truncation.signal_dim" in out


def test_module_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "pdclab.cli", "list-tasks"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "sensor" in proc.stdout


def test_missing_config_file(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.cfg")]) == 2
    assert "not found" in capsys.readouterr().err
