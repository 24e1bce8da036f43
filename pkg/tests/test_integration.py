import json

from typer.testing import CliRunner

from signorinilab.main import app

runner = CliRunner()

STALLED_CONFIG = """[grid]
n = 2
N = 17
K = 16

[problem]
kind = signorini
profile = signorini_three_halves
tol = 1e-14
max_sweeps = 1
"""


def test_cli_help():
    result = runner.invoke(app, ["--help"])
    assert result.exit_code == 0
    assert "parabolic thin obstacle" in result.output
    for verb in ("solve", "analyze", "certify", "run", "info"):
        assert verb in result.output


def test_cli_run_writes_artifacts(tmp_path, write_config, evaluate_config_text):
    config = write_config(evaluate_config_text)
    out = tmp_path / "out"
    result = runner.invoke(app, ["run", "-c", str(config), "-o", str(out)])
    assert result.exit_code == 0
    assert "Wrote 4 artifacts" in result.output
    summary = json.loads((out / "summary.json").read_text())
    assert summary["experiment"] == "experiment"
    assert (out / "growth_phi.csv").exists()


def test_cli_seed_override(tmp_path, write_config, evaluate_config_text):
    config = write_config(evaluate_config_text)
    out = tmp_path / "out"
    result = runner.invoke(app, ["solve", "-c", str(config), "-o", str(out), "--seed", "11"])
    assert result.exit_code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seed"] == 11
    assert list(summary["stages"]) == ["solve"]


def test_cli_missing_key_exits_1(tmp_path, write_config, evaluate_config_text):
    config = write_config(evaluate_config_text.replace("N = 33\n", ""))
    result = runner.invoke(app, ["run", "-c", str(config), "-o", str(tmp_path / "out")])
    assert result.exit_code == 1
    assert "Invalid configuration" in result.output
    assert "'N'" in result.output


def test_cli_missing_config_exits_1(tmp_path):
    result = runner.invoke(app, ["run", "-c", str(tmp_path / "absent.cfg")])
    assert result.exit_code == 1
    assert "not found" in result.output


def test_cli_info_and_snapshot_analysis(tmp_path, write_config, evaluate_config_text):
    config = write_config(evaluate_config_text)
    out = tmp_path / "out"
    assert runner.invoke(app, ["solve", "-c", str(config), "-o", str(out)]).exit_code == 0
    snapshot = out / "field.sgnl"

    info = runner.invoke(app, ["info", str(snapshot)])
    assert info.exit_code == 0
    assert "65 x 33 x 33" in info.output

    again = tmp_path / "again"
    result = runner.invoke(
        app, ["analyze", "-c", str(config), "-s", str(snapshot), "-o", str(again)]
    )
    assert result.exit_code == 0
    summary = json.loads((again / "summary.json").read_text())
    assert "solve" not in summary["stages"]
    assert "analyze" in summary["stages"]


def test_cli_info_rejects_garbage(tmp_path):
    path = tmp_path / "garbage.sgnl"
    path.write_bytes(b"not a snapshot at all")
    result = runner.invoke(app, ["info", str(path)])
    assert result.exit_code == 1
    assert "Unreadable snapshot" in result.output


def test_cli_non_convergence_exits_2(tmp_path, write_config):
    config = write_config(STALLED_CONFIG)
    out = tmp_path / "out"
    result = runner.invoke(app, ["solve", "-c", str(config), "-o", str(out)])
    assert result.exit_code == 2
    assert "did not converge" in result.output
    summary = json.loads((out / "summary.json").read_text())
    assert summary["partial"] is True


def test_cli_failed_checks_exit_3(tmp_path, write_config, evaluate_config_text):
    text = evaluate_config_text.replace("phi_min = 9.0", "phi_min = 20.0").replace(
        "phi_max = 11.0", "phi_max = 30.0"
    )
    config = write_config(text)
    out = tmp_path / "out"
    result = runner.invoke(app, ["run", "-c", str(config), "-o", str(out)])
    assert result.exit_code == 3
    assert "2 checks failed" in result.output
    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"] is False
    assert summary["partial"] is False


def test_cli_verbose_reports_stages(tmp_path, write_config, evaluate_config_text):
    config = write_config(evaluate_config_text)
    result = runner.invoke(
        app, ["analyze", "-c", str(config), "-o", str(tmp_path / "out"), "-v"]
    )
    assert result.exit_code == 0
    assert "Loaded experiment 'experiment'" in result.output
    assert "Running stages: analyze" in result.output
