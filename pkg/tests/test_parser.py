from pathlib import Path

import pytest

from signorinilab.analysis import FunctionalKind
from signorinilab.grid import Domain, PPoint
from signorinilab.parser import ConfigError, alakazam_load_config, alakazam_parse_config

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def test_parse_evaluate_config(evaluate_config_text):
    config = alakazam_parse_config(evaluate_config_text, name="linear")
    assert config.name == "linear"
    assert (config.grid.n, config.grid.N, config.grid.K) == (2, 33, 64)
    assert config.grid.domain == Domain.BOX
    assert config.problem.kind == "evaluate"
    assert config.problem.profile == "linear_x1"
    assert config.analysis.enabled
    assert config.analysis.functionals == (FunctionalKind.PHI, FunctionalKind.MEAN_OSC)
    assert config.analysis.centers == (PPoint((0.0, 0.0), 0.0), PPoint((0.1, 0.1), -0.1))
    assert config.analysis.bounds == {"phi": (9.0, 11.0)}
    assert config.run.seed == 3
    assert not config.certify.enabled
    assert config.output.directory == Path("results")


def test_missing_required_key_names_the_key(evaluate_config_text):
    text = evaluate_config_text.replace("N = 33\n", "")
    with pytest.raises(ConfigError) as excinfo:
        alakazam_parse_config(text)
    assert excinfo.value.section == "grid"
    assert excinfo.value.key == "N"
    assert "[grid] N: missing required key 'N'" in str(excinfo.value)
    assert "Example" in str(excinfo.value)


def test_invalid_values(evaluate_config_text):
    with pytest.raises(ConfigError, match="odd"):
        alakazam_parse_config(evaluate_config_text.replace("N = 33", "N = 32"))
    with pytest.raises(ConfigError, match="expected an integer"):
        alakazam_parse_config(evaluate_config_text.replace("K = 64", "K = many"))
    with pytest.raises(ConfigError, match="unknown value 'elliptic'"):
        alakazam_parse_config(evaluate_config_text.replace("kind = evaluate", "kind = elliptic"))
    with pytest.raises(ConfigError, match="unknown functional 'phee'"):
        alakazam_parse_config(evaluate_config_text.replace("phi, mean_osc", "phee"))
    with pytest.raises(ConfigError, match="space-time point needs 3 numbers"):
        alakazam_parse_config(evaluate_config_text.replace("0.1, 0.1, -0.1", "0.1, -0.1"))
    with pytest.raises(ConfigError, match="unknown profile"):
        alakazam_parse_config(evaluate_config_text.replace("linear_x1", "linear_x9"))


def test_text_before_first_section():
    with pytest.raises(ConfigError, match="before the first"):
        alakazam_parse_config("n = 2\n[grid]\nN = 9\n")


def test_coefficient_matrix_parsing(evaluate_config_text):
    text = evaluate_config_text + "\n[coefficients]\nkind = constant\nmatrix = 1.5, 0.4; 0.4, 0.8\n"
    config = alakazam_parse_config(text)
    assert config.coefficients.matrix == ((1.5, 0.4), (0.4, 0.8))
    bad = text.replace("0.4, 0.8", "0.3, 0.8")
    with pytest.raises(ConfigError, match="symmetric"):
        alakazam_parse_config(bad)
    indefinite = text.replace("1.5, 0.4; 0.4, 0.8", "1, 2; 2, 1")
    with pytest.raises(ConfigError, match="positive definite"):
        alakazam_parse_config(indefinite)
    with pytest.raises(ConfigError, match="2x2 matrix"):
        alakazam_parse_config(text.replace("1.5, 0.4; 0.4, 0.8", "1, 0, 0"))


def test_drift_needs_p_above_n(evaluate_config_text):
    text = evaluate_config_text + "\n[coefficients]\nkind = drift\np = 2\n"
    with pytest.raises(ConfigError, match="p must exceed n"):
        alakazam_parse_config(text)


def test_profile_parameters_and_snapshot(evaluate_config_text, tmp_path):
    text = evaluate_config_text.replace(
        "profile = linear_x1", "profile = positive_caloric\nprofile_shift = 4"
    )
    assert alakazam_parse_config(text).problem.profile_params == {"shift": 4.0}
    missing = evaluate_config_text.replace("profile = linear_x1", "snapshot = absent.sgnl")
    with pytest.raises(ConfigError, match="snapshot file not found"):
        alakazam_parse_config(missing, base=tmp_path)


def test_transfer_radius_must_stay_below_R(evaluate_config_text):
    text = evaluate_config_text + "\n[transfer]\nR = 0.3\nr_max = 0.4\n"
    with pytest.raises(ConfigError, match="smaller than R"):
        alakazam_parse_config(text)


def test_overrides(evaluate_config_text, tmp_path):
    config = alakazam_parse_config(evaluate_config_text)
    changed = config.with_overrides(seed=9, out=tmp_path, threads=2)
    assert changed.run.seed == 9
    assert changed.run.threads == 2
    assert changed.output.directory == tmp_path
    assert config.run.seed == 3
    with pytest.raises(ConfigError, match="threads"):
        config.with_overrides(threads=0)


def test_load_config_uses_file_stem(write_config, evaluate_config_text):
    path = write_config(evaluate_config_text, name="linear_growth.cfg")
    assert alakazam_load_config(path).name == "linear_growth"
    with pytest.raises(ConfigError, match="not found"):
        alakazam_load_config(path.with_name("absent.cfg"))


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.cfg")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    config = alakazam_load_config(path)
    assert config.name == path.stem
    assert config.analysis.enabled or config.certify.enabled or config.transfer.enabled
