import os

import pytest

from experiment_functions.config import ExperimentConfig
from experiment_functions.config import load_config
from experiment_functions.config import validate_config
from waveform_chain.pulse import eps_effective
from custom_exceptions.exception import FailedToLoadYamlFile
from custom_exceptions.exception import InvalidExperimentConfig
from custom_exceptions.exception import InvalidFileExtension

TEST_DATA = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "test_data")


def data_file(name):
    return os.path.join(TEST_DATA, name)


def test_defaults():
    config = validate_config({})
    assert config == ExperimentConfig()
    assert config.detector.n_cells == 667
    assert config.acquisition.digitizer.bits == 12
    assert config.acquisition.digitizer.rate == 250e6
    assert config.acquisition.gates == (50.0, 70.0, 100.0, 350.0)
    assert config.acquisition.correlation_model == "cascade"


def test_empty_sections_keep_defaults():
    assert load_config(data_file("defaults.yaml")) == ExperimentConfig()


def test_normalization_is_idempotent():
    config = load_config(data_file("thermal.yaml"), ["detector.eps=0.05", "acquisition.simulation=waveform"])
    assert validate_config(config.to_dict()) == config


def test_thermal_file():
    config = load_config(data_file("thermal.yaml"))
    assert config.source.kind == "multimode-thermal"
    assert config.source.modes == pytest.approx(1.2234)
    assert config.seed == 1


def test_every_problem_is_reported():
    with pytest.raises(InvalidExperimentConfig) as info:
        load_config(data_file("invalid.yaml"))
    problems = info.value.value
    assert any(p.startswith("detector.eps: must lie in [0, 0.5)") for p in problems)
    assert any(p.startswith("detector.eta: must lie in [0, 1]") for p in problems)
    assert any(p.startswith("trials: must be positive") for p in problems)


def test_gate_longer_than_window():
    with pytest.raises(InvalidExperimentConfig) as info:
        validate_config({"acquisition": {"gates": [50, 500]}})
    message = info.value.message
    assert "acquisition.gates" in message
    assert "acquisition.digitizer.window" in message


def test_cascade_limit_is_checked():
    with pytest.raises(InvalidExperimentConfig) as info:
        validate_config({"detector": {"eps": 0.6}})
    assert "detector.eps: must lie in [0, 0.5)" in info.value.message
    assert "detector:" not in info.value.message


@pytest.mark.parametrize("data, where", [
    ({"detector": {"color": "red"}}, "detector.color: unknown key"),
    ({"trials": "many"}, "trials: expected an integer"),
    ({"detector": {"eta": "high"}}, "detector.eta: expected a number"),
    ({"acquisition": {"gates": [50, "long"]}}, "acquisition.gates: expected a list of numbers"),
    ({"source": {"kind": "laser"}}, "source.kind: must be one of"),
    ({"source": {"modes": 0.5}}, "source.modes: must be at least 1"),
    ({"acquisition": {"staircase": {"threshold_max": 0.1}}}, "threshold_max must exceed threshold_min"),
    ({"intensity_scan": {"attenuations": [0.001, 1.0]}},
     "intensity_scan.attenuations: must hold at least two factors in [0.01, 1]"),
    ({"intensity_scan": {"attenuations": [0.5]}}, "intensity_scan.attenuations"),
])
def test_field_errors(data, where):
    with pytest.raises(InvalidExperimentConfig) as info:
        validate_config(data)
    assert where in info.value.message


def test_gate_params():
    config = validate_config({})
    params = config.gate_params(350.0)
    assert params.mean_dc == pytest.approx(160e3 * 350e-9)
    assert params.eps == pytest.approx(eps_effective(config.xt(), 350.0))
    fixed = validate_config({"detector": {"eps": 0.037, "mean_dc": 0.0}}).gate_params(350.0)
    assert fixed.eps == 0.037 and fixed.mean_dc == 0.0


def test_digest_tracks_content():
    config = validate_config({})
    assert config.digest() == validate_config({}).digest()
    assert config.digest() != validate_config({"seed": 3}).digest()


def test_file_errors(tmp_path):
    with pytest.raises(InvalidFileExtension):
        load_config(str(tmp_path / "config.json"))
    with pytest.raises(FileNotFoundError):
        load_config(str(tmp_path / "missing.yaml"))
    with pytest.raises(FailedToLoadYamlFile):
        load_config(data_file("not_a_mapping.yaml"))


def test_overrides():
    config = load_config(None, ["acquisition.gates=[50, 100]", "trials=5000", "source.kind=multimode-thermal"])
    assert config.acquisition.gates == (50.0, 100.0)
    assert config.trials == 5000
    assert config.source.kind == "multimode-thermal"
