import json
import math
import os

import numpy as np
import pytest

from estimators.fitting import FitResult
from experiment_functions.results import VERSION
from experiment_functions.results import Curve
from experiment_functions.results import ResultsBundle
from custom_exceptions.exception import InvalidResult


def sample_bundle():
    bundle = ResultsBundle("fano-coherent", "abc123", 7)
    bundle.add_table("eps_per_gate", [{"gate_ns": 50.0, "eps": np.float64(0.031), "n": np.int64(8)}])
    bundle.add_fit("eps_50", FitResult({"eps": 0.031}, {"eps": (0.029, 0.033)}, 0.9, np.array([[1e-6]]),
                                       ["eps"], dof=7))
    bundle.add_curve(Curve("fano_50", [1.0, 2.0], [1.06, 1.07], [0.01, 0.01], x_label="mean_output",
                           y_label="fano"))
    return bundle


def test_curve_fills_missing_columns():
    curve = Curve("c", [1.0, 2.0, 3.0], [0.5, 0.6, 0.7])
    assert np.isnan(curve.yerr).all()
    assert np.isnan(curve.model_y).all()
    with pytest.raises(InvalidResult):
        Curve("c", [1.0, 2.0], [1.0])


def test_to_dict_carries_provenance():
    payload = sample_bundle().to_dict()
    assert payload["provenance"] == {"config_sha256": "abc123", "seed": 7, "version": VERSION}
    row = payload["tables"]["eps_per_gate"]["rows"][0]
    assert type(row["eps"]) is float and type(row["n"]) is int
    assert payload["fits"]["eps_50"]["ci95"]["eps"] == [0.029, 0.033]
    assert payload["curves"]["fano_50"] == {"x_label": "mean_output", "y_label": "fano", "points": 2}


def test_checks():
    bundle = sample_bundle()
    bundle.check("plateau", True, value=np.float64(1.06))
    assert bundle.passed
    assert bundle.checks["plateau"] == {"passed": True, "value": 1.06}
    bundle.check("coverage", np.bool_(False), covered=2, spread=(0.1, 0.2))
    assert not bundle.passed
    assert bundle.checks["coverage"]["spread"] == [0.1, 0.2]


def test_failed_check_is_logged(caplog):
    sample_bundle().check("coverage", False, covered=1)
    assert "Check 'coverage' of fano-coherent failed" in caplog.text


def test_render_tables():
    text = sample_bundle().render_tables()
    assert "[eps_per_gate]" in text
    assert "[fit eps_50] chi2_nu = 0.9" in text
    assert "(0.0290, 0.0330)" in text


def test_write(tmp_path):
    bundle = sample_bundle()
    bundle.check("plateau", True)
    directory = bundle.write(str(tmp_path))
    assert directory == os.path.join(str(tmp_path), "fano-coherent")
    with open(os.path.join(directory, "bundle.json")) as file:
        payload = json.load(file)
    assert payload["checks"]["plateau"]["passed"] is True
    with open(os.path.join(directory, "fano_50.csv")) as file:
        lines = file.read().splitlines()
    assert lines[0] == "# x=mean_output, y=fano"
    assert lines[1] == "x,y,yerr,model_y"
    assert lines[2].split(",")[:2] == ["1.0", "1.06"]
    assert math.isnan(float(lines[2].split(",")[3]))
    assert os.path.exists(os.path.join(directory, "tables.txt"))
