import json

import numpy as np
import pytest

from photon_sources.sources import COHERENT
from photon_sources.sources import SourceSpec
from photon_sources.sources import attenuate
from photon_sources.sources import sample_shots
from detector_model.detector import DetectorParams
from detector_model.detector import mc_detect
from estimators.fano import fano_curve
from estimators.fano import fit_fano_coherent
from experiment_functions.config import validate_config
from scenarios.registry import BUILTIN_SCENARIOS
from scenarios.registry import get_scenario
from custom_exceptions.exception import UnknownScenario

SMOKE = {
    "trials": 20000,
    "acquisition": {"staircase": {"exposure": 0.01}},
}


def run(name, data=None, jobs=None):
    return get_scenario(name)(validate_config(data or {}), jobs).run()


def test_registry():
    assert len(BUILTIN_SCENARIOS) == 10
    assert get_scenario("fano-thermal").name == "fano-thermal"
    with pytest.raises(UnknownScenario) as info:
        get_scenario("nope")
    assert "staircase" in info.value.value


def test_simulation_mode():
    config = validate_config({})
    assert get_scenario("fano-coherent")(config).simulation == "counts"
    assert get_scenario("staircase")(config).simulation == "waveform"
    forced = validate_config({"acquisition": {"simulation": "waveform"}})
    assert get_scenario("stats-coherent")(forced).simulation == "waveform"


@pytest.mark.parametrize("name", ["staircase", "phs-gates", "fano-coherent", "fano-thermal", "stats-coherent",
                                  "stats-thermal", "correlations", "peak-and-hold"])
def test_scenario_runs(name):
    bundle = run(name, SMOKE)
    assert bundle.scenario == name
    assert bundle.checks
    payload = json.loads(json.dumps(bundle.to_dict()))
    assert payload["provenance"]["seed"] == 0


def test_results_do_not_depend_on_jobs():
    first = run("fano-coherent", SMOKE, jobs=1)
    second = run("fano-coherent", SMOKE, jobs=2)
    assert json.dumps(first.to_dict(), sort_keys=True) == json.dumps(second.to_dict(), sort_keys=True)


def test_seed_changes_results():
    first = run("stats-coherent", SMOKE)
    second = run("stats-coherent", {**SMOKE, "seed": 1})
    assert first.to_dict()["tables"] != second.to_dict()["tables"]


@pytest.mark.slow
def test_coherent_scan_covers_injected_crosstalk():
    bundle = run("fano-coherent")
    assert bundle.checks["injected_eps_covered"]["passed"]
    assert bundle.checks["eps_non_decreasing"]["passed"]


@pytest.mark.slow
def test_eps_vs_gate():
    bundle = run("eps-vs-gate")
    assert bundle.fits["eps_vs_gate"]["m"] > 0
    assert bundle.checks["long_regime_slope_positive"]["passed"]
    assert bundle.checks["short_regime_rising"]["passed"]


@pytest.mark.slow
def test_snr_scan():
    bundle = run("snr-scan", {"trials": 50000})
    assert len(bundle.tables["snr"]["rows"]) == 11
    assert bundle.checks["snr_optimum"]["passed"]


@pytest.mark.slow
def test_thermal_fano_fit_recovers_modes_and_dark_rate():
    bundle = run("fano-thermal", {"trials": 300000})
    assert bundle.checks["modes_recovered"]["passed"]
    assert bundle.checks["dcr_recovered"]["passed"]


@pytest.mark.slow
def test_split_beam_correlations():
    bundle = run("correlations", {"trials": 300000})
    assert bundle.checks["modes_recovered"]["passed"]
    assert bundle.checks["short_gate_more_correlated"]["passed"]


@pytest.mark.slow
def test_cascade_beats_poisson_for_coherent_light():
    wins = sum(run("stats-coherent", {"seed": seed, "detector": {"eps": 0.037}}).checks["cascade_preferred"]["passed"]
               for seed in range(20))
    assert wins == 20


@pytest.mark.slow
def test_peak_and_hold_without_crosstalk():
    bundle = run("peak-and-hold", {"temporal_xt": {"eps0": 0.0, "a": 0.0}})
    failed = [name for name, item in bundle.checks.items() if not item["passed"]]
    assert failed == []


@pytest.mark.slow
def test_staircase_recovers_dark_rate_and_crosstalk():
    bundle = run("staircase", {"detector": {"dcr": 140e3}, "temporal_xt": {"a": 0.0}})
    assert bundle.checks["dcr_plateau"]["passed"]
    assert bundle.checks["prompt_crosstalk"]["passed"]


@pytest.mark.slow
def test_plateau_interval_coverage():
    eps, repetitions = 0.05, 200
    params = DetectorParams(eta=0.4, mean_dc=0.05, eps=eps)
    covered = 0
    for rep in range(repetitions):
        shots = sample_shots(SourceSpec(COHERENT, 15.0), 20000, seed=1000 + rep)
        groups = [mc_detect(attenuate(shots, factor, seed=rep), params, seed=rep * 10 + i)
                  for i, factor in enumerate([0.05, 0.1, 0.2, 0.35, 0.6, 1.0])]
        fit = fit_fano_coherent(fano_curve(groups, gate_T=100.0, seed=rep), 1.0)
        low, high = fit.ci95["eps"]
        covered += low <= eps <= high
    assert covered / repetitions >= 0.89
    assert np.isfinite(fit.chi2_nu)
