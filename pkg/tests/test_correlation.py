import numpy as np
import pytest

from photon_sources.sources import MULTIMODE_THERMAL
from photon_sources.sources import SourceSpec
from photon_sources.sources import sample_shots
from photon_sources.sources import split_beam
from detector_model.detector import DetectorParams
from detector_model.detector import mc_detect
from estimators.correlation import CorrPoint
from estimators.correlation import corr_coefficient
from estimators.correlation import corr_curve
from estimators.correlation import fit_correlation
from estimators.correlation import gamma_cascade_theory
from estimators.correlation import gamma_corrected_theory
from estimators.correlation import gamma_mth_theory
from custom_exceptions.exception import DegenerateData
from custom_exceptions.exception import InsufficientData
from custom_exceptions.exception import TheoryDomainError


def random_grid(n=100, seed=0):
    rng = np.random.default_rng(seed)
    return zip(rng.uniform(0.01, 20.0, n), rng.uniform(0.01, 20.0, n), rng.uniform(1.0, 10.0, n),
               rng.uniform(1.0, 10.0, n))


def test_corrected_reduces_to_ideal_without_noise():
    for m1, m2, mu1, mu2 in random_grid():
        ideal = gamma_mth_theory(m1, m2, mu1, mu2)
        assert abs(gamma_corrected_theory(m1, m2, 0, 0, 0, 0, mu1, mu2) - ideal) < 1e-12
        assert abs(gamma_cascade_theory(m1, m2, 0, 0, 0, 0, mu1, mu2) - ideal) < 1e-12


def test_ideal_correlation_is_symmetric_and_bounded():
    assert gamma_mth_theory(2.0, 5.0, 1.5, 3.0) == pytest.approx(gamma_mth_theory(5.0, 2.0, 3.0, 1.5))
    assert gamma_mth_theory(1e6, 1e6, 1.0, 1.0) == pytest.approx(1.0, abs=1e-5)
    assert gamma_mth_theory(0.0, 3.0, 1.0, 1.0) == 0.0


def test_theory_domain():
    with pytest.raises(TheoryDomainError):
        gamma_mth_theory(1.0, 1.0, 0.5, 2.0)
    with pytest.raises(TheoryDomainError):
        gamma_mth_theory(-1.0, 1.0, 2.0, 2.0)
    with pytest.raises(TheoryDomainError):
        gamma_corrected_theory(0.1, 0.1, 0.0, 0.0, 0.5, 0.5, 2.0, 2.0)


def test_noise_lowers_cascade_correlation():
    ideal = gamma_cascade_theory(3.0, 3.0, 0, 0, 0, 0, 1.5, 1.5)
    noisy = gamma_cascade_theory(3.0, 3.0, 0.05, 0.05, 0.05, 0.05, 1.5, 1.5)
    assert noisy < ideal


def test_corr_coefficient_errors():
    with pytest.raises(InsufficientData):
        corr_coefficient(np.ones(2000), np.ones(1999))
    with pytest.raises(InsufficientData):
        corr_coefficient(np.arange(10), np.arange(10))
    with pytest.raises(DegenerateData):
        corr_coefficient(np.ones(2000, dtype=int), np.arange(2000))


def test_corr_point_range():
    with pytest.raises(DegenerateData):
        CorrPoint(1.0, 1.5, 0.01)


def detected_arms(mean, modes, params, trials, seed):
    shots = sample_shots(SourceSpec(MULTIMODE_THERMAL, mean, modes), trials, seed=seed)
    arm1, arm2 = split_beam(shots, 0.5, seed=seed + 1)
    return mc_detect(arm1, params, seed=seed + 2), mc_detect(arm2, params, seed=seed + 3)


def test_split_thermal_light_matches_ideal_theory():
    params = DetectorParams(eta=0.4)
    k1, k2 = detected_arms(10.0, 2.0, params, 40000, seed=1)
    corr, err = corr_coefficient(k1, k2, seed=4)
    assert corr == pytest.approx(gamma_mth_theory(2.0, 2.0, 2.0, 2.0), abs=5 * err)


def test_cascade_fit_recovers_modes():
    mu, eps, dc = 1.5, 0.04, 0.05
    params = DetectorParams(eta=0.4, mean_dc=dc, eps=eps)
    groups = [detected_arms(mean, mu, params, 60000, seed=10 * i) for i, mean in enumerate([4.0, 10.0, 25.0])]
    points = corr_curve(groups, gate_T=100.0, seed=5)
    fit = fit_correlation(points, eps, dc, model="cascade")
    assert fit["mu"] == pytest.approx(mu, abs=5 * fit.sigma("mu"))
    assert fit["mu"] == pytest.approx(mu, rel=0.05)


def test_fit_correlation_on_exact_points():
    mu, eps, dc = 1.2234, {50.0: 0.03, 350.0: 0.025}, {50.0: 0.008, 350.0: 0.056}
    points = []
    for T in (50.0, 350.0):
        for k in (0.5, 1.0, 2.0, 4.0, 8.0):
            corr = gamma_cascade_theory(k, k, eps[T], eps[T], dc[T], dc[T], mu, mu)
            points.append(CorrPoint(k, corr, 1e-4, T))
    fit = fit_correlation(points, eps, dc, model="cascade")
    assert fit["mu"] == pytest.approx(mu, rel=1e-6)
    with pytest.raises(TheoryDomainError):
        fit_correlation(points, eps, dc, model="ideal")
