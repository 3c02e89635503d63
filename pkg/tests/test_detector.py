import itertools
import logging
from collections import defaultdict

import numpy as np
import pytest
from scipy import stats

from photon_sources.sources import COHERENT
from photon_sources.sources import PhotonDistribution
from photon_sources.sources import SourceSpec
from photon_sources.sources import coherent_pmf
from photon_sources.sources import mth_pmf
from photon_sources.sources import sample_shots
from detector_model.detector import DetectorParams
from detector_model.detector import add_dark_counts
from detector_model.detector import bernoulli_detect
from detector_model.detector import crosstalk_cascade
from detector_model.detector import mc_detect
from detector_model.detector import output_distribution
from detector_model.detector import output_moments
from custom_exceptions.exception import InvalidDetectorParams


def enumerate_outputs(pph, eta, mean_dc, eps, dark_max):
    """
    Event-by-event enumeration: every detection pattern, dark-count number and cross-talk pattern.
    """
    result = defaultdict(float)
    for n, p_n in enumerate(pph):
        if p_n == 0:
            continue
        for detected in itertools.product((0, 1), repeat=n):
            m = sum(detected)
            p_m = eta ** m * (1 - eta) ** (n - m)
            for d in range(dark_max + 1):
                p_d = stats.poisson.pmf(d, mean_dc) if mean_dc > 0 else float(d == 0)
                if p_d == 0:
                    continue
                primaries = m + d
                for triggered in itertools.product((0, 1), repeat=primaries):
                    t = sum(triggered)
                    p_t = eps ** t * (1 - eps) ** (primaries - t)
                    result[primaries + t] += p_n * p_m * p_d * p_t
    return result


@pytest.mark.parametrize("eta, mean_dc, eps", [
    (0.4, 0.0, 0.0),
    (0.4, 0.05, 0.1),
    (1.0, 0.05, 0.048),
    (0.7, 0.0, 0.3),
])
def test_output_distribution_matches_enumeration(eta, mean_dc, eps):
    rng = np.random.default_rng(2)
    weights = rng.uniform(0.1, 1.0, 6)
    pph = weights / weights.sum()
    oracle = enumerate_outputs(pph, eta, mean_dc, eps, dark_max=7)
    dist = output_distribution(PhotonDistribution(pph), DetectorParams(eta=eta, mean_dc=mean_dc, eps=eps))
    support = max(max(oracle), dist.n_max) + 1
    expected = np.array([oracle.get(k, 0.0) for k in range(support)])
    total_variation = 0.5 * np.abs(dist.pmf(np.arange(support)) - expected).sum()
    assert total_variation < 1e-9


def test_monte_carlo_matches_analytic_pmf():
    params = DetectorParams(eta=0.4, mean_dc=0.0563, eps=0.048)
    spec = SourceSpec(COHERENT, 5.0)
    shots = sample_shots(spec, 1_000_000, seed=21)
    counts = mc_detect(shots, params, seed=22)
    theory = output_distribution(spec.pmf(), params)

    observed = np.bincount(counts.counts, minlength=theory.n_max + 1).astype(float)
    expected = theory.pmf(np.arange(observed.size)) * len(counts)
    keep = expected >= 5
    last = np.flatnonzero(keep)[-1]
    observed_bins = np.append(observed[:last], observed[last:].sum())
    expected_bins = np.append(expected[:last], expected[last:].sum())
    expected_bins *= observed_bins.sum() / expected_bins.sum()
    _, p_value = stats.chisquare(observed_bins, expected_bins)
    assert p_value > 0.001


@pytest.mark.parametrize("pph", [coherent_pmf(7.0), mth_pmf(7.0, 1.5)])
def test_moments_match_distribution(pph):
    params = DetectorParams(eta=0.4, mean_dc=0.2, eps=0.05, gamma=2.5)
    dist = output_distribution(pph, params)
    moments = output_moments(pph.mean, pph.variance, params)
    assert moments.mean_k == pytest.approx(dist.mean, rel=1e-9)
    assert moments.mean_x == pytest.approx(2.5 * dist.mean, rel=1e-9)
    assert moments.var_x == pytest.approx(2.5 ** 2 * dist.variance, rel=1e-8)
    assert moments.fano_x == pytest.approx(2.5 * dist.fano, rel=1e-8)


def test_mandel_q_of_ideal_detection():
    params = DetectorParams(eta=0.5)
    assert output_moments(4.0, 4.0, params).mandel_q == pytest.approx(0.0, abs=1e-12)
    # thermal light keeps Q = eta <n> / mu after thinning
    assert output_moments(4.0, 4.0 + 16.0 / 2.0, params).mandel_q == pytest.approx(1.0, rel=1e-12)


def test_coherent_fano_plateau():
    eps, dc = 0.1, 0.0
    dist = output_distribution(coherent_pmf(6.0), DetectorParams(eta=0.4, mean_dc=dc, eps=eps))
    assert dist.fano == pytest.approx((1 + 3 * eps) / (1 + eps), rel=1e-9)


def test_stages_are_identity_at_zero():
    pph = mth_pmf(3.0, 2.0)
    assert add_dark_counts(pph, 0.0) is pph
    assert crosstalk_cascade(pph, 0.0) is pph
    assert np.allclose(bernoulli_detect(pph, 1.0).pmf(np.arange(40)), pph.pmf(np.arange(40)), atol=1e-15)


def test_cascade_support():
    dist = crosstalk_cascade(PhotonDistribution.point_mass(3), 0.2)
    assert dist.n_max == 6
    assert np.allclose(dist.probs[3:], stats.binom.pmf(np.arange(4), 3, 0.2))
    assert dist.probs[:3].sum() == 0


def test_saturation_keeps_total_mass():
    pph = coherent_pmf(20.0)
    free = output_distribution(pph, DetectorParams(eta=1.0, n_cells=15))
    clamped = output_distribution(pph, DetectorParams(eta=1.0, n_cells=15, saturation_enabled=True))
    assert clamped.n_max == 15
    assert clamped.probs[15] == pytest.approx(free.probs[15:].sum(), rel=1e-12)
    assert np.allclose(clamped.probs[:15], free.probs[:15])


def test_monte_carlo_saturation():
    shots = sample_shots(SourceSpec(COHERENT, 50.0), 2000, seed=1)
    counts = mc_detect(shots, DetectorParams(eta=1.0, eps=0.2, n_cells=10, saturation_enabled=True), seed=2)
    assert counts.counts.max() == 10


@pytest.mark.parametrize("kwargs", [{"eps": 0.5}, {"eps": -0.01}, {"eta": 1.2}, {"mean_dc": -1.0},
                                    {"gamma": 0.0}, {"n_cells": 0}, {"eta": float("nan")}])
def test_invalid_params(kwargs):
    with pytest.raises(InvalidDetectorParams):
        DetectorParams(**kwargs)


def test_large_eps_logs_warning(caplog):
    with caplog.at_level(logging.WARNING, logger="detector_model.detector"):
        DetectorParams(eps=0.3)
    assert "poor approximation" in caplog.text


def test_at_gate_converts_rate():
    params = DetectorParams(dcr=160e3).at_gate(350.0, 0.03)
    assert params.mean_dc == pytest.approx(0.056)
    assert params.eps == 0.03


def test_mc_detect_does_not_depend_on_jobs():
    shots = sample_shots(SourceSpec(COHERENT, 5.0), 30000, seed=3)
    params = DetectorParams(mean_dc=0.1, eps=0.05)
    assert np.array_equal(mc_detect(shots, params, 9, jobs=1).counts, mc_detect(shots, params, 9, jobs=3).counts)
