import numpy as np
import pytest

from estimators.spectrum import assign_k
from estimators.spectrum import build_spectrum
from estimators.spectrum import find_spectrum_peaks
from estimators.spectrum import fit_gamma
from estimators.spectrum import pedestal_offset
from estimators.spectrum import snr_integral
from estimators.spectrum import snr_peak
from estimators.spectrum import valley_to_peak
from custom_exceptions.exception import EmptyInput
from custom_exceptions.exception import InsufficientPeaks
from custom_exceptions.exception import InvalidDetectorParams
from custom_exceptions.exception import InvalidSpectrum
from custom_exceptions.exception import MissingPeak


def finger_spectrum(gamma=1.0, width=0.05, mean=2.0, n=50000, offset=0.0, seed=1):
    rng = np.random.default_rng(seed)
    k = rng.poisson(mean, n)
    return k, offset + gamma * k + rng.normal(0.0, width, n)


def test_build_spectrum_pads_range():
    spectrum = build_spectrum([0.0, 0.5, 1.0], 0.1)
    assert spectrum.total == 3
    assert spectrum.bin_edges[0] < 0.0 and spectrum.bin_edges[-1] > 1.0
    assert spectrum.bin_width == pytest.approx(0.1)
    with pytest.raises(EmptyInput):
        build_spectrum([], 0.1)
    with pytest.raises(InvalidSpectrum):
        build_spectrum([1.0], 0.0)


def test_peaks_are_found_at_the_fingers():
    _, values = finger_spectrum()
    spectrum = build_spectrum(values, 0.02)
    peaks, prior = find_spectrum_peaks(spectrum)
    assert prior == pytest.approx(1.0, abs=0.05)
    positions = spectrum.centers[peaks]
    assert np.allclose(positions[:5], np.arange(5), atol=0.03)


@pytest.mark.parametrize("gamma, offset", [(1.0, 0.0), (0.37, 0.2)])
def test_fit_gamma_recovers_gain(gamma, offset):
    _, values = finger_spectrum(gamma=gamma, width=0.05 * gamma, offset=offset)
    fit = fit_gamma(build_spectrum(values, 0.02 * gamma))
    assert fit["gamma"] == pytest.approx(gamma, rel=0.005)
    assert fit.extras["n_peaks"] >= 5
    assert fit["center_0"] == pytest.approx(offset, abs=0.01 * gamma)
    low, high = fit.ci95["gamma"]
    assert low < fit["gamma"] < high


def test_fit_gamma_without_pedestal():
    _, values = finger_spectrum()
    fit = fit_gamma(build_spectrum(values, 0.02), exclude_pedestal=True)
    assert fit["gamma"] == pytest.approx(1.0, rel=0.005)


def test_fit_gamma_keeps_lowest_peaks():
    _, values = finger_spectrum(mean=3.0)
    fit = fit_gamma(build_spectrum(values, 0.02), max_peaks=3)
    assert fit.extras["n_peaks"] == 3
    assert "center_3" not in fit.params


def test_single_peak_is_not_enough():
    values = np.random.default_rng(2).normal(0.0, 0.05, 5000)
    with pytest.raises(InsufficientPeaks):
        fit_gamma(build_spectrum(values, 0.02))
    with pytest.raises(MissingPeak):
        snr_peak(build_spectrum(values, 0.02), 1.0)


def test_snr_of_one_photon_peak():
    _, values = finger_spectrum()
    spectrum = build_spectrum(values, 0.01)
    assert snr_peak(spectrum, 1.0) == pytest.approx(20.0, rel=0.05)
    assert snr_integral(spectrum, 1.0) == pytest.approx(400.0, rel=0.1)


def test_assign_k_rounding():
    assert assign_k([0.5, 1.5, 1.49, -0.3, 2.51], 1.0).tolist() == [0, 1, 1, 0, 3]
    assert assign_k([1.2, 2.2], 1.0, offset=0.2).tolist() == [1, 2]
    with pytest.raises(InvalidDetectorParams):
        assign_k([1.0], 0.0)


def test_assign_k_recovers_counts():
    k, values = finger_spectrum()
    assert np.mean(assign_k(values, 1.0) == k) > 0.999


def test_valley_to_peak_grows_with_noise():
    _, sharp = finger_spectrum(width=0.05)
    _, blurred = finger_spectrum(width=0.2)
    sharp_ratio = valley_to_peak(build_spectrum(sharp, 0.02), 1.0)
    blurred_ratio = valley_to_peak(build_spectrum(blurred, 0.02), 1.0)
    assert sharp_ratio < 0.01
    assert blurred_ratio > 10 * sharp_ratio


@pytest.mark.parametrize("offset", [0.0, 0.2, -0.15])
def test_bright_spectrum_is_anchored_at_zero(offset):
    # no 0- or 1-photon peak is resolved at this intensity
    k, values = finger_spectrum(mean=9.0, width=0.08, offset=offset)
    fit = fit_gamma(build_spectrum(values, 0.05), 8)
    assert fit["center_0"] > 1.5
    assert pedestal_offset(fit) == pytest.approx(offset, abs=0.02)
    assigned = assign_k(values, fit["gamma"], pedestal_offset(fit))
    assert assigned.mean() == pytest.approx(k.mean(), abs=0.01)
    assert np.mean(assigned == k) > 0.99


def test_resolved_pedestal_is_the_anchor():
    k, values = finger_spectrum(offset=0.1)
    fit = fit_gamma(build_spectrum(values, 0.02))
    assert pedestal_offset(fit) == pytest.approx(fit["center_0"])


def test_peak_hold_pedestal_is_skipped():
    rng = np.random.default_rng(3)
    k = rng.poisson(2.0, 50000)
    values = np.where(k == 0, 0.3, 0.05 + k) + rng.normal(0.0, 0.05, k.size)
    fit = fit_gamma(build_spectrum(values, 0.02), exclude_pedestal=True)
    assert pedestal_offset(fit, exclude_pedestal=True) == pytest.approx(0.05, abs=0.01)
    assert np.mean(assign_k(values, fit["gamma"], pedestal_offset(fit, exclude_pedestal=True)) == k) > 0.999
