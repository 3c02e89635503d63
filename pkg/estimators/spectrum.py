"""
Pulse-height spectroscopy: histogramming, multi-peak Gaussian fit for the gain,
signal-to-noise of the 1-photon peak and fired-cell assignment.
"""
import math
import logging
from dataclasses import dataclass

import numpy as np
from scipy import signal

from estimators.fitting import FitResult
from estimators.fitting import fit_model
from estimators.fitting import interval
from custom_exceptions.exception import EmptyInput
from custom_exceptions.exception import MissingPeak
from custom_exceptions.exception import InvalidSpectrum
from custom_exceptions.exception import InsufficientPeaks
from custom_exceptions.exception import InvalidDetectorParams

logger = logging.getLogger(__name__)

SQRT_2PI = math.sqrt(2 * math.pi)


@dataclass(frozen=True, eq=False)
class PulseHeightSpectrum:
    bin_edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        if self.counts.size != self.bin_edges.size - 1:
            raise InvalidSpectrum("A spectrum needs one more edge than bins.", self.counts.size)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    def normalized(self) -> np.ndarray:
        return self.counts / (self.total * self.bin_width)


def build_spectrum(values, bin_width: float) -> PulseHeightSpectrum:
    """
    Histogram of single-shot outputs over [min, max], padded by one empty bin on each side.

    Raises:
    EmptyInput: If there are no values.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyInput("Cannot build a spectrum from no values.", values)
    if not bin_width > 0:
        raise InvalidSpectrum(f"The bin width must be positive, got {bin_width}", bin_width)
    low, high = values.min(), values.max()
    n_bins = int(math.floor((high - low) / bin_width)) + 3
    edges = low - bin_width + bin_width * np.arange(n_bins + 1)
    counts, _ = np.histogram(values, bins=edges)
    return PulseHeightSpectrum(edges, counts.astype(np.int64))


def _gaussians(x, *p):
    total = np.zeros_like(x)
    for area, center, width in zip(p[0::3], p[1::3], p[2::3]):
        total += area * np.exp(-0.5 * ((x - center) / width) ** 2) / (SQRT_2PI * width)
    return total


def _smooth(counts: np.ndarray) -> np.ndarray:
    return np.convolve(counts, np.ones(3) / 3, mode="same")


def find_spectrum_peaks(spectrum: PulseHeightSpectrum):
    """
    Peak positions (bin indices, ascending) separated by at least half of the spacing prior.

    Candidates are local maxima whose prominence exceeds three times the Poisson noise of
    their height; the spacing prior is the distance between the two tallest candidates.
    """
    smooth = _smooth(spectrum.counts.astype(float))
    candidates, _ = signal.find_peaks(smooth, prominence=3 * np.sqrt(np.maximum(smooth, 1.0)))
    if candidates.size < 2:
        return candidates, float("nan")
    by_height = candidates[np.argsort(smooth[candidates])[::-1]]
    first, second = sorted(by_height[:2])
    between = np.sum((candidates > first) & (candidates < second))
    prior = (second - first) / (between + 1)
    accepted = []
    for index in by_height:
        if all(abs(index - other) >= 0.5 * prior for other in accepted):
            accepted.append(index)
    return np.sort(np.array(accepted)), float(prior * spectrum.bin_width)


def fit_gamma(spectrum: PulseHeightSpectrum, max_peaks: int = 10, exclude_pedestal: bool = False) -> FitResult:
    """
    Multi-Gaussian fit of the spectrum peaks; gamma is the inverse-variance weighted mean of the
    adjacent center spacings.

    Parameters:
    spectrum (PulseHeightSpectrum): The spectrum to fit.
    max_peaks (int): Keep at most this many peaks, lowest first.
    exclude_pedestal (bool): Drop the pedestal-to-first-peak spacing from the gain estimate.

    Returns:
    FitResult: center_i, width_i, area_i per peak, plus gamma.

    Raises:
    InsufficientPeaks: If fewer than two peaks (three with exclude_pedestal) are resolved.
    """
    peaks, prior = find_spectrum_peaks(spectrum)
    needed = 3 if exclude_pedestal else 2
    if peaks.size > max_peaks:
        logger.warning("Keeping the lowest %d of %d spectrum peaks.", max_peaks, peaks.size)
        peaks = peaks[:max_peaks]
    if peaks.size < needed:
        raise InsufficientPeaks(f"The gain fit needs {needed} resolved peaks, found {peaks.size}.", int(peaks.size))

    x, counts, bw = spectrum.centers, spectrum.counts.astype(float), spectrum.bin_width
    smooth = _smooth(counts)
    widths = signal.peak_widths(smooth, peaks, rel_height=0.5)[0] * bw / 2.355
    widths = np.clip(widths, bw / 2, prior / 2)
    p0, low, high = [], [], []
    for index, width in zip(peaks, widths):
        p0 += [smooth[index] * width * SQRT_2PI, x[index], width]
        low += [0.0, x[index] - prior / 2, bw / 10]
        high += [np.inf, x[index] + prior / 2, prior]
    region = (x >= x[peaks[0]] - prior / 2) & (x <= x[peaks[-1]] + prior / 2)
    names = [f"{kind}_{i}" for i in range(peaks.size) for kind in ("area", "center", "width")]

    def model(xx, *p):
        return _gaussians(xx, *p) * bw

    fit = fit_model(model, x[region], counts[region], np.sqrt(np.maximum(counts[region], 1.0)), p0, names,
                    bounds=(low, high), label="multi-peak gain fit")

    center_idx = [fit.param_names.index(f"center_{i}") for i in range(peaks.size)]
    diff = np.zeros((peaks.size - 1, len(names)))
    for i in range(peaks.size - 1):
        diff[i, center_idx[i + 1]], diff[i, center_idx[i]] = 1.0, -1.0
    if exclude_pedestal:
        diff = diff[1:]
    spacing = diff @ np.array([fit.params[n] for n in names])
    spacing_cov = diff @ fit.covariance @ diff.T
    weights = 1.0 / np.maximum(np.diag(spacing_cov), 1e-300)
    gamma = float(weights @ spacing / weights.sum())
    projection = weights / weights.sum()
    gamma_sigma = float(math.sqrt(max(projection @ spacing_cov @ projection, 0.0)))
    fit.params["gamma"] = gamma
    fit.ci95["gamma"] = interval(gamma, gamma_sigma)
    fit.extras["n_peaks"] = int(peaks.size)
    logger.info("Gain from %d peaks: gamma = %.5g +- %.2g.", peaks.size, gamma, gamma_sigma)
    return fit


def _one_photon_peak(spectrum: PulseHeightSpectrum, gamma: float) -> FitResult:
    if not gamma > 0:
        raise InvalidDetectorParams("The gain gamma must be positive.", gamma)
    peaks, _ = find_spectrum_peaks(spectrum)
    x = spectrum.centers
    positions = x[peaks] if peaks.size else np.array([])
    if positions.size and positions[0] < 0.5 * gamma:
        positions = positions[1:]
    if positions.size == 0:
        raise MissingPeak("No 1-photon peak was found in the spectrum.", gamma)
    center = positions[0]
    counts, bw = spectrum.counts.astype(float), spectrum.bin_width
    region = np.abs(x - center) <= 0.5 * gamma
    if np.count_nonzero(counts[region]) < 3:
        raise MissingPeak("The 1-photon peak holds fewer than three populated bins.", center)
    width0 = max(math.sqrt(np.average((x[region] - center) ** 2, weights=counts[region] + 1e-12)), bw)

    def model(xx, area, mean, width):
        return _gaussians(xx, area, mean, width) * bw

    return fit_model(model, x[region], counts[region], np.sqrt(np.maximum(counts[region], 1.0)),
                     [counts[region].sum(), center, width0], ["area", "mean", "width"],
                     bounds=([0.0, center - 0.5 * gamma, bw / 10], [np.inf, center + 0.5 * gamma, gamma]),
                     label="1-photon peak fit")


def snr_integral(spectrum: PulseHeightSpectrum, gamma: float) -> float:
    """
    Mean of the 1-photon peak over its variance.

    Raises:
    MissingPeak: If no 1-photon peak is found.
    """
    fit = _one_photon_peak(spectrum, gamma)
    return fit["mean"] / fit["width"] ** 2


def snr_peak(spectrum: PulseHeightSpectrum, gamma: float) -> float:
    """
    Mean of the 1-photon peak over its standard deviation.
    """
    fit = _one_photon_peak(spectrum, gamma)
    return fit["mean"] / fit["width"]


def assign_k(values, gamma: float, offset: float = 0.0) -> np.ndarray:
    """
    Nearest fired-cell count, k = round((v - offset) / gamma) with half-integers rounded down, clamped at 0.
    """
    if not gamma > 0:
        raise InvalidDetectorParams("The gain gamma must be positive.", gamma)
    ratio = (np.asarray(values, dtype=float) - offset) / gamma
    return np.maximum(np.ceil(ratio - 0.5), 0).astype(np.int64)


def valley_to_peak(spectrum: PulseHeightSpectrum, gamma: float, offset: float = 0.0, pairs: int = 3) -> float:
    """
    Average ratio between the valley and the adjacent peak heights over the first `pairs` peak pairs.

    The valley is the mean count within 0.1 gamma of the midpoint, a peak the largest count
    within gamma/4 of k*gamma. Smaller values mean better separated peaks.
    """
    x, counts = spectrum.centers, spectrum.counts.astype(float)
    ratios = []
    for k in range(pairs):
        left = counts[np.abs(x - offset - k * gamma) <= gamma / 4]
        right = counts[np.abs(x - offset - (k + 1) * gamma) <= gamma / 4]
        valley = counts[np.abs(x - offset - (k + 0.5) * gamma) <= 0.1 * gamma]
        if left.size == 0 or right.size == 0 or valley.size == 0 or min(left.max(), right.max()) <= 0:
            continue
        ratios.append(valley.mean() / (0.5 * (left.max() + right.max())))
    if not ratios:
        raise MissingPeak("No pair of adjacent peaks to compare.", gamma)
    return float(np.mean(ratios))


def pedestal_offset(fit: FitResult, exclude_pedestal: bool = False) -> float:
    """
    Output position of k = 0 implied by a gain fit, for spectra with or without a resolved pedestal.

    The lowest fitted photon peak is taken as the anchor and moved down by a whole number of gains
    to the multiple nearest zero. With exclude_pedestal the pedestal sits apart from the photon
    comb, so peaks below half a gain are not used as the anchor.

    Parameters:
    fit (FitResult): Result of fit_gamma.
    exclude_pedestal (bool): The spectrum is a peak-and-hold one.

    Returns:
    float: The offset to pass to assign_k.
    """
    gamma = fit["gamma"]
    centers = [fit[f"center_{i}"] for i in range(fit.extras["n_peaks"])]
    if exclude_pedestal:
        centers = [c for c in centers if c >= 0.5 * gamma] or centers
    anchor = centers[0]
    return float(anchor - round(anchor / gamma) * gamma)
