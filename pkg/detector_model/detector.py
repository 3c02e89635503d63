"""
Analytic detector model: Bernoulli detection, Poissonian dark counts and the
first-order cross-talk cascade, composed in that fixed order, together with the
closed-form output moments and a per-shot Monte Carlo realization.
"""
import math
import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from helper_functions.helpers import Helpers
from photon_sources.sources import ShotCounts
from photon_sources.sources import PhotonDistribution
from custom_exceptions.exception import InvalidDetectorParams

logger = logging.getLogger(__name__)

# efficiency -> dark counts -> cross talk; the cascade is always applied last
DETECTION_STAGES = ("bernoulli_detect", "add_dark_counts", "crosstalk_cascade")

EPS_LIMIT = 0.5
EPS_WARNING = 0.2


@dataclass(frozen=True)
class DetectorParams:
    """
    Non-ideality parameters of the SiPM at the fired-cell level.

    Attributes:
        eta: Detection efficiency.
        mean_dc: Mean number of dark counts per gate.
        eps: Effective cross-talk probability of one avalanche.
        gamma: Output units per fired cell.
        n_cells: Number of cells of the array.
        saturation_enabled: Clamp the fired-cell count at n_cells.
        dcr: Dark-count rate in Hz, used to derive mean_dc for a gate.
        gain_spread: Relative standard deviation of the per-avalanche gain.
    """
    eta: float = 0.4
    mean_dc: float = 0.0
    eps: float = 0.0
    gamma: float = 1.0
    n_cells: int = 667
    saturation_enabled: bool = False
    dcr: float = 160e3
    gain_spread: float = 0.02

    def __post_init__(self):
        for name in ("eta", "mean_dc", "eps", "gamma", "dcr", "gain_spread"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidDetectorParams(f"Detector parameter {name} must be finite.", getattr(self, name))
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidDetectorParams("The detection efficiency eta must lie in [0, 1].", self.eta)
        if self.mean_dc < 0:
            raise InvalidDetectorParams("The mean number of dark counts must be non-negative.", self.mean_dc)
        if not 0.0 <= self.eps < EPS_LIMIT:
            raise InvalidDetectorParams(
                f"The cross-talk probability eps must lie in [0, {EPS_LIMIT}) for a first-order cascade.", self.eps
            )
        if self.eps > EPS_WARNING:
            logger.warning("Cross-talk probability %.3f is above %.1f; the first-order cascade is a poor approximation.",
                           self.eps, EPS_WARNING)
        if self.gamma <= 0:
            raise InvalidDetectorParams("The gain gamma must be positive.", self.gamma)
        if int(self.n_cells) != self.n_cells or self.n_cells <= 0:
            raise InvalidDetectorParams("The cell count must be a positive integer.", self.n_cells)
        if self.dcr < 0:
            raise InvalidDetectorParams("The dark-count rate must be non-negative.", self.dcr)
        if self.gain_spread < 0:
            raise InvalidDetectorParams("The gain spread must be non-negative.", self.gain_spread)

    def at_gate(self, gate_T: float, eps: float) -> "DetectorParams":
        """
        Count-level parameters for an integration gate of gate_T ns: DCR*T dark counts and the given eps.
        """
        return replace(self, mean_dc=self.dcr * gate_T * 1e-9, eps=eps)


@dataclass(frozen=True)
class OutputMoments:
    mean_x: float
    var_x: float
    mean_k: float
    fano_x: float
    mandel_q: float


def _check_probability(name: str, value: float, upper_open: bool = False):
    if not math.isfinite(value) or value < 0 or value > 1 or (upper_open and value == 1):
        bound = "[0, 1)" if upper_open else "[0, 1]"
        raise InvalidDetectorParams(f"{name} must lie in {bound}.", value)


def bernoulli_detect(pph: PhotonDistribution, eta: float) -> PhotonDistribution:
    """
    Photoelectron distribution P_el(m) = sum_n C(n, m) eta^m (1-eta)^(n-m) P_ph(n).
    """
    _check_probability("The detection efficiency eta", eta)
    n = pph.support
    kernel = stats.binom.pmf(n[:, None], n[None, :], eta)
    return PhotonDistribution.truncated(kernel @ pph.probs)


def add_dark_counts(pel: PhotonDistribution, mean_dc: float) -> PhotonDistribution:
    """
    Convolution of the photoelectron distribution with Poissonian dark counts of mean mean_dc.
    """
    if not math.isfinite(mean_dc) or mean_dc < 0:
        raise InvalidDetectorParams("The mean number of dark counts must be non-negative.", mean_dc)
    if mean_dc == 0:
        return pel
    n_dc = int(stats.poisson.isf(1e-17, mean_dc)) + 2
    dark = stats.poisson.pmf(np.arange(n_dc + 1), mean_dc)
    return PhotonDistribution.truncated(np.convolve(pel.probs, dark))


def crosstalk_cascade(pin: PhotonDistribution, eps: float) -> PhotonDistribution:
    """
    First-order cross-talk cascade: every avalanche fires at most one neighbour with probability eps.

    P(k) = sum_l C(l, k-l) eps^(k-l) (1-eps)^(2l-k) P_in(l); the output support of an input
    supported on [l_min, l_max] is contained in [l_min, 2 l_max].
    """
    _check_probability("The cross-talk probability eps", eps, upper_open=True)
    if eps == 0:
        return pin
    l = pin.support
    k = np.arange(2 * pin.n_max + 1)
    kernel = stats.binom.pmf(k[:, None] - l[None, :], l[None, :], eps)
    return PhotonDistribution.truncated(kernel @ pin.probs)


def _saturate(dist: PhotonDistribution, n_cells: int) -> PhotonDistribution:
    if dist.n_max <= n_cells:
        return dist
    probs = dist.probs[: n_cells + 1].copy()
    probs[n_cells] += dist.probs[n_cells + 1:].sum()
    return PhotonDistribution(probs)


def output_distribution(pph: PhotonDistribution, params: DetectorParams) -> PhotonDistribution:
    """
    Fired-cell distribution of the detector, on the k axis (the gamma scaling of the output is not applied).

    The stages run in the order of DETECTION_STAGES; gamma only rescales the abscissa
    x_out = gamma * k when results are presented.
    """
    dist = bernoulli_detect(pph, params.eta)
    dist = add_dark_counts(dist, params.mean_dc)
    dist = crosstalk_cascade(dist, params.eps)
    if params.saturation_enabled:
        dist = _saturate(dist, params.n_cells)
    return dist


def output_moments(pph_mean: float, pph_var: float, params: DetectorParams) -> OutputMoments:
    """
    Closed-form moments of the detector output for a photon distribution with the given mean and variance.

    The photon moments are first thinned by the efficiency (mean eta<n>, variance
    eta^2 var_n + eta(1-eta)<n>), then <x_out> = gamma(1+eps)(<m>+<m>_dc) and
    var_x = gamma^2[(1+eps)^2(var_m+<m>_dc) + eps(1-eps)(<m>+<m>_dc)].
    """
    if pph_var < 0:
        raise InvalidDetectorParams("The photon-number variance must be non-negative.", pph_var)
    eta, eps, gamma, dc = params.eta, params.eps, params.gamma, params.mean_dc
    mean_m = eta * pph_mean
    var_m = eta ** 2 * pph_var + eta * (1 - eta) * pph_mean
    primaries = mean_m + dc
    mean_k = (1 + eps) * primaries
    var_k = (1 + eps) ** 2 * (var_m + dc) + eps * (1 - eps) * primaries
    mean_x = gamma * mean_k
    var_x = gamma ** 2 * var_k
    fano_x = var_x / mean_x if mean_x > 0 else float("nan")
    mandel_q = (var_m + dc) / primaries - 1 if primaries > 0 else float("nan")
    return OutputMoments(mean_x=mean_x, var_x=var_x, mean_k=mean_k, fano_x=fano_x, mandel_q=mandel_q)


def _detect_batch(photons: np.ndarray, params: DetectorParams, rng: np.random.Generator) -> np.ndarray:
    detected = rng.binomial(photons, params.eta)
    if params.mean_dc > 0:
        detected = detected + rng.poisson(params.mean_dc, photons.size)
    # one Bernoulli(eps) secondary per primary avalanche, no tertiaries
    fired = detected + rng.binomial(detected, params.eps)
    if params.saturation_enabled:
        fired = np.minimum(fired, params.n_cells)
    return fired


def mc_detect(shots: ShotCounts, params: DetectorParams, seed: int, jobs: int = 1) -> ShotCounts:
    """
    Per-shot Monte Carlo of the detector: binomial thinning, Poissonian dark counts, first-order cross talk.
    """
    photons = shots.counts
    parts = Helpers.run_batches(
        lambda rng, start, size: _detect_batch(photons[start:start + size], params, rng), seed, len(shots), jobs
    )
    return ShotCounts(np.concatenate(parts).astype(np.int64), seed, f"{shots.label} detected")
