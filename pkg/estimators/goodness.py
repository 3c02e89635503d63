"""
Goodness of fit of reconstructed fired-cell distributions.
"""
import logging

import numpy as np

from estimators.fitting import FitResult
from estimators.fitting import fit_model
from photon_sources.sources import mth_pmf
from photon_sources.sources import PhotonDistribution
from detector_model.detector import add_dark_counts
from detector_model.detector import crosstalk_cascade
from custom_exceptions.exception import EmptyInput
from custom_exceptions.exception import InsufficientData

logger = logging.getLogger(__name__)

MIN_EXPECTED = 5.0


def _observed(observed_k) -> np.ndarray:
    k = np.asarray(getattr(observed_k, "counts", observed_k), dtype=np.int64)
    if k.size == 0:
        raise EmptyInput("No reconstructed counts to test.", k)
    if k.min() < 0:
        raise InsufficientData("Fired-cell counts must be non-negative.", int(k.min()))
    return k


def pearson_table(observed_k, theory: PhotonDistribution):
    """
    Pooled Pearson bins: consecutive counts are merged until each bin expects at least 5
    shots; the last bin also holds the theory tail beyond the largest count.

    Returns:
    list[dict]: One row per bin with k_low, k_high, observed, expected and residual.
    """
    k = _observed(observed_k)
    top = max(int(k.max()), theory.n_max)
    observed = np.bincount(k, minlength=top + 1).astype(float)
    expected = k.size * theory.pmf(np.arange(top + 1))
    expected[-1] += max(k.size - expected.sum(), 0.0)

    bins, low, obs_acc, exp_acc = [], 0, 0.0, 0.0
    for i in range(top + 1):
        obs_acc += observed[i]
        exp_acc += expected[i]
        if exp_acc >= MIN_EXPECTED:
            bins.append([low, i, obs_acc, exp_acc])
            low, obs_acc, exp_acc = i + 1, 0.0, 0.0
    if bins and (obs_acc > 0 or exp_acc > 0):
        bins[-1][1] = top
        bins[-1][2] += obs_acc
        bins[-1][3] += exp_acc
    return [{"k_low": lo, "k_high": hi, "observed": o, "expected": e, "residual": (o - e) / np.sqrt(e)}
            for lo, hi, o, e in bins]


def gof_pmf(observed_k, theory: PhotonDistribution, fitted: int = 0) -> float:
    """
    Pearson chi-square per degree of freedom, dof = pooled bins - 1 - fitted parameters.

    Raises:
    InsufficientData: If fewer than two pooled bins (or no degree of freedom) remain.
    """
    table = pearson_table(observed_k, theory)
    dof = len(table) - 1 - fitted
    if len(table) < 2 or dof < 1:
        raise InsufficientData(f"Only {len(table)} pooled bins; a chi-square test needs more.", len(table))
    chi2 = sum(row["residual"] ** 2 for row in table)
    return float(chi2 / dof)


def fit_pmf_mth(observed_k, eps: float = 0.0, mean_dc: float = 0.0) -> FitResult:
    """
    Fits the number of modes of a multimode-thermal fired-cell distribution, with cross talk
    and dark counts fixed. The detected mean is taken from the data, <k>/(1+eps) - <m>_dc.

    Error bars of each frequency are sqrt(observed)/N; empty counts are not fitted.
    """
    k = _observed(observed_k)
    mean_m = k.mean() / (1 + eps) - mean_dc
    if mean_m <= 0:
        raise InsufficientData("The detected mean implied by the data is not positive.", mean_m)
    counts = np.bincount(k)
    support = np.nonzero(counts)[0]
    freq = counts[support] / k.size
    err = np.sqrt(counts[support]) / k.size

    def model(kk, mu):
        dist = crosstalk_cascade(add_dark_counts(mth_pmf(mean_m, max(mu, 1.0)), mean_dc), eps)
        return dist.pmf(kk.astype(np.int64))

    var = k.var()
    mu0 = mean_m ** 2 / max(var / (1 + eps) ** 2 - mean_m - mean_dc, 1e-3)
    fit = fit_model(model, support.astype(float), freq, err, [min(max(mu0, 1.0), 1e4)], ["mu"],
                    bounds=([1.0], [np.inf]), label="thermal distribution fit")
    fit.extras["mean_m"] = float(mean_m)
    return fit
