"""
Shot-by-shot correlation between the two arms of a split multimode-thermal beam.
"""
import math
import logging
from dataclasses import dataclass

import numpy as np

from estimators.fitting import FitResult
from estimators.fitting import fit_model
from estimators.bootstrap import bootstrap_pairs
from estimators.bootstrap import N_RESAMPLES
from custom_exceptions.exception import EmptyInput
from custom_exceptions.exception import DegenerateData
from custom_exceptions.exception import InsufficientData
from custom_exceptions.exception import TheoryDomainError

logger = logging.getLogger(__name__)

MIN_SHOTS = 1000
MODELS = ("corrected", "cascade")


@dataclass(frozen=True)
class CorrPoint:
    mean_k: float
    corr: float
    corr_err: float
    gate_T: float = float("nan")
    mean_k1: float = float("nan")
    mean_k2: float = float("nan")

    def __post_init__(self):
        if abs(self.corr) > 1 + 1e-12:
            raise DegenerateData("A correlation coefficient must lie in [-1, 1].", self.corr)

    def arm_means(self):
        if math.isfinite(self.mean_k1) and math.isfinite(self.mean_k2):
            return self.mean_k1, self.mean_k2
        return self.mean_k, self.mean_k


def pearson_statistic(x: np.ndarray, y: np.ndarray, weights: np.ndarray) -> float:
    total = weights.sum()
    mx, my = (x * weights).sum() / total, (y * weights).sum() / total
    cov = ((x - mx) * (y - my) * weights).sum()
    vx, vy = ((x - mx) ** 2 * weights).sum(), ((y - my) ** 2 * weights).sum()
    if vx == 0 or vy == 0:
        return float("nan")
    return cov / math.sqrt(vx * vy)


def corr_coefficient(k1, k2, seed: int = 0, n_resamples: int = N_RESAMPLES):
    """
    Pearson correlation of two shot-aligned samples and its bootstrap error.

    Returns:
    tuple[float, float]: (corr, err).

    Raises:
    InsufficientData: If the lengths differ or are below 1000.
    DegenerateData: If either arm has zero variance.
    """
    x = np.asarray(getattr(k1, "counts", k1))
    y = np.asarray(getattr(k2, "counts", k2))
    if x.size != y.size:
        raise InsufficientData("Both arms must hold the same number of shots.", (x.size, y.size))
    if x.size < MIN_SHOTS:
        raise InsufficientData(f"A correlation needs at least {MIN_SHOTS} shots, got {x.size}.", x.size)
    if x.var() == 0 or y.var() == 0:
        raise DegenerateData("The correlation is undefined for a constant arm.", (float(x.var()), float(y.var())))
    corr, err = bootstrap_pairs(x, y, pearson_statistic, seed, n_resamples)
    return float(np.clip(corr, -1.0, 1.0)), err


def corr_curve(groups, gate_T: float = float("nan"), seed: int = 0, n_resamples: int = N_RESAMPLES):
    """
    One CorrPoint per intensity group of (arm 1, arm 2) samples; group i bootstraps with seed + i.
    """
    if not groups:
        raise EmptyInput("No groups for a correlation curve.", groups)
    points = []
    for i, (k1, k2) in enumerate(groups):
        x = np.asarray(getattr(k1, "counts", k1))
        y = np.asarray(getattr(k2, "counts", k2))
        corr, err = corr_coefficient(x, y, seed + i, n_resamples)
        m1, m2 = float(x.mean()), float(y.mean())
        points.append(CorrPoint(0.5 * (m1 + m2), corr, err, gate_T, m1, m2))
    return points


def _check_mth(m1, m2, mu1, mu2):
    for name, value in (("m1", m1), ("m2", m2), ("mu1", mu1), ("mu2", mu2)):
        if not math.isfinite(value):
            raise TheoryDomainError(f"{name} must be finite.", value)
    if m1 < 0 or m2 < 0:
        raise TheoryDomainError("Detected means must be non-negative.", (m1, m2))
    if mu1 < 1 or mu2 < 1:
        raise TheoryDomainError("The number of modes must be at least 1.", (mu1, mu2))


def gamma_mth_theory(m1: float, m2: float, mu1: float, mu2: float) -> float:
    """
    Ideal correlation of a split multimode-thermal beam:
    sqrt(m1/mu1 * m2/mu2) / sqrt((1 + m1/mu1)(1 + m2/mu2)).
    """
    _check_mth(m1, m2, mu1, mu2)
    r1, r2 = m1 / mu1, m2 / mu2
    return math.sqrt(r1 * r2) / math.sqrt((1 + r1) * (1 + r2))


def _detected_means(k1_mean, k2_mean, eps1, eps2, dc1, dc2):
    b1 = k1_mean / (1 + eps1) - dc1
    b2 = k2_mean / (1 + eps2) - dc2
    if b1 < 0 or b2 < 0:
        raise TheoryDomainError("The detected means <k>/(1+eps) - <m>_dc must be non-negative.", (b1, b2))
    return b1, b2


def gamma_corrected_theory(k1_mean: float, k2_mean: float, eps1: float, eps2: float, dc1: float, dc2: float,
                           mu1: float, mu2: float) -> float:
    """
    Ideal correlation evaluated at the detected means <k>/(1+eps) - <m>_dc of each arm.

    Raises:
    TheoryDomainError: If a detected mean is negative.
    """
    b1, b2 = _detected_means(k1_mean, k2_mean, eps1, eps2, dc1, dc2)
    return gamma_mth_theory(b1, b2, mu1, mu2)


def gamma_cascade_theory(k1_mean: float, k2_mean: float, eps1: float, eps2: float, dc1: float, dc2: float,
                         mu1: float, mu2: float) -> float:
    """
    Correlation of the fired-cell counts under the full detector model.

    Cross talk multiplies the covariance by (1+eps1)(1+eps2) while each variance becomes
    (1+eps)^2 (var_m + dc) + eps(1-eps)(m + dc), with var_m = m + m^2/mu.
    """
    b1, b2 = _detected_means(k1_mean, k2_mean, eps1, eps2, dc1, dc2)
    _check_mth(b1, b2, mu1, mu2)
    cov = (1 + eps1) * (1 + eps2) * b1 * b2 / math.sqrt(mu1 * mu2)

    def variance(m, mu, eps, dc):
        return (1 + eps) ** 2 * (m + m * m / mu + dc) + eps * (1 - eps) * (m + dc)

    v1, v2 = variance(b1, mu1, eps1, dc1), variance(b2, mu2, eps2, dc2)
    if v1 == 0 or v2 == 0:
        return 0.0
    return cov / math.sqrt(v1 * v2)


def _per_gate(value, gate_T):
    if isinstance(value, dict):
        if gate_T not in value:
            raise InsufficientData(f"No value given for the {gate_T} ns gate.", gate_T)
        return float(value[gate_T])
    return float(value)


def fit_correlation(points, eps, mean_dc, model: str = "corrected") -> FitResult:
    """
    Single-parameter fit of the number of modes mu, shared by both arms, with eps and dark
    counts fixed (scalars or per-gate mappings).

    Parameters:
    model (str): "corrected" evaluates the ideal formula at the corrected means,
        "cascade" the full fired-cell model.
    """
    if model not in MODELS:
        raise TheoryDomainError(f"Unknown correlation model '{model}', expected one of {MODELS}.", model)
    if not points:
        raise EmptyInput("No correlation points to fit.", points)
    theory = gamma_corrected_theory if model == "corrected" else gamma_cascade_theory
    rows = []
    for p in points:
        e, d = _per_gate(eps, p.gate_T), _per_gate(mean_dc, p.gate_T)
        k1, k2 = p.arm_means()
        rows.append((k1, k2, e, d))
    y = np.array([p.corr for p in points])
    err = np.array([p.corr_err for p in points])
    if np.any(err <= 0):
        raise DegenerateData("Correlation points need positive errors to be fitted.", err)

    starts = []
    for (k1, k2, e, d), corr in zip(rows, y):
        b = math.sqrt(max(k1 / (1 + e) - d, 0.0) * max(k2 / (1 + e) - d, 0.0))
        if 0 < corr < 1 and b > 0:
            starts.append(b * (1 - corr) / corr)
    mu0 = max(float(np.median(starts)) if starts else 1.0, 1.0)

    def curve(_, mu):
        mu = max(mu, 1.0)
        return np.array([theory(k1, k2, e, e, d, d, mu, mu) for k1, k2, e, d in rows])

    fit = fit_model(curve, np.arange(len(rows)), y, err, [mu0], ["mu"], bounds=([1.0], [np.inf]),
                    label=f"{model} correlation fit")
    logger.info("Correlation fit (%s): mu = %.4f, chi2_nu = %.2f.", model, fit["mu"], fit.chi2_nu)
    return fit
