"""
Weighted nonlinear least squares with linearized confidence intervals.
"""
import math
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.optimize import least_squares

from custom_exceptions.exception import EmptyInput
from custom_exceptions.exception import InsufficientData
from custom_exceptions.exception import FitDidNotConverge
from custom_exceptions.exception import InvalidResult

logger = logging.getLogger(__name__)

CHI2_WARNING = 5.0
TOLERANCE = 1e-12


@dataclass
class FitResult:
    """
    Fitted parameters with their 95% confidence intervals.

    Attributes:
        params: Parameter name to value.
        ci95: Parameter name to (low, high).
        chi2_nu: Reduced chi-square (NaN when the fit has no degree of freedom).
        covariance: Covariance matrix ordered as param_names.
        param_names: Names of the fitted parameters.
        dof: Degrees of freedom.
        unconstrained: Parameters the data cannot identify.
        extras: Derived quantities reported with the fit.
    """
    params: dict
    ci95: dict
    chi2_nu: float
    covariance: np.ndarray
    param_names: list
    dof: int = 0
    unconstrained: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.chi2_nu < 0:
            raise InvalidResult(f"chi2_nu must be non-negative, got {self.chi2_nu}", self.chi2_nu)
        for name, (low, high) in self.ci95.items():
            value = self.params[name]
            if math.isfinite(value) and not low - 1e-12 * abs(value) <= value <= high + 1e-12 * abs(value):
                raise InvalidResult(f"The interval of {name} does not contain its value.", (low, high))

    def sigma(self, name: str) -> float:
        if name in self.param_names:
            i = self.param_names.index(name)
            return float(math.sqrt(max(self.covariance[i, i], 0.0)))
        low, high = self.ci95[name]
        return (high - low) / (2 * stats.norm.ppf(0.975))

    def to_dict(self) -> dict:
        return {
            "params": {k: float(v) for k, v in self.params.items()},
            "ci95": {k: [float(low), float(high)] for k, (low, high) in self.ci95.items()},
            "chi2_nu": float(self.chi2_nu),
            "dof": int(self.dof),
            "unconstrained": list(self.unconstrained),
            "extras": {k: float(v) for k, v in self.extras.items()},
        }

    def __getitem__(self, name: str) -> float:
        return self.params[name]


def interval(value: float, sigma: float, dof: int = 0, scaled: bool = False):
    """
    Symmetric 95% interval: Student t quantile for scaled fits, normal quantile otherwise.
    """
    quantile = stats.t.ppf(0.975, dof) if scaled and dof > 0 else stats.norm.ppf(0.975)
    return (value - quantile * sigma, value + quantile * sigma)


def fit_model(model, x, y, sigma, p0, names, bounds=(-np.inf, np.inf), scale_covariance: bool = False,
              label: str = "fit") -> FitResult:
    """
    Minimizes sum(((model(x, *p) - y) / sigma)^2) and linearizes at the optimum.

    Parameters:
    model (callable): model(x, *params) -> predicted y.
    x, y, sigma (np.ndarray): Abscissae, ordinates and their standard errors.
    p0 (list[float]): Starting values.
    names (list[str]): Parameter names, in the order of p0.
    bounds (tuple): Lower and upper bounds passed to the trust-region solver.
    scale_covariance (bool): Rescale the covariance so that chi2_nu = 1.

    Raises:
    EmptyInput: If no point is given.
    InsufficientData: If there are fewer points than parameters.
    FitDidNotConverge: If the solver stops without meeting its tolerances.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), y.shape)
    if y.size == 0:
        raise EmptyInput(f"No data points for the {label}.", label)
    if y.size < len(p0):
        raise InsufficientData(f"The {label} needs at least {len(p0)} points, got {y.size}.", y.size)
    if not np.all(sigma > 0):
        raise InsufficientData(f"All uncertainties of the {label} must be positive.", sigma)

    def residuals(p):
        return (model(x, *p) - y) / sigma

    try:
        result = least_squares(residuals, np.asarray(p0, dtype=float), jac="3-point", bounds=bounds,
                               x_scale="jac", ftol=TOLERANCE, xtol=TOLERANCE, gtol=TOLERANCE, max_nfev=10000)
    except (ValueError, FloatingPointError) as ex:
        raise FitDidNotConverge(f"The {label} failed: {ex}", p0)
    if not result.success or not np.all(np.isfinite(result.x)):
        raise FitDidNotConverge(f"The {label} did not converge: {result.message}", result.x)

    dof = y.size - len(p0)
    chi2 = float(np.sum(result.fun ** 2))
    chi2_nu = chi2 / dof if dof > 0 else float("nan")
    covariance = np.linalg.pinv(result.jac.T @ result.jac)
    scaled = scale_covariance and dof > 0
    if scaled:
        covariance = covariance * chi2_nu
    params = {name: float(value) for name, value in zip(names, result.x)}
    ci95 = {name: interval(params[name], math.sqrt(max(covariance[i, i], 0.0)), dof, scaled)
            for i, name in enumerate(names)}
    if dof > 0 and chi2_nu > CHI2_WARNING:
        logger.warning("The %s has chi2_nu = %.2f.", label, chi2_nu)
    logger.debug("The %s converged after %d evaluations: %s", label, result.nfev, params)
    return FitResult(params, ci95, chi2_nu, covariance, list(names), dof)
