"""
Fano-factor analysis: per-intensity Fano points with bootstrap errors and the fits of
the coherent plateau, the multimode-thermal curve and the cross talk versus gate width.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from estimators.fitting import FitResult
from estimators.fitting import fit_model
from estimators.bootstrap import bootstrap
from estimators.bootstrap import fano_statistic
from estimators.bootstrap import N_RESAMPLES
from custom_exceptions.exception import EmptyInput
from custom_exceptions.exception import DegenerateData
from custom_exceptions.exception import FitOutOfDomain
from custom_exceptions.exception import InsufficientData

logger = logging.getLogger(__name__)

MIN_GROUPS = 2
MIN_SHOTS = 1000
EPS_BREAKPOINT = 150.0


@dataclass(frozen=True)
class FanoPoint:
    mean_x: float
    fano: float
    fano_err: float
    gate_T: float = float("nan")
    n_shots: int = 0


def fano_curve(groups, gate_T: float = float("nan"), seed: int = 0, n_resamples: int = N_RESAMPLES):
    """
    One FanoPoint per intensity group: mean, F = var/mean and its bootstrap error.

    Parameters:
    groups (list): Per-intensity single-shot outputs (arrays or ShotCounts).
    gate_T (float): Gate width the outputs were integrated over, in ns.
    seed (int): Seed of the bootstrap; group i uses seed + i.

    Raises:
    InsufficientData: With fewer than 2 groups or fewer than 1000 shots in a group.
    DegenerateData: If a group has zero mean.
    """
    groups = [np.asarray(getattr(group, "counts", group)) for group in groups]
    if len(groups) < MIN_GROUPS:
        raise InsufficientData(f"A Fano curve needs at least {MIN_GROUPS} intensities.", len(groups))
    points = []
    for i, data in enumerate(groups):
        if data.size < MIN_SHOTS:
            raise InsufficientData(f"Intensity group {i} has {data.size} shots, fewer than {MIN_SHOTS}.", data.size)
        mean = float(data.mean())
        if mean == 0:
            raise DegenerateData(f"Intensity group {i} has zero mean output.", i)
        fano, fano_err = bootstrap(data, fano_statistic, seed + i, n_resamples)
        points.append(FanoPoint(mean, fano, fano_err, gate_T, int(data.size)))
    return points


def fano_coherent_value(gamma: float, eps: float) -> float:
    return gamma * (1 + 3 * eps) / (1 + eps)


def fano_mth_model(mean_x, mu: float, x_dc: float, gamma: float, eps: float):
    """
    F_mth(x) = (1/mu) (1 - x_dc/x)^2 x + gamma (1 + 3 eps)/(1 + eps).
    """
    mean_x = np.asarray(mean_x, dtype=float)
    return (1.0 / mu) * (1 - x_dc / mean_x) ** 2 * mean_x + fano_coherent_value(gamma, eps)


def _arrays(points):
    if not points:
        raise EmptyInput("No Fano points to fit.", points)
    x = np.array([p.mean_x for p in points])
    y = np.array([p.fano for p in points])
    err = np.array([p.fano_err for p in points])
    if np.any(err <= 0):
        raise DegenerateData("Fano points need positive errors to be fitted.", err)
    return x, y, err


def fit_fano_coherent(points, gamma: float) -> FitResult:
    """
    Horizontal-line fit F = gamma(1+3 eps)/(1+eps) with eps the only free parameter.

    Raises:
    FitOutOfDomain: If the plateau corresponds to eps outside [0, 1).
    """
    x, y, err = _arrays(points)
    plateau = float(np.sum(y / err ** 2) / np.sum(1 / err ** 2))
    ratio = plateau / gamma
    if ratio >= 3:
        raise FitOutOfDomain("The Fano plateau is at or above 3 gamma; no eps in [0, 1) reproduces it.", ratio)
    eps0 = (ratio - 1) / (3 - ratio)
    if abs(eps0) < 1e-12:
        eps0 = 0.0

    def model(xx, eps):
        return np.full_like(xx, fano_coherent_value(gamma, eps))

    fit = fit_model(model, x, y, err, [eps0], ["eps"], label="coherent Fano fit")
    eps = fit["eps"]
    if abs(eps) < 1e-12:
        fit.params["eps"] = eps = 0.0
    if not 0.0 <= eps < 1.0:
        raise FitOutOfDomain(f"The fitted cross-talk probability {eps:.4g} is outside [0, 1).", eps)
    logger.info("Coherent Fano plateau %.5g -> eps = %.4f.", plateau, eps)
    return fit


def fit_fano_linear(points) -> FitResult:
    """
    Straight-line fit F = slope * <x_out> + intercept, the flatness diagnostic of the coherent case.
    """
    x, y, err = _arrays(points)
    slope0, intercept0 = np.polyfit(x, y, 1, w=1 / err)

    def model(xx, slope, intercept):
        return slope * xx + intercept

    return fit_model(model, x, y, err, [slope0, intercept0], ["slope", "intercept"], label="linear Fano fit")


def _eps_for(eps, gate_T: float) -> float:
    if isinstance(eps, dict):
        if gate_T not in eps:
            raise InsufficientData(f"No cross-talk value given for the {gate_T} ns gate.", gate_T)
        return float(eps[gate_T])
    return float(eps)


def dcr_from_dark_mean(x_dc: float, gamma: float, gate_T: float) -> float:
    """
    Dark-count rate in Hz from the mean dark output of a gate of gate_T ns: DCR = x_dc / (gamma T).
    """
    return x_dc / (gamma * gate_T * 1e-9)


def fit_fano_mth(points, gamma: float, eps) -> FitResult:
    """
    Joint fit of multimode-thermal Fano points over several gates: mu is shared and the mean
    dark output scales linearly with the gate, x_dc(T) = slope * T. Uncertainties are rescaled
    so that chi2_nu = 1.

    Parameters:
    points (list[FanoPoint]): Points of all gates; gate_T selects the gate.
    gamma (float): Gain, fixed.
    eps (float | dict[float, float]): Cross-talk probability, fixed, optionally per gate.

    Returns:
    FitResult: mu and slope, plus x_dc_<T> per gate; the DCR per gate in extras.

    Raises:
    FitOutOfDomain: If the fitted mu is below 1.
    """
    x, y, err = _arrays(points)
    gates = np.array([p.gate_T for p in points])
    if not np.all(np.isfinite(gates)) or np.any(gates <= 0):
        raise InsufficientData("Every thermal Fano point needs its gate width.", gates)
    plateau = np.array([fano_coherent_value(gamma, _eps_for(eps, T)) for T in gates])
    excess = y - plateau
    usable = excess > 0
    mu0 = float(np.median(x[usable] / excess[usable])) if usable.any() else 1.0
    mu0 = max(mu0, 1.0)

    def model(xx, mu, slope):
        return (1.0 / mu) * (1 - slope * gates / xx) ** 2 * xx + plateau

    fit = fit_model(model, x, y, err, [mu0, 0.0], ["mu", "slope"], bounds=([1e-6, 0.0], [np.inf, np.inf]),
                    scale_covariance=True, label="multimode-thermal Fano fit")
    if fit["mu"] < 1.0:
        raise FitOutOfDomain(f"The fitted number of modes {fit['mu']:.4g} is below 1.", fit["mu"])
    slope, slope_sigma = fit["slope"], fit.sigma("slope")
    for T in sorted(set(gates.tolist())):
        key = f"x_dc_{T:g}"
        fit.params[key] = slope * T
        low, high = fit.ci95["slope"]
        fit.ci95[key] = (low * T, high * T)
        fit.extras[f"dcr_{T:g}"] = dcr_from_dark_mean(slope * T, gamma, T)
        fit.extras[f"dcr_err_{T:g}"] = dcr_from_dark_mean(slope_sigma * T, gamma, T)
    logger.info("Thermal Fano fit: mu = %.4f, DCR = %.3g Hz.", fit["mu"], dcr_from_dark_mean(slope, gamma, 1.0))
    return fit


def eps_vs_gate_model(gate_T, eps0: float, a: float, tau_xc: float):
    gate_T = np.asarray(gate_T, dtype=float)
    return eps0 + (tau_xc / gate_T) * a * -np.expm1(-gate_T / tau_xc)


def _profile_start(T, eps, err):
    best = None
    for tau in np.geomspace(1.0, 1e4, 200):
        design = np.column_stack([np.ones_like(T), (tau / T) * -np.expm1(-T / tau)]) / err[:, None]
        coef, *_ = np.linalg.lstsq(design, eps / err, rcond=None)
        cost = np.sum((design @ coef - eps / err) ** 2)
        if best is None or cost < best[0]:
            best = (cost, [coef[0], coef[1], tau])
    return best[1]


def fit_eps_vs_gate(points, breakpoint: float = EPS_BREAKPOINT) -> FitResult:
    """
    Cross talk versus gate width: eps0, a, tau_xc for gates up to the breakpoint and the
    linear tail eps = m T + q (T in s, m in Hz) beyond it.

    A delayed amplitude a compatible with zero at 2 sigma leaves tau_xc unidentifiable; it is
    then reported as NaN and listed in `unconstrained`.

    Parameters:
    points (list[tuple[float, float, float]]): (T in ns, eps, eps error) triples.

    Raises:
    InsufficientData: With fewer than 3 short-gate or 2 long-gate points.
    """
    data = np.array(points, dtype=float).reshape(-1, 3)
    short, long_ = data[data[:, 0] <= breakpoint], data[data[:, 0] > breakpoint]
    if len(short) < 3 or len(long_) < 2:
        raise InsufficientData(f"Need at least 3 gates up to {breakpoint:g} ns and 2 beyond, got "
                               f"{len(short)} and {len(long_)}.", (len(short), len(long_)))

    T, eps, err = short.T
    start = _profile_start(T, eps, err)
    head = fit_model(eps_vs_gate_model, T, eps, err, start, ["eps0", "a", "tau_xc"],
                     bounds=([-np.inf, -np.inf, 1e-3], [np.inf, np.inf, np.inf]), label="short-gate eps fit")

    T_long, eps_long, err_long = long_.T
    seconds = T_long * 1e-9
    m0, q0 = np.polyfit(seconds, eps_long, 1, w=1 / err_long)
    tail = fit_model(lambda s, m, q: m * s + q, seconds, eps_long, err_long, [m0, q0], ["m", "q"],
                     label="long-gate eps fit")

    dof = head.dof + tail.dof
    chi2 = sum(f.chi2_nu * f.dof for f in (head, tail) if f.dof > 0)
    result = FitResult({**head.params, **tail.params}, {**head.ci95, **tail.ci95},
                       chi2 / dof if dof > 0 else float("nan"), block_diag(head.covariance, tail.covariance),
                       head.param_names + tail.param_names, dof)
    if abs(result["a"]) < 2 * result.sigma("a"):
        logger.warning("Delayed cross talk a = %.3g is compatible with zero; tau_xc is unconstrained.", result["a"])
        result.params["tau_xc"] = float("nan")
        result.ci95["tau_xc"] = (float("nan"), float("nan"))
        result.unconstrained.append("tau_xc")
    return result


def predict_eps(fit: FitResult, gate_T: float) -> float:
    """
    Cross talk predicted by a fit_eps_vs_gate result for a gate of gate_T ns.
    """
    if gate_T > EPS_BREAKPOINT:
        return fit["m"] * gate_T * 1e-9 + fit["q"]
    if "tau_xc" in fit.unconstrained:
        return fit["eps0"] + fit["a"]
    return float(eps_vs_gate_model(gate_T, fit["eps0"], fit["a"], fit["tau_xc"]))
