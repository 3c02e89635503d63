import numpy as np
import pytest
from scipy import stats

from estimators.bootstrap import bootstrap
from estimators.bootstrap import bootstrap_pairs
from estimators.bootstrap import fano_statistic
from estimators.correlation import pearson_statistic
from estimators.fitting import FitResult
from estimators.fitting import fit_model
from estimators.fitting import interval
from custom_exceptions.exception import InvalidResult
from custom_exceptions.exception import EmptyInput
from custom_exceptions.exception import InsufficientData


def line(x, slope, intercept):
    return slope * x + intercept


def test_exact_line():
    x = np.linspace(0.0, 10.0, 11)
    fit = fit_model(line, x, 2.0 * x + 1.0, 0.1, [1.0, 0.0], ["slope", "intercept"])
    assert fit["slope"] == pytest.approx(2.0, rel=1e-9)
    assert fit["intercept"] == pytest.approx(1.0, rel=1e-9)
    assert fit.chi2_nu == pytest.approx(0.0, abs=1e-12)
    assert fit.dof == 9


def test_line_errors_match_linear_regression():
    rng = np.random.default_rng(4)
    x = np.linspace(0.0, 10.0, 50)
    y = 0.5 * x - 2.0 + rng.normal(0.0, 0.3, x.size)
    fit = fit_model(line, x, y, 0.3, [0.0, 0.0], ["slope", "intercept"])
    regression = stats.linregress(x, y)
    assert fit["slope"] == pytest.approx(regression.slope, rel=1e-8)
    # unscaled errors come from the stated sigma only
    expected = 0.3 / np.sqrt(np.sum((x - x.mean()) ** 2))
    assert fit.sigma("slope") == pytest.approx(expected, rel=1e-6)
    low, high = fit.ci95["slope"]
    assert high - low == pytest.approx(2 * 1.959964 * expected, rel=1e-5)


def test_scaled_covariance_uses_student_t():
    x = np.arange(6, dtype=float)
    y = np.array([0.1, 0.9, 2.2, 2.8, 4.1, 5.0])
    fit = fit_model(line, x, y, 1.0, [1.0, 0.0], ["slope", "intercept"], scale_covariance=True)
    sigma = fit.sigma("slope")
    low, high = fit.ci95["slope"]
    assert high - low == pytest.approx(2 * stats.t.ppf(0.975, 4) * sigma, rel=1e-9)


def test_fit_input_errors():
    with pytest.raises(EmptyInput):
        fit_model(line, [], [], 1.0, [1.0, 0.0], ["slope", "intercept"])
    with pytest.raises(InsufficientData):
        fit_model(line, [1.0], [2.0], 1.0, [1.0, 0.0], ["slope", "intercept"])
    with pytest.raises(InsufficientData):
        fit_model(line, [1.0, 2.0, 3.0], [2.0, 3.0, 4.0], [1.0, 0.0, 1.0], [1.0, 0.0], ["slope", "intercept"])


def test_interval_contains_value():
    low, high = interval(3.0, 0.5)
    assert low < 3.0 < high
    with pytest.raises(InvalidResult):
        FitResult({"a": 1.0}, {"a": (2.0, 3.0)}, 1.0, np.eye(1), ["a"])


def test_fit_result_dict():
    fit = fit_model(line, np.arange(5.0), np.arange(5.0), 1.0, [0.5, 0.5], ["slope", "intercept"])
    payload = fit.to_dict()
    assert set(payload) == {"params", "ci95", "chi2_nu", "dof", "unconstrained", "extras"}
    assert payload["ci95"]["slope"][0] <= payload["params"]["slope"] <= payload["ci95"]["slope"][1]


def test_bootstrap_fano_of_poisson_sample():
    data = np.random.default_rng(3).poisson(4.0, 50000)
    fano, err = bootstrap(data, fano_statistic, seed=1)
    # var(F) ~ 2/N for Poisson data
    assert err == pytest.approx(np.sqrt(2 / 50000), rel=0.3)
    assert abs(fano - 1.0) < 4 * err


def test_bootstrap_is_seeded():
    data = np.random.default_rng(3).normal(5.0, 1.0, 2000)
    assert bootstrap(data, fano_statistic, seed=7) == bootstrap(data, fano_statistic, seed=7)
    assert bootstrap(data, fano_statistic, seed=7)[1] != bootstrap(data, fano_statistic, seed=8)[1]
    with pytest.raises(EmptyInput):
        bootstrap(np.array([]), fano_statistic, seed=1)


def test_bootstrap_pairs_correlation():
    rng = np.random.default_rng(6)
    common = rng.poisson(3.0, 20000)
    x = common + rng.poisson(1.0, 20000)
    y = common + rng.poisson(1.0, 20000)
    corr, err = bootstrap_pairs(x, y, pearson_statistic, seed=2)
    assert corr == pytest.approx(np.corrcoef(x, y)[0, 1], rel=1e-9)
    assert corr == pytest.approx(0.75, abs=5 * err)
    assert 0 < err < 0.02
