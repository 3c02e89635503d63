"""
Bootstrap standard errors. Statistics are written against (values, weights) so that a
resample is just a new weight vector over the observed values.
"""
import numpy as np

from custom_exceptions.exception import EmptyInput

N_RESAMPLES = 200
DISTINCT_RATIO = 4


def weighted_mean_var(values: np.ndarray, weights: np.ndarray):
    total = weights.sum()
    mean = (values * weights).sum() / total
    var = ((values - mean) ** 2 * weights).sum() / (total - 1)
    return mean, var


def fano_statistic(values: np.ndarray, weights: np.ndarray) -> float:
    mean, var = weighted_mean_var(values, weights)
    return var / mean


def _resample_weights(data: np.ndarray, rng: np.random.Generator, n_resamples: int):
    values, counts = np.unique(data, return_counts=True)
    # few distinct values (counts, or gamma * counts): multinomial over the values is the same resampling
    if np.issubdtype(data.dtype, np.integer) or values.size * DISTINCT_RATIO <= data.size:
        draws = rng.multinomial(data.size, counts / data.size, size=n_resamples)
        return values.astype(float), counts.astype(float), draws.astype(float)
    draws = np.stack([np.bincount(rng.integers(0, data.size, data.size), minlength=data.size)
                      for _ in range(n_resamples)])
    return data.astype(float), np.ones(data.size), draws.astype(float)


def bootstrap(data, statistic, seed: int, n_resamples: int = N_RESAMPLES):
    """
    Bootstrap estimate of a statistic.

    Parameters:
    data (np.ndarray): One-dimensional sample. Samples with few distinct values are resampled with a
        multinomial draw over their distinct values, real samples by index.
    statistic (callable): statistic(values, weights) -> float.
    seed (int): Seed of the resampling generator.
    n_resamples (int): Number of replicates.

    Returns:
    tuple[float, float]: The statistic on the full sample and the replicate standard deviation.

    Raises:
    EmptyInput: If the sample is empty.
    """
    data = np.asarray(data)
    if data.size == 0:
        raise EmptyInput("Cannot bootstrap an empty sample.", data)
    values, weights, draws = _resample_weights(data, np.random.default_rng(seed), n_resamples)
    replicates = np.array([statistic(values, w) for w in draws])
    return float(statistic(values, weights)), float(replicates.std(ddof=1))


def bootstrap_pairs(x, y, statistic, seed: int, n_resamples: int = N_RESAMPLES):
    """
    Bootstrap of a paired statistic, statistic(x, y, weights) -> float, resampling shots jointly.
    """
    x, y = np.asarray(x), np.asarray(y)
    if x.size == 0:
        raise EmptyInput("Cannot bootstrap an empty sample.", x)
    if np.issubdtype(x.dtype, np.integer) and np.issubdtype(y.dtype, np.integer):
        # pair codes keep the multinomial path for integer pairs
        width = int(y.max()) - int(y.min()) + 1
        codes = (x.astype(np.int64) - x.min()) * width + (y.astype(np.int64) - y.min())
        _, first, counts = np.unique(codes, return_index=True, return_counts=True)
        ux, uy = x[first].astype(float), y[first].astype(float)
        draws = np.random.default_rng(seed).multinomial(x.size, counts / x.size, size=n_resamples)
        weights = counts.astype(float)
    else:
        ux, uy = x.astype(float), y.astype(float)
        rng = np.random.default_rng(seed)
        draws = np.stack([np.bincount(rng.integers(0, x.size, x.size), minlength=x.size)
                          for _ in range(n_resamples)])
        weights = np.ones(x.size)
    replicates = np.array([statistic(ux, uy, w.astype(float)) for w in draws])
    return float(statistic(ux, uy, weights)), float(replicates.std(ddof=1))
