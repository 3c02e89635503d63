"""
Photon-number statistics of the classical light used to probe the detector:
coherent (Poissonian) and multimode-thermal (negative-binomial) sources, as
analytic pmfs and as per-shot Monte Carlo samples, plus binomial beam splitting.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from helper_functions.helpers import Helpers
from custom_exceptions.exception import InvalidSourceSpec
from custom_exceptions.exception import InvalidDistribution

# tail mass left out when a truncation bound is chosen automatically
AUTO_TAIL = 1e-12
# largest tail (and normalization defect) a distribution may carry
TAIL_BOUND = 1e-9

COHERENT = "coherent"
MULTIMODE_THERMAL = "multimode-thermal"


@dataclass(frozen=True, eq=False)
class PhotonDistribution:
    """
    Finite probability mass function over counts n = 0..n_max.
    """
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise InvalidDistribution("A distribution needs a non-empty one-dimensional probability vector.", probs.shape)
        if not np.all(np.isfinite(probs)):
            raise InvalidDistribution("Probabilities must be finite.", probs)
        if probs.min() < -1e-15 or probs.max() > 1 + 1e-15:
            raise InvalidDistribution("Every probability must lie in [0, 1].", (probs.min(), probs.max()))
        total = probs.sum()
        if abs(total - 1.0) > TAIL_BOUND:
            raise InvalidDistribution(f"Probabilities sum to {total!r}, not 1 within {TAIL_BOUND}.", total)
        probs = np.clip(probs, 0.0, 1.0)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.probs.size)

    @property
    def mean(self) -> float:
        return float(self.support @ self.probs)

    @property
    def variance(self) -> float:
        k = self.support
        return float(((k - self.mean) ** 2) @ self.probs)

    @property
    def fano(self) -> float:
        mean = self.mean
        return self.variance / mean if mean > 0 else float("nan")

    def pmf(self, k) -> np.ndarray:
        """
        Probability of each count in k, zero outside the support.
        """
        k = np.asarray(k)
        inside = (k >= 0) & (k <= self.n_max)
        return np.where(inside, self.probs[np.clip(k, 0, self.n_max)], 0.0)

    @classmethod
    def point_mass(cls, n: int) -> "PhotonDistribution":
        probs = np.zeros(n + 1)
        probs[n] = 1.0
        return cls(probs)

    @classmethod
    def truncated(cls, probs, tail: float = AUTO_TAIL) -> "PhotonDistribution":
        """
        Builds a distribution from a raw vector, cutting it at the smallest n whose upper tail is below `tail`.
        """
        probs = np.clip(np.asarray(probs, dtype=float), 0.0, None)
        upper = np.cumsum(probs[::-1])[::-1]
        beyond = np.append(upper[1:], 0.0)
        n_max = int(np.argmax(beyond < tail)) if np.any(beyond < tail) else probs.size - 1
        return cls(probs[: n_max + 1])

    def to_csv(self, file_path: str, gamma: float = None):
        """
        Writes the (k, probability) table; with gamma, a third column gives the output abscissa gamma*k.
        """
        if gamma is None:
            Helpers.write_csv(file_path, ["k", "probability"], zip(self.support.tolist(), self.probs.tolist()))
        else:
            rows = zip(self.support.tolist(), (gamma * self.support).tolist(), self.probs.tolist())
            Helpers.write_csv(file_path, ["k", "x_out", "probability"], rows)


@dataclass(frozen=True)
class SourceSpec:
    kind: str = COHERENT
    mean_photons: float = 5.0
    modes: float = 1.0

    def __post_init__(self):
        if self.kind not in (COHERENT, MULTIMODE_THERMAL):
            raise InvalidSourceSpec(f"Unknown source kind '{self.kind}'.", self.kind)
        if not math.isfinite(self.mean_photons) or self.mean_photons < 0:
            raise InvalidSourceSpec("The mean photon number must be finite and non-negative.", self.mean_photons)
        if self.kind == MULTIMODE_THERMAL and (not math.isfinite(self.modes) or self.modes < 1):
            raise InvalidSourceSpec("The number of modes must be finite and at least 1.", self.modes)

    def scaled(self, factor: float) -> "SourceSpec":
        return SourceSpec(self.kind, self.mean_photons * factor, self.modes)

    def pmf(self, n_max: int = None) -> PhotonDistribution:
        if self.kind == COHERENT:
            return coherent_pmf(self.mean_photons, n_max)
        return mth_pmf(self.mean_photons, self.modes, n_max)

    def describe(self) -> str:
        if self.kind == COHERENT:
            return f"{self.kind}(mean={self.mean_photons!r})"
        return f"{self.kind}(mean={self.mean_photons!r}, modes={self.modes!r})"


@dataclass(frozen=True, eq=False)
class ShotCounts:
    """
    One non-negative integer count per trial, with the seed that produced it.
    """
    counts: np.ndarray
    seed: int = 0
    label: str = field(default="", compare=False)

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1:
            raise InvalidDistribution("Shot counts must be one-dimensional.", counts.shape)
        if counts.size and (not np.issubdtype(counts.dtype, np.integer)):
            if not np.all(counts == np.round(counts)):
                raise InvalidDistribution("Shot counts must be integers.", counts.dtype)
            counts = counts.astype(np.int64)
        if counts.size and counts.min() < 0:
            raise InvalidDistribution("Shot counts must be non-negative.", int(counts.min()))
        object.__setattr__(self, "counts", counts.astype(np.int64, copy=False))

    def __len__(self):
        return self.counts.size

    @property
    def mean(self) -> float:
        return float(self.counts.mean())

    @property
    def fano(self) -> float:
        return float(self.counts.var(ddof=1) / self.counts.mean())

    def histogram(self) -> np.ndarray:
        return np.bincount(self.counts)

    def to_csv(self, file_path: str):
        Helpers.write_csv(file_path, ["count"], ([int(c)] for c in self.counts),
                          comment=f"seed={self.seed}, spec={self.label}")

    @classmethod
    def from_csv(cls, file_path: str) -> "ShotCounts":
        seed, label = 0, ""
        with open(file_path) as file:
            first = file.readline()
        if first.startswith("#"):
            for part in first[1:].split(", ", 1):
                key, _, value = part.strip().partition("=")
                if key == "seed":
                    seed = int(value)
                elif key == "spec":
                    label = value
        counts = np.loadtxt(file_path, comments="#", skiprows=2 if first.startswith("#") else 1, dtype=np.int64, ndmin=1)
        return cls(counts, seed, label)


def _check_bound(probs: np.ndarray, n_max: int, mean: float):
    if n_max < 0:
        raise InvalidDistribution("The truncation bound must be non-negative.", n_max)
    tail = 1.0 - probs.sum()
    if tail > TAIL_BOUND:
        raise InvalidDistribution(
            f"Truncation at n_max={n_max} leaves tail mass {tail:.3g} above {TAIL_BOUND} for mean {mean}.", n_max
        )


def coherent_pmf(mean: float, n_max: int = None) -> PhotonDistribution:
    """
    Poissonian photon-number distribution of a coherent field.

    Parameters:
    mean (float): Mean photon number, >= 0.
    n_max (int): Truncation bound; chosen automatically when omitted.

    Raises:
    InvalidSourceSpec: For a negative or non-finite mean.
    InvalidDistribution: When an explicit n_max leaves more than 1e-9 of tail mass.
    """
    if not math.isfinite(mean) or mean < 0:
        raise InvalidSourceSpec("The mean photon number must be finite and non-negative.", mean)
    if mean == 0:
        return PhotonDistribution.point_mass(0) if n_max is None else PhotonDistribution(np.eye(1, n_max + 1)[0])
    if n_max is None:
        n_max = int(stats.poisson.isf(AUTO_TAIL, mean)) + 1
        while stats.poisson.sf(n_max, mean) >= AUTO_TAIL:
            n_max += 1
        probs = stats.poisson.pmf(np.arange(n_max + 1), mean)
        return PhotonDistribution.truncated(probs)
    probs = stats.poisson.pmf(np.arange(n_max + 1), mean)
    _check_bound(probs, n_max, mean)
    return PhotonDistribution(probs)


def mth_pmf(mean: float, modes: float, n_max: int = None) -> PhotonDistribution:
    """
    Multimode-thermal photon-number distribution with `modes` equally populated modes.

    Entry m equals Gamma(m+mu)/(m! Gamma(mu)) (mean/mu+1)^-mu (mu/mean+1)^-m, i.e. a negative
    binomial with size mu and success probability mu/(mu+mean); non-integer mu is allowed.

    Raises:
    InvalidSourceSpec: For modes < 1 or non-finite inputs.
    InvalidDistribution: When an explicit n_max leaves more than 1e-9 of tail mass.
    """
    if not (math.isfinite(mean) and math.isfinite(modes)):
        raise InvalidSourceSpec("Mean and modes must be finite.", (mean, modes))
    if mean < 0:
        raise InvalidSourceSpec("The mean photon number must be non-negative.", mean)
    if modes < 1:
        raise InvalidSourceSpec("The number of modes must be at least 1.", modes)
    if mean == 0:
        return PhotonDistribution.point_mass(0) if n_max is None else PhotonDistribution(np.eye(1, n_max + 1)[0])
    p = modes / (modes + mean)
    if n_max is None:
        n_max = int(stats.nbinom.isf(AUTO_TAIL, modes, p)) + 1
        while stats.nbinom.sf(n_max, modes, p) >= AUTO_TAIL:
            n_max += 1
        probs = stats.nbinom.pmf(np.arange(n_max + 1), modes, p)
        return PhotonDistribution.truncated(probs)
    probs = stats.nbinom.pmf(np.arange(n_max + 1), modes, p)
    _check_bound(probs, n_max, mean)
    return PhotonDistribution(probs)


def _draw(spec: SourceSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    if spec.mean_photons == 0:
        return np.zeros(size, dtype=np.int64)
    if spec.kind == COHERENT:
        return rng.poisson(spec.mean_photons, size)
    # Poisson draw with Gamma-distributed intensity: negative binomial for any real mu
    intensity = rng.gamma(spec.modes, spec.mean_photons / spec.modes, size)
    return rng.poisson(intensity)


def sample_shots(spec: SourceSpec, trials: int, seed: int, jobs: int = 1) -> ShotCounts:
    """
    Draws i.i.d. photon numbers from the source, deterministic given the seed.
    """
    if trials < 1:
        raise InvalidSourceSpec("At least one trial is required.", trials)
    parts = Helpers.run_batches(lambda rng, start, size: _draw(spec, rng, size), seed, trials, jobs)
    return ShotCounts(np.concatenate(parts).astype(np.int64), seed, spec.describe())


def split_beam(shots: ShotCounts, transmittance: float = 0.5, seed: int = 0, jobs: int = 1):
    """
    Routes every photon independently to arm 1 with probability `transmittance`, otherwise to arm 2.

    Returns:
    tuple[ShotCounts, ShotCounts]: The two arms; their shot-by-shot sum equals the input.
    """
    if not 0.0 <= transmittance <= 1.0:
        raise InvalidSourceSpec("The transmittance must lie in [0, 1].", transmittance)
    counts = shots.counts
    parts = Helpers.run_batches(
        lambda rng, start, size: rng.binomial(counts[start:start + size], transmittance), seed, len(shots), jobs
    )
    arm1 = np.concatenate(parts).astype(np.int64)
    return (ShotCounts(arm1, seed, f"{shots.label} arm1 t={transmittance!r}"),
            ShotCounts(counts - arm1, seed, f"{shots.label} arm2 t={transmittance!r}"))


def attenuate(shots: ShotCounts, factor: float, seed: int = 0, jobs: int = 1) -> ShotCounts:
    """
    Independent binomial thinning of a photon stream, as done by a neutral-density filter.
    """
    transmitted, _ = split_beam(shots, factor, seed, jobs)
    return ShotCounts(transmitted.counts, seed, f"{shots.label} x{factor!r}")
