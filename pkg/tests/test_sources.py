import numpy as np
import pytest
from scipy import stats

from photon_sources.sources import COHERENT
from photon_sources.sources import MULTIMODE_THERMAL
from photon_sources.sources import PhotonDistribution
from photon_sources.sources import ShotCounts
from photon_sources.sources import SourceSpec
from photon_sources.sources import attenuate
from photon_sources.sources import coherent_pmf
from photon_sources.sources import mth_pmf
from photon_sources.sources import sample_shots
from photon_sources.sources import split_beam
from custom_exceptions.exception import InvalidDistribution
from custom_exceptions.exception import InvalidSourceSpec


@pytest.mark.parametrize("mean", [0.3, 3.0, 25.0])
def test_coherent_pmf_moments(mean):
    dist = coherent_pmf(mean)
    assert dist.probs.sum() == pytest.approx(1.0, abs=1e-9)
    assert dist.mean == pytest.approx(mean, rel=1e-9)
    assert dist.fano == pytest.approx(1.0, rel=1e-8)


@pytest.mark.parametrize("mean, modes", [(4.0, 2.0), (15.0, 1.2234), (0.5, 7.5)])
def test_mth_pmf_variance(mean, modes):
    dist = mth_pmf(mean, modes)
    assert dist.mean == pytest.approx(mean, rel=1e-9)
    assert dist.variance == pytest.approx(mean + mean ** 2 / modes, rel=1e-8)


def test_single_mode_thermal_is_bose_einstein():
    mean = 2.5
    dist = mth_pmf(mean, 1.0)
    n = np.arange(20)
    expected = mean ** n / (1 + mean) ** (n + 1)
    assert np.allclose(dist.pmf(n), expected, rtol=1e-12, atol=0)


def test_many_modes_approach_poisson():
    thermal = mth_pmf(3.0, 1e6)
    coherent = coherent_pmf(3.0)
    n = np.arange(15)
    assert np.allclose(thermal.pmf(n), coherent.pmf(n), atol=1e-5)


def test_zero_mean_is_point_mass():
    assert np.array_equal(coherent_pmf(0.0).probs, [1.0])
    assert np.array_equal(mth_pmf(0.0, 3.0).probs, [1.0])


def test_explicit_bound_with_heavy_tail_is_rejected():
    with pytest.raises(InvalidDistribution):
        coherent_pmf(10.0, n_max=5)
    with pytest.raises(InvalidDistribution):
        mth_pmf(10.0, 1.0, n_max=40)


@pytest.mark.parametrize("kwargs", [{"modes": 0.5}, {"mean_photons": -1.0}, {"kind": "laser"}])
def test_invalid_source_spec(kwargs):
    args = {"kind": MULTIMODE_THERMAL, "mean_photons": 5.0, "modes": 2.0}
    args.update(kwargs)
    with pytest.raises(InvalidSourceSpec):
        SourceSpec(**args)


def test_distribution_validation():
    with pytest.raises(InvalidDistribution):
        PhotonDistribution(np.array([0.5, 0.4]))
    with pytest.raises(InvalidDistribution):
        PhotonDistribution(np.array([1.2, -0.2]))


def test_pmf_outside_support_is_zero():
    dist = PhotonDistribution(np.array([0.25, 0.75]))
    assert np.array_equal(dist.pmf([-1, 0, 1, 5]), [0.0, 0.25, 0.75, 0.0])


def test_sample_shots_does_not_depend_on_jobs():
    spec = SourceSpec(MULTIMODE_THERMAL, 5.0, 1.5)
    serial = sample_shots(spec, 20000, seed=3, jobs=1)
    parallel = sample_shots(spec, 20000, seed=3, jobs=4)
    assert np.array_equal(serial.counts, parallel.counts)
    assert not np.array_equal(serial.counts, sample_shots(spec, 20000, seed=4).counts)


def test_sampled_thermal_moments():
    spec = SourceSpec(MULTIMODE_THERMAL, 5.0, 1.5)
    shots = sample_shots(spec, 200000, seed=11)
    assert shots.mean == pytest.approx(5.0, rel=0.02)
    assert shots.counts.var() == pytest.approx(5.0 + 25.0 / 1.5, rel=0.05)


def test_sampled_coherent_matches_poisson():
    shots = sample_shots(SourceSpec(COHERENT, 2.0), 100000, seed=5)
    observed = np.bincount(shots.counts, minlength=9)[:9]
    expected = stats.poisson.pmf(np.arange(9), 2.0) * len(shots)
    expected[-1] += stats.poisson.sf(8, 2.0) * len(shots)
    observed[-1] += np.count_nonzero(shots.counts > 8)
    _, p_value = stats.chisquare(observed, expected * observed.sum() / expected.sum())
    assert p_value > 0.001


def test_zero_trials_rejected():
    with pytest.raises(InvalidSourceSpec):
        sample_shots(SourceSpec(COHERENT, 2.0), 0, seed=1)


def test_split_beam_conserves_photons():
    shots = sample_shots(SourceSpec(MULTIMODE_THERMAL, 8.0, 2.0), 50000, seed=2)
    arm1, arm2 = split_beam(shots, 0.3, seed=9)
    assert np.array_equal(arm1.counts + arm2.counts, shots.counts)
    assert arm1.mean == pytest.approx(0.3 * shots.mean, rel=0.02)


def test_split_thermal_arms_are_correlated():
    shots = sample_shots(SourceSpec(MULTIMODE_THERMAL, 10.0, 2.0), 50000, seed=8)
    arm1, arm2 = split_beam(shots, 0.5, seed=1)
    covariance = np.cov(arm1.counts, arm2.counts)[0, 1]
    # cov = b1 b2 / mu for thinned multimode thermal light
    assert covariance == pytest.approx(5.0 * 5.0 / 2.0, rel=0.1)


def test_attenuate_scales_mean():
    shots = sample_shots(SourceSpec(COHERENT, 20.0), 50000, seed=6)
    weak = attenuate(shots, 0.1, seed=7)
    assert weak.mean == pytest.approx(2.0, rel=0.02)
    assert weak.fano == pytest.approx(1.0, abs=0.03)
    with pytest.raises(InvalidSourceSpec):
        attenuate(shots, 1.5)


def test_shot_counts_csv(tmp_path):
    shots = sample_shots(SourceSpec(MULTIMODE_THERMAL, 3.0, 2.0), 500, seed=42)
    path = tmp_path / "photons.csv"
    shots.to_csv(str(path))
    loaded = ShotCounts.from_csv(str(path))
    assert np.array_equal(loaded.counts, shots.counts)
    assert loaded.seed == 42
    assert loaded.label == shots.label


def test_shot_counts_validation():
    with pytest.raises(InvalidDistribution):
        ShotCounts(np.array([1, -2, 3]))
    with pytest.raises(InvalidDistribution):
        ShotCounts(np.array([1.5, 2.0]))
