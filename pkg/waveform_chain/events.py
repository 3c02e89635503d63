"""
Temporal placement of avalanches inside one acquisition window: detected photons at
the laser time, dark counts as a homogeneous Poisson process and first-order
prompt or delayed cross-talk secondaries.
"""
from dataclasses import dataclass

import numpy as np

from detector_model.detector import DetectorParams
from waveform_chain.pulse import TemporalXTParams
from custom_exceptions.exception import EventOutsideWindow

PHOTON, DARK, PROMPT, DELAYED = 0, 1, 2, 3


@dataclass(frozen=True, eq=False)
class AvalancheBatch:
    """
    Every avalanche of a batch of shots, one entry per fired cell.
    """
    n_shots: int
    shot: np.ndarray
    time: np.ndarray
    kind: np.ndarray
    delay: np.ndarray

    @property
    def size(self) -> int:
        return self.shot.size

    def fired_cells(self) -> np.ndarray:
        return np.bincount(self.shot, minlength=self.n_shots)


def sample_avalanches(photons: np.ndarray, params: DetectorParams, xt: TemporalXTParams,
                      window: float, laser_time: float, rng: np.random.Generator) -> AvalancheBatch:
    """
    Places the avalanches of many shots at once.

    Parameters:
    photons (np.ndarray): Impinging photon number of each shot.
    params (DetectorParams): Efficiency, dark-count rate (Hz) and gain settings.
    xt (TemporalXTParams): Prompt and delayed cross-talk parameters.
    window (float): Acquisition window in ns.
    laser_time (float): Arrival time of the light pulse in ns.
    rng (np.random.Generator): Source of randomness.
    """
    if not 0.0 <= laser_time <= window:
        raise EventOutsideWindow(f"The laser time {laser_time} ns is outside the {window} ns window.", laser_time)
    photons = np.asarray(photons, dtype=np.int64)
    n_shots = photons.size
    shots = np.arange(n_shots)

    detected = rng.binomial(photons, params.eta)
    photon_shot = np.repeat(shots, detected)
    n_dark = rng.poisson(params.dcr * window * 1e-9, n_shots)
    dark_shot = np.repeat(shots, n_dark)
    dark_time = rng.uniform(0.0, window, dark_shot.size)

    primary_shot = np.concatenate([photon_shot, dark_shot])
    primary_time = np.concatenate([np.full(photon_shot.size, float(laser_time)), dark_time])
    primary_kind = np.concatenate([np.full(photon_shot.size, PHOTON), np.full(dark_shot.size, DARK)])

    # at most one secondary per primary: prompt with eps0, delayed with the integral over the remaining window
    remaining = window - primary_time
    u = rng.random(primary_shot.size)
    prompt = u < xt.eps0
    delayed = ~prompt & (u < xt.eps0 + xt.delayed_probability(remaining))
    delays = xt.draw_delay(rng, remaining[delayed])

    shot = np.concatenate([primary_shot, primary_shot[prompt], primary_shot[delayed]])
    time = np.concatenate([primary_time, primary_time[prompt],
                           np.minimum(primary_time[delayed] + delays, window)])
    kind = np.concatenate([primary_kind, np.full(prompt.sum(), PROMPT), np.full(delayed.sum(), DELAYED)])
    delay = np.concatenate([np.full(primary_shot.size + prompt.sum(), np.nan), delays])
    order = np.argsort(shot, kind="stable")
    return AvalancheBatch(n_shots, shot[order], time[order], kind[order], delay[order])


def place_events(shot_photons: int, params: DetectorParams, xt: TemporalXTParams,
                 window: float, laser_time: float, seed: int):
    """
    Fired cells of one shot grouped by time.

    Returns:
    list[tuple[float, int]]: (time in ns, number of cells fired at that time), sorted by time.
    """
    batch = sample_avalanches(np.array([shot_photons]), params, xt, window, laser_time,
                              np.random.default_rng(seed))
    times, counts = np.unique(batch.time, return_counts=True)
    return [(float(t), int(c)) for t, c in zip(times, counts)]
