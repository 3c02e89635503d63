import logging
from abc import ABC
from abc import abstractmethod

import numpy as np

from helper_functions.helpers import Helpers
from photon_sources.sources import ShotCounts
from photon_sources.sources import attenuate
from photon_sources.sources import sample_shots
from detector_model.detector import DetectorParams
from detector_model.detector import mc_detect
from waveform_chain.events import sample_avalanches
from waveform_chain.trace import GateSpec
from waveform_chain.trace import cell_amplitude
from waveform_chain.trace import render_traces
from estimators.fano import fano_curve
from estimators.spectrum import build_spectrum
from estimators.spectrum import fit_gamma
from experiment_functions.config import ExperimentConfig
from experiment_functions.results import ResultsBundle
from custom_exceptions.exception import CustomException
from custom_exceptions.exception import ScenarioStageFailed

logger = logging.getLogger(__name__)


class Scenario(ABC):
    """
    Abstract base class of a builtin scenario: a named pipeline from the light source to a results bundle.
    """
    name = None
    description = None
    default_simulation = "counts"
    waveform_only = False

    def __init__(self, config: ExperimentConfig, jobs: int = None):
        self.__config = config
        self.__jobs = jobs or config.jobs

    @property
    def config(self) -> ExperimentConfig:
        return self.__config

    @property
    def jobs(self) -> int:
        return self.__jobs

    @property
    def seed(self) -> int:
        return self.__config.seed

    @property
    def simulation(self) -> str:
        """
        Returns:
            str: "counts" or "waveform"; "auto" resolves to the scenario default.
        """
        mode = self.__config.acquisition.simulation
        if self.waveform_only:
            return "waveform"
        return self.default_simulation if mode == "auto" else mode

    def sub_seed(self, *keys) -> int:
        return Helpers.derive_seed(self.seed, self.name, *keys)

    def bundle(self) -> ResultsBundle:
        bundle = ResultsBundle(self.name, self.__config.digest(), self.seed)
        bundle.notes.append(f"simulation={self.simulation}")
        return bundle

    def stage(self, name: str, func, *args, **kwargs):
        """
        Runs one stage of the scenario.

        Raises:
        ScenarioStageFailed: Naming the stage, when the stage raises a domain error.
        """
        logger.debug("%s: stage '%s'.", self.name, name)
        try:
            return func(*args, **kwargs)
        except ScenarioStageFailed:
            raise
        except CustomException as ex:
            raise ScenarioStageFailed(f"Scenario {self.name} failed at stage '{name}': {ex.message}", name) from ex

    @abstractmethod
    def run(self) -> ResultsBundle:
        """
        Abstract method that simulates, analyzes and returns the filled bundle.
        """
        ...

    # -- shared pipelines -------------------------------------------------

    def count_params(self, gate_T: float) -> DetectorParams:
        return self.__config.gate_params(gate_T)

    def photons(self, spec, key, trials: int = None) -> ShotCounts:
        return sample_shots(spec, trials or self.__config.trials, self.sub_seed("photons", *key), self.jobs)

    def gated_outputs(self, shots: ShotCounts, gates, key) -> dict:
        """
        Single-shot outputs of every gate, in gain units.

        Counts mode draws a detection per gate, x = gamma * k. Waveform mode renders one trace
        per shot and integrates every gate, starting at the laser time, on the same traces.

        Returns:
        dict[float, np.ndarray]: Gate width to outputs.
        """
        if self.simulation == "counts":
            gamma = self.__config.detector.gamma
            return {T: gamma * mc_detect(shots, self.count_params(T), self.sub_seed("detect", *key, T),
                                         self.jobs).counts.astype(float)
                    for T in gates}

        acq = self.__config.acquisition
        digitizer, shape = acq.digitizer.spec(), acq.pulse.shape()
        specs = [GateSpec(digitizer.laser_time, T) for T in gates]
        photons = shots.counts

        def batch(rng, start, size):
            traces = self.render(photons[start:start + size], digitizer, shape, rng)
            return np.column_stack([traces.integrate(gate) for gate in specs])

        parts = Helpers.run_batches(batch, self.sub_seed("traces", *key), len(shots), self.jobs)
        values = np.concatenate(parts)
        return {T: values[:, i] for i, T in enumerate(gates)}

    def render(self, photons, digitizer, shape, rng):
        detector = self.__config.detector
        avalanches = sample_avalanches(photons, self.__config.detector_params(), self.__config.xt(),
                                       digitizer.window, digitizer.laser_time, rng)
        return render_traces(avalanches, shape, digitizer, rng, detector.gamma, detector.gain_spread)

    def peak_heights(self, shots: ShotCounts, key) -> np.ndarray:
        """
        Peak-and-hold outputs in one-cell amplitudes: the largest baseline-subtracted sample
        of the search window around the laser time.
        """
        section = self.__config.acquisition.peak_hold
        digitizer, shape = section.digitizer.spec(), section.pulse.shape()
        search = GateSpec(digitizer.laser_time - section.search_before, section.search_before + section.search_after)
        amplitude = cell_amplitude(shape, self.__config.detector.gamma)
        photons = shots.counts

        def batch(rng, start, size):
            return self.render(photons[start:start + size], digitizer, shape, rng).peak(search) / amplitude

        return np.concatenate(Helpers.run_batches(batch, self.sub_seed("peak-hold", *key), len(shots), self.jobs))

    def intensity_groups(self, kind: str, key=()):
        """
        One photon stream at the scan intensity, thinned independently by every attenuation factor.

        Returns:
        list[tuple[float, ShotCounts]]: (factor, attenuated shots) pairs.
        """
        scan = self.__config.intensity_scan
        spec = self.__config.source.spec(kind, scan.mean_photons)
        shots = self.photons(spec, (kind, *key))
        return [(factor, attenuate(shots, factor, self.sub_seed("attenuate", kind, *key, factor), self.jobs))
                for factor in scan.attenuations]

    def fano_scan(self, kind: str, gates, key=()):
        """
        Intensity scan analyzed as Fano points per gate.

        Returns:
        tuple[dict, dict]: Gate width to FanoPoints, and gate width to the per-group outputs.
        """
        groups = self.stage("intensity scan", self.intensity_groups, kind, key)
        outputs = [self.stage("acquisition", self.gated_outputs, shots, gates, (kind, *key, factor))
                   for factor, shots in groups]
        per_gate = {T: [out[T] for out in outputs] for T in gates}
        points = {T: self.stage(f"Fano points {T:g} ns", fano_curve, per_gate[T], T,
                                self.sub_seed("bootstrap", kind, *key, T))
                  for T in gates}
        return points, per_gate

    def gain_at_gate(self, groups, gate_T: float, target: float = 2.0) -> float:
        """
        Gain of a gate: the configured gamma at count level, or the multi-peak fit of the
        group whose mean output is nearest `target` gains.
        """
        gamma = self.__config.detector.gamma
        if self.simulation == "counts":
            return gamma
        means = [abs(np.mean(values) / gamma - target) for values in groups]
        values = groups[int(np.argmin(means))]
        acq = self.__config.acquisition
        spectrum = build_spectrum(values, acq.bin_width * gamma)
        fit = self.stage(f"gain fit {gate_T:g} ns", fit_gamma, spectrum, acq.max_peaks)
        return fit["gamma"]

    def injected_eps(self, gate_T: float) -> float:
        """
        Cross talk the simulation puts into a gate: eps_effective(T) at count level, the fraction
        of secondaries landing inside the gate for traces.
        """
        if self.__config.detector.eps is not None or self.simulation == "counts":
            return self.count_params(gate_T).eps
        return self.__config.xt().gated_eps(gate_T)
