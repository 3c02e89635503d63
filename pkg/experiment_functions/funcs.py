import os
import logging
from dataclasses import replace

import numpy as np

from helper_functions.helpers import Helpers
from photon_sources.sources import coherent_pmf
from photon_sources.sources import sample_shots
from detector_model.detector import mc_detect
from detector_model.detector import output_distribution
from waveform_chain.events import sample_avalanches
from waveform_chain.trace import GateSpec
from waveform_chain.trace import TraceBatch
from waveform_chain.trace import render_traces
from waveform_chain.trace import cell_amplitude
from waveform_chain.trace_io import read_traces
from waveform_chain.trace_io import write_binary
from estimators.bootstrap import bootstrap
from estimators.bootstrap import fano_statistic
from estimators.goodness import gof_pmf
from estimators.goodness import pearson_table
from estimators.spectrum import assign_k
from estimators.spectrum import build_spectrum
from estimators.spectrum import fit_gamma
from estimators.spectrum import pedestal_offset
from experiment_functions.config import load_config
from experiment_functions.config import ExperimentConfig
from experiment_functions.results import Curve
from experiment_functions.results import ResultsBundle
from scenarios.registry import BUILTIN_SCENARIOS
from scenarios.registry import get_scenario

logger = logging.getLogger(__name__)

OUT_DIR_VARIABLE = "SIPM_OUT_DIR"


def default_out_dir() -> str:
    return os.environ.get(OUT_DIR_VARIABLE, "./results")


class ExperimentFunctionManager:
    """
    Implements the operations of the command line: configuration handling, simulation,
    analysis of trace dumps and the builtin scenarios.
    """
    def load(self, config_path: str = None, overrides=None) -> ExperimentConfig:
        """
        Loads and validates a configuration.

        Parameters:
        config_path (str): YAML file, or None for the defaults.
        overrides (list[str]): "section.key=value" items applied before validation.
        """
        return load_config(config_path, overrides)

    def list_scenarios(self):
        """
        Prints the builtin scenarios with their descriptions.
        """
        width = max(len(name) for name in BUILTIN_SCENARIOS)
        for name, scenario in BUILTIN_SCENARIOS.items():
            print(f"{name.ljust(width)}  {scenario.description}")

    def validate(self, config: ExperimentConfig):
        """
        Prints the normalized configuration as YAML.
        """
        print(Helpers.dump_yaml(config.to_dict()), end="")

    def run_scenario(self, name: str, config: ExperimentConfig) -> ResultsBundle:
        """
        Runs a builtin scenario.

        Raises:
        UnknownScenario: If the name is not a builtin.
        ScenarioStageFailed: Naming the stage that failed.
        """
        scenario = get_scenario(name)(config)
        logger.info("Running scenario %s (seed %d, %d trials, %s).", name, config.seed, config.trials,
                    scenario.simulation)
        bundle = scenario.run()
        failed = [check for check, item in bundle.checks.items() if not item["passed"]]
        logger.info("Scenario %s finished: %d checks, %d failed.", name, len(bundle.checks), len(failed))
        return bundle

    def reproduce(self, name: str, config: ExperimentConfig, out_dir: str) -> str:
        """
        Runs a builtin scenario and writes its bundle under <out_dir>/<name>.
        """
        return self.run_scenario(name, config).write(out_dir)

    def simulate(self, config: ExperimentConfig, out_dir: str, traces: int = 0) -> str:
        """
        Source -> detector at every configured gate. Writes the photon numbers, the simulated
        fired-cell counts and the analytic pmf per gate and, with traces > 0, a binary dump of
        the first traces of the full waveform chain.

        Returns:
        str: The output directory.
        """
        spec = config.source.spec()
        directory = os.path.join(out_dir, "simulate")
        Helpers.create_directory(directory)
        shots = sample_shots(spec, config.trials, Helpers.derive_seed(config.seed, "simulate", "photons"),
                             config.jobs)
        shots.to_csv(os.path.join(directory, "photons.csv"))

        bundle = ResultsBundle("simulate", config.digest(), config.seed)
        rows = []
        for T in config.acquisition.gates:
            params = config.gate_params(T)
            counts = mc_detect(shots, params, Helpers.derive_seed(config.seed, "simulate", "detect", T),
                               config.jobs)
            theory = output_distribution(spec.pmf(), params)
            counts.to_csv(os.path.join(directory, f"counts_{T:g}.csv"))
            theory.to_csv(os.path.join(directory, f"pmf_{T:g}.csv"), params.gamma)
            rows.append({"gate_ns": T, "eps": params.eps, "mean_dc": params.mean_dc, "mean_k": counts.mean,
                         "mean_k_theory": theory.mean, "fano_k": counts.fano, "fano_k_theory": theory.fano})
        bundle.add_table("simulate", rows)

        if traces > 0:
            batch = self.render_first(config, shots.counts[:traces])
            write_binary(os.path.join(directory, "traces.bin"), batch)
            bundle.notes.append(f"traces={len(batch)}")
        Helpers.write_json(os.path.join(directory, "bundle.json"), bundle.to_dict())
        with open(os.path.join(directory, "tables.txt"), "w") as file:
            file.write(bundle.render_tables())
        logger.info("Simulated %d shots of %s into %s.", config.trials, spec.describe(), directory)
        return directory

    def render_first(self, config: ExperimentConfig, photons: np.ndarray) -> TraceBatch:
        acq, detector = config.acquisition, config.detector
        digitizer, shape = acq.digitizer.spec(), acq.pulse.shape()
        rng = np.random.default_rng(Helpers.derive_seed(config.seed, "simulate", "traces"))
        avalanches = sample_avalanches(photons, config.detector_params(), config.xt(), digitizer.window,
                                       digitizer.laser_time, rng)
        return render_traces(avalanches, shape, digitizer, rng, detector.gamma, detector.gain_spread)

    def analyze(self, config: ExperimentConfig, trace_file: str, out_dir: str, peak_hold: bool = False,
                bin_width: float = None) -> str:
        """
        Analyzes a trace dump: integrates every configured gate (or takes the peak-and-hold
        maximum), fits the gain on the pulse-height spectrum, assigns fired-cell counts and
        reports their Fano factor and a Poisson goodness of fit.

        Raw dumps carry codes only (lsb = 1); their codes are scaled with the configured
        digitizer so that gate integrals come out in gain units and peaks in one-cell amplitudes.

        Parameters:
        trace_file (str): Binary dump, or a single-trace CSV.
        peak_hold (bool): Use the peak-and-hold search window instead of the gates.
        bin_width (float): Spectrum bin width in output units; by default the configured one.

        Returns:
        str: The output directory.

        Raises:
        InvalidTraceFile: If the dump cannot be read.
        InvalidGate: If a gate does not fit in the recorded window.
        """
        batch = TraceBatch.from_records(read_traces(trace_file))
        gamma0 = config.detector.gamma
        section = config.acquisition.peak_hold if peak_hold else config.acquisition
        digitizer = section.digitizer.spec()
        amplitude = cell_amplitude(section.pulse.shape(), gamma0)
        if batch.lsb == 1.0:
            batch = replace(batch, lsb=digitizer.lsb(amplitude))
        bundle = ResultsBundle("analyze", config.digest(), config.seed)
        bundle.notes.append(f"traces={os.path.basename(trace_file)}")
        if peak_hold:
            laser = digitizer.laser_time
            search = GateSpec(laser - section.search_before, section.search_before + section.search_after)
            outputs = {"peak": batch.peak(search) / amplitude}
            width = bin_width or section.bin_width
        else:
            laser = digitizer.laser_time
            outputs = {f"{T:g}": batch.integrate(GateSpec(laser, T)) for T in section.gates}
            width = bin_width or section.bin_width * gamma0

        rows = []
        for label, values in outputs.items():
            spectrum = build_spectrum(values, width)
            fit = fit_gamma(spectrum, config.acquisition.max_peaks, exclude_pedestal=peak_hold)
            gamma = fit["gamma"]
            offset = pedestal_offset(fit, exclude_pedestal=peak_hold)
            k = assign_k(values, gamma, offset)
            fano, fano_err = bootstrap(values - offset, fano_statistic,
                                       Helpers.derive_seed(config.seed, "analyze", label))
            theory = coherent_pmf(float(k.mean()))
            chi2_nu = gof_pmf(k, theory, 1)
            bundle.add_fit(f"gain_{label}", fit)
            bundle.add_table(f"pearson_{label}", pearson_table(k, theory))
            bundle.add_curve(Curve(f"spectrum_{label}", spectrum.centers, spectrum.counts,
                                   np.sqrt(spectrum.counts), x_label="output", y_label="counts"))
            rows.append({"output": label, "gamma": gamma, "gamma_ci95": list(fit.ci95["gamma"]),
                         "mean_k": float(k.mean()),
                         "fano": fano, "fano_err": fano_err, "poisson_chi2_nu": chi2_nu})
        bundle.add_table("analysis", rows)
        logger.info("Analyzed %d traces of %s.", len(batch), trace_file)
        return bundle.write(out_dir)
