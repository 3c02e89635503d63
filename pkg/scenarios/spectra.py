"""
Scenarios built on single-shot spectra: the dark staircase, gated pulse-height spectra,
the gate-width signal-to-noise scan and the peak-and-hold acquisition.
"""
import math
import logging

import numpy as np
from scipy import stats

from helper_functions.helpers import Helpers
from photon_sources.sources import COHERENT
from photon_sources.sources import MULTIMODE_THERMAL
from photon_sources.sources import coherent_pmf
from waveform_chain.trace import cell_amplitude
from waveform_chain.trace import threshold_scan
from estimators.goodness import gof_pmf
from estimators.goodness import pearson_table
from estimators.spectrum import assign_k
from estimators.spectrum import build_spectrum
from estimators.spectrum import fit_gamma
from estimators.spectrum import pedestal_offset
from estimators.spectrum import snr_integral
from estimators.spectrum import snr_peak
from estimators.spectrum import valley_to_peak
from experiment_functions.results import Curve
from scenarios.scenario_interface import Scenario

logger = logging.getLogger(__name__)

STAIRCASE_BATCH = 8
SINGLE_LEVEL = 0.5
DOUBLE_LEVEL = 1.5
SNR_OPTIMUM = (100.0, 250.0)
SNR_RANGE = (10.0, 16.0)
SPACING_TOLERANCE = 0.02


def spectrum_curve(name: str, spectrum, x_label: str) -> Curve:
    return Curve(name, spectrum.centers, spectrum.counts, np.sqrt(spectrum.counts), x_label=x_label,
                 y_label="counts")


class StaircaseScenario(Scenario):
    name = "staircase"
    description = "Dark-count rate versus threshold; DCR and prompt cross talk from the first two steps."
    waveform_only = True

    def run(self):
        bundle = self.bundle()
        section = self.config.acquisition.staircase
        digitizer, shape = section.digitizer.spec(), section.pulse.shape()
        amplitude = cell_amplitude(shape, self.config.detector.gamma)
        levels = np.arange(section.threshold_min, section.threshold_max + section.threshold_step / 2,
                           section.threshold_step)
        n_traces = int(math.ceil(section.exposure * 1e9 / digitizer.window))

        def batch(rng, start, size):
            traces = self.render(np.zeros(size, dtype=np.int64), digitizer, shape, rng)
            rates = threshold_scan(traces, levels * amplitude, dead_time=shape.extinction)
            return np.array([rate for _, rate in rates]) * size

        parts = self.stage("threshold scan", Helpers.run_batches, batch, self.sub_seed("dark"), n_traces,
                           self.jobs, STAIRCASE_BATCH)
        rates = np.sum(parts, axis=0) / n_traces
        exposure = n_traces * digitizer.window * 1e-9
        bundle.add_curve(Curve("staircase", levels, rates, np.sqrt(rates * exposure) / exposure,
                               x_label="threshold_cells", y_label="rate_hz"))

        nu1 = float(rates[np.argmin(np.abs(levels - SINGLE_LEVEL))])
        nu2 = float(rates[np.argmin(np.abs(levels - DOUBLE_LEVEL))])
        n1 = nu1 * exposure
        eps = nu2 / nu1 if nu1 > 0 else float("nan")
        eps_err = math.sqrt(eps * (1 - eps) / n1) if n1 > 0 else float("nan")
        bundle.add_table("staircase", [{"exposure_s": exposure, "nu1_hz": nu1, "nu2_hz": nu2,
                                        "eps": eps, "eps_err": eps_err}])
        dcr, eps0 = self.config.detector.dcr, self.config.temporal_xt.eps0
        bundle.check("dcr_plateau", dcr > 0 and abs(nu1 - dcr) <= 0.05 * dcr, measured=nu1, injected=dcr)
        bundle.check("prompt_crosstalk", abs(eps - eps0) <= 3 * eps_err, measured=eps, error=eps_err, injected=eps0)
        logger.info("Staircase: DCR = %.4g Hz, eps = %.4f +- %.4f.", nu1, eps, eps_err)
        return bundle


class PhsGatesScenario(Scenario):
    name = "phs-gates"
    description = "Pulse-height spectra of a thermal source for a short and a long integration gate."
    waveform_only = True

    def run(self):
        bundle = self.bundle()
        acq = self.config.acquisition
        gates = acq.spectrum_gates
        shots = self.photons(self.config.source.spec(MULTIMODE_THERMAL), ("spectra",))
        outputs = self.stage("acquisition", self.gated_outputs, shots, gates, ("spectra",))
        rows, ratios = [], {}
        for T in gates:
            spectrum = build_spectrum(outputs[T], acq.bin_width * self.config.detector.gamma)
            fit = self.stage(f"gain fit {T:g} ns", fit_gamma, spectrum, acq.max_peaks)
            ratios[T] = self.stage(f"valley-to-peak {T:g} ns", valley_to_peak, spectrum, fit["gamma"],
                                   pedestal_offset(fit))
            bundle.add_fit(f"gain_{T:g}", fit)
            bundle.add_curve(spectrum_curve(f"spectrum_{T:g}", spectrum, "output"))
            rows.append({"gate_ns": T, "gamma": fit["gamma"], "gamma_ci95": fit.ci95["gamma"],
                         "n_peaks": fit.extras["n_peaks"], "valley_to_peak": ratios[T]})
        bundle.add_table("spectra", rows)
        short, long_ = min(gates), max(gates)
        if short != long_:
            bundle.check("long_gate_separates_peaks", ratios[long_] < ratios[short],
                         short=ratios[short], long=ratios[long_])
        return bundle


class SnrScanScenario(Scenario):
    name = "snr-scan"
    description = "Signal-to-noise of the 1-photon peak versus integration gate."
    waveform_only = True

    def run(self):
        bundle = self.bundle()
        acq = self.config.acquisition
        gates = acq.snr_gates
        shots = self.photons(self.config.source.spec(MULTIMODE_THERMAL), ("snr",))
        outputs = self.stage("acquisition", self.gated_outputs, shots, gates, ("snr",))
        rows = []
        for T in gates:
            spectrum = build_spectrum(outputs[T], acq.bin_width * self.config.detector.gamma)
            gamma = self.stage(f"gain fit {T:g} ns", fit_gamma, spectrum, acq.max_peaks)["gamma"]
            snr = self.stage(f"signal-to-noise {T:g} ns", snr_integral, spectrum, gamma)
            rows.append({"gate_ns": T, "gamma": gamma, "snr": snr})
        bundle.add_table("snr", rows)
        snr = np.array([row["snr"] for row in rows])
        bundle.add_curve(Curve("snr", [row["gate_ns"] for row in rows], snr, x_label="gate_ns", y_label="snr"))
        best = rows[int(np.argmax(snr))]["gate_ns"]
        bundle.check("snr_optimum", SNR_OPTIMUM[0] <= best <= SNR_OPTIMUM[1], best_gate_ns=best)
        logger.info("Best signal-to-noise %.4g at %g ns.", snr.max(), best)
        return bundle


class PeakAndHoldScenario(Scenario):
    name = "peak-and-hold"
    description = "Shaped-pulse peak detection: pedestal shape, gain, S/N and reconstructed coherent statistics."
    waveform_only = True

    def run(self):
        bundle = self.bundle()
        section = self.config.acquisition.peak_hold
        eta = self.config.detector.eta
        heights = {}
        for mean_m in section.detected_means:
            spec = self.config.source.spec(COHERENT, mean_m / eta)
            shots = self.photons(spec, ("peak-hold", mean_m))
            heights[mean_m] = self.stage("peak-hold acquisition", self.peak_heights, shots, (mean_m,))

        # the brightest set resolves the most peaks
        reference = max(section.detected_means)
        spectrum = build_spectrum(heights[reference], section.bin_width)
        fit = self.stage("gain fit", fit_gamma, spectrum, self.config.acquisition.max_peaks, True)
        gamma = fit["gamma"]
        bundle.add_fit("gain", fit)
        snr = self.stage("signal-to-noise", snr_peak, spectrum, gamma)
        bundle.check("snr_range", SNR_RANGE[0] <= snr <= SNR_RANGE[1], snr=snr)

        centers = np.array([fit[f"center_{i}"] for i in range(fit.extras["n_peaks"])])
        spacings = np.diff(centers[1:7])
        spread = float(np.std(spacings) / np.mean(spacings)) if spacings.size >= 2 else float("nan")
        bundle.check("uniform_spacing", spread < SPACING_TOLERANCE, relative_spread=spread,
                     spacings=tuple(spacings.tolist()))
        offset = pedestal_offset(fit, exclude_pedestal=True)

        rows = []
        for mean_m in section.detected_means:
            values = heights[mean_m]
            k = assign_k(values, gamma, offset)
            pedestal = values[k == 0]
            theory = coherent_pmf(float(k.mean()))
            chi2_nu = self.stage("Poisson goodness of fit", gof_pmf, k, theory, 1)
            table = pearson_table(k, theory)
            bundle.add_table(f"pearson_{mean_m:g}", table)
            observed = np.bincount(k)
            support = np.arange(observed.size)
            bundle.add_curve(Curve(f"pmf_{mean_m:g}", support, observed / k.size, np.sqrt(observed) / k.size,
                                   theory.pmf(support), x_label="k", y_label="probability"))
            bundle.add_curve(spectrum_curve(f"spectrum_{mean_m:g}", build_spectrum(values, section.bin_width),
                                            "height_cells"))
            median, skew = float(np.median(pedestal)), float(stats.skew(pedestal))
            rows.append({"mean_m": mean_m, "mean_k": float(k.mean()), "chi2_nu": chi2_nu,
                         "pedestal_median": median, "pedestal_skew": skew})
            bundle.check(f"poisson_gof_{mean_m:g}", chi2_nu < 3.0, chi2_nu=chi2_nu)
            bundle.check(f"pedestal_shape_{mean_m:g}", median > 0 and skew > 0, median=median, skew=skew)
        bundle.add_table("peak_hold", rows)
        bundle.add_table("gain", [{"gamma": gamma, "gamma_ci95": fit.ci95["gamma"], "snr": snr, "offset": offset}])
        return bundle
