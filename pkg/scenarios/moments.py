"""
Scenarios built on the first two moments of intensity scans: the coherent Fano plateau,
cross talk versus gate width and the joint multimode-thermal fit.
"""
import math
import logging

import numpy as np

from photon_sources.sources import COHERENT
from photon_sources.sources import MULTIMODE_THERMAL
from estimators.fano import FanoPoint
from estimators.fano import EPS_BREAKPOINT
from estimators.fano import fano_coherent_value
from estimators.fano import fano_mth_model
from estimators.fano import fit_eps_vs_gate
from estimators.fano import fit_fano_coherent
from estimators.fano import fit_fano_linear
from estimators.fano import fit_fano_mth
from estimators.fano import predict_eps
from experiment_functions.results import Curve
from scenarios.scenario_interface import Scenario

logger = logging.getLogger(__name__)

COVERAGE_FRACTION = 0.75
MU_TOLERANCE = 0.01
DCR_TOLERANCE = 0.20


def fano_points_curve(name: str, points, model_y=None) -> Curve:
    return Curve(name, [p.mean_x for p in points], [p.fano for p in points], [p.fano_err for p in points],
                 model_y, x_label="mean_output", y_label="fano")


def in_cell_units(points, gamma: float):
    return [FanoPoint(p.mean_x / gamma, p.fano / gamma, p.fano_err / gamma, p.gate_T, p.n_shots) for p in points]


class FanoCoherentScenario(Scenario):
    name = "fano-coherent"
    description = "Coherent intensity scan per gate: cross talk from the Fano plateau and its flatness."

    def calibrate(self, gates, key=()):
        """
        Coherent scan per gate.

        Returns:
        dict[float, tuple]: Gate width to (gain, Fano points, plateau fit, linear fit).
        """
        points, outputs = self.fano_scan(COHERENT, gates, key)
        result = {}
        for T in gates:
            gamma = self.gain_at_gate(outputs[T], T)
            fit = self.stage(f"coherent Fano fit {T:g} ns", fit_fano_coherent, points[T], gamma)
            linear = self.stage(f"linear Fano fit {T:g} ns", fit_fano_linear, points[T])
            result[T] = (gamma, points[T], fit, linear)
        return result

    def run(self):
        bundle = self.bundle()
        gates = self.config.acquisition.gates
        rows, covered = [], 0
        for T, (gamma, points, fit, linear) in self.calibrate(gates).items():
            injected = self.injected_eps(T)
            low, high = fit.ci95["eps"]
            covered += low <= injected <= high
            bundle.add_fit(f"eps_{T:g}", fit)
            bundle.add_fit(f"linear_{T:g}", linear)
            model = np.full(len(points), fano_coherent_value(gamma, fit["eps"]))
            bundle.add_curve(fano_points_curve(f"fano_{T:g}", points, model))
            rows.append({"gate_ns": T, "gamma": gamma, "eps": fit["eps"], "eps_ci95": fit.ci95["eps"],
                         "chi2_nu": fit.chi2_nu, "eps_injected": injected, "slope": linear["slope"],
                         "slope_ci95": linear.ci95["slope"]})
        bundle.add_table("eps_per_gate", rows)

        needed = math.ceil(COVERAGE_FRACTION * len(rows))
        bundle.check("injected_eps_covered", covered >= needed, covered=covered, gates=len(rows))
        ordered = sorted(rows, key=lambda row: row["gate_ns"])
        monotone = True
        for before, after in zip(ordered, ordered[1:]):
            sigma = math.hypot(*(0.5 * (row["eps_ci95"][1] - row["eps_ci95"][0]) for row in (before, after)))
            monotone &= after["eps"] >= before["eps"] - sigma
        bundle.check("eps_non_decreasing", monotone)
        return bundle


class EpsVsGateScenario(FanoCoherentScenario):
    name = "eps-vs-gate"
    description = "Cross talk versus gate width: prompt plus delayed regime and the linear long-gate tail."
    default_simulation = "waveform"

    def run(self):
        bundle = self.bundle()
        gates = self.config.acquisition.eps_gates
        calibration = self.calibrate(gates)
        triples = [(T, fit["eps"], fit.sigma("eps")) for T, (_, _, fit, _) in calibration.items()]
        fit = self.stage("cross talk versus gate fit", fit_eps_vs_gate, triples)
        bundle.add_fit("eps_vs_gate", fit)
        T, eps, err = (np.array(column) for column in zip(*triples))
        model = np.array([predict_eps(fit, gate) for gate in T])
        bundle.add_curve(Curve("eps_vs_gate", T, eps, err, model, x_label="gate_ns", y_label="eps"))
        bundle.add_table("eps_vs_gate", [{"gate_ns": g, "eps": e, "eps_err": s, "eps_injected": self.injected_eps(g)}
                                         for g, e, s in triples])

        short = T <= EPS_BREAKPOINT
        bundle.check("short_regime_rising", eps[short][-1] > eps[short][0], first=eps[short][0],
                     last=eps[short][-1])
        bundle.check("long_regime_slope_positive", fit["m"] > 0, slope_hz=fit["m"])
        return bundle


class FanoThermalScenario(FanoCoherentScenario):
    name = "fano-thermal"
    description = "Multimode-thermal intensity scans over several gates: joint fit of the modes and the DCR."

    def run(self):
        bundle = self.bundle()
        gates = self.config.acquisition.gates
        calibration = self.calibrate(gates, ("calibration",))
        eps = {T: fit["eps"] for T, (_, _, fit, _) in calibration.items()}
        thermal, _ = self.fano_scan(MULTIMODE_THERMAL, gates)

        points = []
        for T in gates:
            points += in_cell_units(thermal[T], calibration[T][0])
        fit = self.stage("thermal Fano fit", fit_fano_mth, points, 1.0, eps)
        bundle.add_fit("thermal", fit)

        rows = []
        for T in gates:
            gate_points = [p for p in points if p.gate_T == T]
            x_dc = fit[f"x_dc_{T:g}"]
            model = fano_mth_model([p.mean_x for p in gate_points], fit["mu"], x_dc, 1.0, eps[T])
            bundle.add_curve(fano_points_curve(f"fano_thermal_{T:g}", gate_points, model))
            rows.append({"gate_ns": T, "eps": eps[T], "x_dc": x_dc, "x_dc_ci95": fit.ci95[f"x_dc_{T:g}"],
                         "dcr_hz": fit.extras[f"dcr_{T:g}"], "dcr_err_hz": fit.extras[f"dcr_err_{T:g}"]})
        bundle.add_table("thermal", rows)

        modes, dcr = self.config.source.modes, self.config.detector.dcr
        fitted_dcr = rows[0]["dcr_hz"]
        bundle.check("modes_recovered", abs(fit["mu"] - modes) <= MU_TOLERANCE * modes, fitted=fit["mu"],
                     injected=modes)
        if self.config.detector.mean_dc is None:
            bundle.check("dcr_recovered", abs(fitted_dcr - dcr) <= DCR_TOLERANCE * dcr, fitted=fitted_dcr,
                         injected=dcr)
        logger.info("Thermal fit: mu = %.4f, DCR = %.4g Hz.", fit["mu"], fitted_dcr)
        return bundle
