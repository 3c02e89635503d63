"""
Scenarios on full fired-cell distributions: model selection for coherent and thermal light
and the shot-by-shot correlations of a split thermal beam.
"""
import logging

import numpy as np

from photon_sources.sources import COHERENT
from photon_sources.sources import MULTIMODE_THERMAL
from photon_sources.sources import coherent_pmf
from photon_sources.sources import mth_pmf
from photon_sources.sources import split_beam
from detector_model.detector import add_dark_counts
from detector_model.detector import crosstalk_cascade
from estimators.goodness import gof_pmf
from estimators.goodness import fit_pmf_mth
from estimators.goodness import pearson_table
from estimators.spectrum import assign_k
from estimators.correlation import MODELS
from estimators.correlation import corr_curve
from estimators.correlation import fit_correlation
from estimators.correlation import gamma_cascade_theory
from estimators.correlation import gamma_corrected_theory
from experiment_functions.results import Curve
from scenarios.scenario_interface import Scenario

logger = logging.getLogger(__name__)

MU_TOLERANCE = 0.02


def pmf_curve(name: str, k, theory) -> Curve:
    observed = np.bincount(k)
    support = np.arange(observed.size)
    return Curve(name, support, observed / k.size, np.sqrt(observed) / k.size, theory.pmf(support),
                 x_label="k", y_label="probability")


class StatsScenario(Scenario):
    """
    Reconstructed fired-cell counts of one gate.
    """
    kind = COHERENT

    def reconstructed_counts(self):
        gate = self.config.acquisition.stats_gate
        shots = self.photons(self.config.source.spec(self.kind), ("stats",))
        values = self.stage("acquisition", self.gated_outputs, shots, [gate], ("stats",))[gate]
        gamma = self.gain_at_gate([values], gate)
        return assign_k(values, gamma), self.count_params(gate)


class StatsCoherentScenario(StatsScenario):
    name = "stats-coherent"
    description = "Coherent fired-cell distribution against the Poisson and the cross-talk cascade models."

    def run(self):
        bundle = self.bundle()
        k, params = self.reconstructed_counts()
        mean_k = float(k.mean())
        detected = max(mean_k / (1 + params.eps) - params.mean_dc, 0.0)
        models = {
            "poisson": coherent_pmf(mean_k),
            "cascade": crosstalk_cascade(add_dark_counts(coherent_pmf(detected), params.mean_dc), params.eps),
        }
        rows = []
        for label, theory in models.items():
            chi2_nu = self.stage(f"{label} goodness of fit", gof_pmf, k, theory, 1)
            bundle.add_table(f"pearson_{label}", pearson_table(k, theory))
            bundle.add_curve(pmf_curve(f"pmf_{label}", k, theory))
            rows.append({"model": label, "chi2_nu": chi2_nu})
        bundle.add_table("models", rows, ["model", "chi2_nu"])
        chi2 = {row["model"]: row["chi2_nu"] for row in rows}
        bundle.check("cascade_preferred", chi2["cascade"] < chi2["poisson"], **chi2)
        return bundle


class StatsThermalScenario(StatsScenario):
    name = "stats-thermal"
    description = "Multimode-thermal fired-cell distribution: number of modes with and without cross talk."
    kind = MULTIMODE_THERMAL

    def run(self):
        bundle = self.bundle()
        k, params = self.reconstructed_counts()
        fits = {
            "with_crosstalk": self.stage("thermal fit with cross talk", fit_pmf_mth, k, params.eps, params.mean_dc),
            "without_crosstalk": self.stage("thermal fit without cross talk", fit_pmf_mth, k),
        }
        rows = []
        for label, fit in fits.items():
            eps, mean_dc = (params.eps, params.mean_dc) if label == "with_crosstalk" else (0.0, 0.0)
            theory = crosstalk_cascade(add_dark_counts(mth_pmf(fit.extras["mean_m"], fit["mu"]), mean_dc), eps)
            bundle.add_fit(label, fit)
            bundle.add_curve(pmf_curve(f"pmf_{label}", k, theory))
            rows.append({"model": label, "mu": fit["mu"], "mu_ci95": fit.ci95["mu"], "chi2_nu": fit.chi2_nu})
        bundle.add_table("models", rows)
        bundle.check("crosstalk_model_preferred",
                     fits["with_crosstalk"].chi2_nu <= fits["without_crosstalk"].chi2_nu,
                     with_crosstalk=fits["with_crosstalk"].chi2_nu,
                     without_crosstalk=fits["without_crosstalk"].chi2_nu)
        return bundle


class CorrelationsScenario(Scenario):
    name = "correlations"
    description = "Correlation of the two arms of a split thermal beam versus mean counts, per gate."

    def run(self):
        bundle = self.bundle()
        acq = self.config.acquisition
        gates = acq.gates
        arms = {T: [] for T in gates}
        groups = self.stage("intensity scan", self.intensity_groups, MULTIMODE_THERMAL, ("split",))
        for factor, shots in groups:
            arm1, arm2 = self.stage("beam splitter", split_beam, shots, self.config.split.transmittance,
                                    self.sub_seed("split", factor), self.jobs)
            out1 = self.stage("acquisition", self.gated_outputs, arm1, gates, ("arm1", factor))
            out2 = self.stage("acquisition", self.gated_outputs, arm2, gates, ("arm2", factor))
            for T in gates:
                arms[T].append((out1[T], out2[T]))

        points, eps, mean_dc = [], {}, {}
        for T in gates:
            gamma = self.gain_at_gate([x for pair in arms[T] for x in pair], T)
            groups_k = [(assign_k(x1, gamma), assign_k(x2, gamma)) for x1, x2 in arms[T]]
            points += self.stage(f"correlations {T:g} ns", corr_curve, groups_k, T, self.sub_seed("bootstrap", T))
            params = self.count_params(T)
            eps[T], mean_dc[T] = params.eps, params.mean_dc

        fits = {model: self.stage(f"{model} correlation fit", fit_correlation, points, eps, mean_dc, model)
                for model in MODELS}
        for model, fit in fits.items():
            bundle.add_fit(model, fit)
        theory = gamma_corrected_theory if acq.correlation_model == "corrected" else gamma_cascade_theory
        mu = fits[acq.correlation_model]["mu"]
        for T in gates:
            gate_points = [p for p in points if p.gate_T == T]
            model_y = [theory(*p.arm_means(), eps[T], eps[T], mean_dc[T], mean_dc[T], mu, mu) for p in gate_points]
            bundle.add_curve(Curve(f"correlation_{T:g}", [p.mean_k for p in gate_points],
                                   [p.corr for p in gate_points], [p.corr_err for p in gate_points], model_y,
                                   x_label="mean_k", y_label="correlation"))
        bundle.add_table("correlation_fits", [{"model": model, "mu": fit["mu"], "mu_ci95": fit.ci95["mu"],
                                               "chi2_nu": fit.chi2_nu} for model, fit in fits.items()])

        modes = self.config.source.modes
        bundle.check("modes_recovered", abs(mu - modes) <= MU_TOLERANCE * modes, fitted=mu, injected=modes)
        short, long_ = min(gates), max(gates)
        if short != long_:
            common, at_short, at_long = self.compare_at_equal_mean(points, short, long_)
            bundle.check("short_gate_more_correlated", at_short > at_long, mean_k=common, short=at_short,
                         long=at_long)
        return bundle

    @staticmethod
    def compare_at_equal_mean(points, short: float, long_: float):
        """
        Data correlations of two gates interpolated at a mean count both of them cover.
        """
        curves = {}
        for T in (short, long_):
            gate_points = sorted((p for p in points if p.gate_T == T), key=lambda p: p.mean_k)
            curves[T] = (np.array([p.mean_k for p in gate_points]), np.array([p.corr for p in gate_points]))
        low = max(curves[short][0][0], curves[long_][0][0])
        high = min(curves[short][0][-1], curves[long_][0][-1])
        common = 0.5 * (low + high)
        return common, float(np.interp(common, *curves[short])), float(np.interp(common, *curves[long_]))
