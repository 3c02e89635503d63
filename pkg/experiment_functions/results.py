"""
Results bundle of one scenario run: tables, fits, curves, pass/fail checks and provenance.
"""
import os
import math
import logging
from dataclasses import dataclass, field

import numpy as np

from helper_functions.helpers import Helpers
from estimators.fitting import FitResult
from custom_exceptions.exception import InvalidResult

logger = logging.getLogger(__name__)

VERSION = "1.0.0"


@dataclass
class Curve:
    """
    Figure data: x, y, y errors and the model evaluated at x (NaN where there is none).
    """
    name: str
    x: np.ndarray
    y: np.ndarray
    yerr: np.ndarray = None
    model_y: np.ndarray = None
    x_label: str = "x"
    y_label: str = "y"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        nan = np.full(self.x.shape, np.nan)
        self.yerr = nan if self.yerr is None else np.asarray(self.yerr, dtype=float)
        self.model_y = nan if self.model_y is None else np.asarray(self.model_y, dtype=float)
        if not self.x.shape == self.y.shape == self.yerr.shape == self.model_y.shape:
            raise InvalidResult(f"Curve {self.name} has columns of different lengths.", self.name)

    def rows(self):
        return zip(self.x.tolist(), self.y.tolist(), self.yerr.tolist(), self.model_y.tolist())

    def to_dict(self) -> dict:
        return {"x_label": self.x_label, "y_label": self.y_label, "points": int(self.x.size)}


@dataclass
class ResultsBundle:
    scenario: str
    config_hash: str
    seed: int
    version: str = VERSION
    tables: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def add_table(self, name: str, rows, columns=None):
        rows = [dict(row) for row in rows]
        columns = columns or (list(rows[0].keys()) if rows else [])
        self.tables[name] = {"columns": list(columns), "rows": rows}

    def add_fit(self, name: str, fit: FitResult):
        self.fits[name] = fit

    def add_curve(self, curve: Curve):
        self.curves[curve.name] = curve

    def check(self, name: str, passed: bool, **values):
        self.checks[name] = {"passed": bool(passed), **{k: _scalar(v) for k, v in values.items()}}
        if not passed:
            logger.warning("Check '%s' of %s failed: %s", name, self.scenario, values)

    @property
    def passed(self) -> bool:
        return all(item["passed"] for item in self.checks.values())

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "provenance": {"config_sha256": self.config_hash, "seed": self.seed, "version": self.version},
            "tables": {name: {"columns": t["columns"],
                              "rows": [{k: _scalar(v) for k, v in row.items()} for row in t["rows"]]}
                       for name, t in self.tables.items()},
            "fits": {name: fit.to_dict() for name, fit in self.fits.items()},
            "curves": {name: curve.to_dict() for name, curve in self.curves.items()},
            "checks": self.checks,
            "notes": list(self.notes),
        }

    def render_tables(self) -> str:
        parts = []
        for name, table in self.tables.items():
            parts.append(f"[{name}]\n" + Helpers.format_table(table["rows"], table["columns"]))
        for name, fit in self.fits.items():
            rows = [{"param": key, "value": value, "ci95": fit.ci95.get(key, (math.nan, math.nan))}
                    for key, value in fit.params.items()]
            parts.append(f"[fit {name}] chi2_nu = {fit.chi2_nu:.4g}\n"
                         + Helpers.format_table(rows, ["param", "value", "ci95"]))
        if self.checks:
            rows = [{"check": name, "passed": item["passed"]} for name, item in self.checks.items()]
            parts.append("[checks]\n" + Helpers.format_table(rows, ["check", "passed"]))
        return "\n".join(parts)

    def write(self, out_dir: str) -> str:
        """
        Writes bundle.json, one CSV per curve and tables.txt under <out_dir>/<scenario>.

        Returns:
        str: The scenario directory.
        """
        directory = os.path.join(out_dir, self.scenario)
        Helpers.create_directory(directory)
        Helpers.write_json(os.path.join(directory, "bundle.json"), self.to_dict())
        for name, curve in self.curves.items():
            Helpers.write_csv(os.path.join(directory, f"{name}.csv"), ["x", "y", "yerr", "model_y"], curve.rows(),
                              comment=f"x={curve.x_label}, y={curve.y_label}")
        with open(os.path.join(directory, "tables.txt"), "w") as file:
            file.write(self.render_tables())
        logger.info("Wrote %s results to %s.", self.scenario, directory)
        return directory


def _scalar(value):
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, tuple):
        return [_scalar(v) for v in value]
    return value
