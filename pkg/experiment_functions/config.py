"""
Experiment configuration: a tree of frozen dataclasses built from a YAML mapping.

Every field is checked and all problems are reported together; normalization is
idempotent, so validate_config(config.to_dict()) == config.
"""
import dataclasses
from dataclasses import dataclass, field

from helper_functions.helpers import Helpers
from photon_sources.sources import SourceSpec
from photon_sources.sources import COHERENT
from photon_sources.sources import MULTIMODE_THERMAL
from detector_model.detector import DetectorParams
from detector_model.detector import EPS_LIMIT
from waveform_chain.pulse import PulseShape
from waveform_chain.pulse import TemporalXTParams
from waveform_chain.pulse import eps_effective
from waveform_chain.trace import DigitizerSpec
from custom_exceptions.exception import CustomException
from custom_exceptions.exception import InvalidExperimentConfig

SIMULATION_MODES = ("auto", "counts", "waveform")
CORRELATION_MODELS = ("corrected", "cascade")


def _rule(check, text):
    return {"check": check, "rule": text}


def positive():
    return _rule(lambda v: v > 0, "must be positive")


def non_negative():
    return _rule(lambda v: v >= 0, "must be non-negative")


def probability():
    return _rule(lambda v: 0 <= v <= 1, "must lie in [0, 1]")


def one_of(choices):
    return _rule(lambda v: v in choices, f"must be one of {', '.join(choices)}")


def positive_list():
    return _rule(lambda v: len(v) > 0 and all(item > 0 for item in v), "must be a non-empty list of positive numbers")


@dataclass(frozen=True)
class SourceSection:
    kind: str = field(default=COHERENT, metadata=one_of((COHERENT, MULTIMODE_THERMAL)))
    mean_photons: float = field(default=5.0, metadata=non_negative())
    modes: float = field(default=1.2234, metadata=_rule(lambda v: v >= 1, "must be at least 1"))

    def spec(self, kind: str = None, mean_photons: float = None) -> SourceSpec:
        return SourceSpec(kind or self.kind, self.mean_photons if mean_photons is None else mean_photons, self.modes)


@dataclass(frozen=True)
class DetectorSection:
    eta: float = field(default=0.4, metadata=probability())
    dcr: float = field(default=160e3, metadata=non_negative())
    gamma: float = field(default=1.0, metadata=positive())
    gain_spread: float = field(default=0.02, metadata=non_negative())
    n_cells: int = field(default=667, metadata=positive())
    saturation_enabled: bool = False
    eps: float = field(default=None, metadata=_rule(lambda v: v is None or 0 <= v < EPS_LIMIT,
                                                     f"must lie in [0, {EPS_LIMIT:g}) for the cascade to converge"))
    mean_dc: float = field(default=None, metadata=_rule(lambda v: v is None or v >= 0, "must be non-negative"))


@dataclass(frozen=True)
class TemporalXTSection:
    eps0: float = field(default=0.0219, metadata=probability())
    a: float = field(default=0.0004, metadata=non_negative())
    tau_xc: float = field(default=53.0, metadata=positive())


@dataclass(frozen=True)
class DigitizerSection:
    rate: float = field(default=250e6, metadata=positive())
    bits: int = field(default=12, metadata=_rule(lambda v: 2 <= v <= 16, "must lie in [2, 16]"))
    window: float = field(default=600.0, metadata=positive())
    noise_sigma: float = field(default=0.12, metadata=non_negative())
    full_scale: float = field(default=40.0, metadata=positive())
    laser_time: float = field(default=200.0, metadata=non_negative())

    def spec(self) -> DigitizerSpec:
        return DigitizerSpec(self.rate, self.bits, self.window, self.noise_sigma, self.full_scale, self.laser_time)


@dataclass(frozen=True)
class PulseSection:
    rise_tau: float = field(default=2.0, metadata=positive())
    fall_tau: float = field(default=40.0, metadata=positive())
    extinction: float = field(default=150.0, metadata=positive())
    fall_spread: float = field(default=0.25, metadata=non_negative())

    def shape(self) -> PulseShape:
        return PulseShape(self.rise_tau, self.fall_tau, self.extinction, self.fall_spread)


@dataclass(frozen=True)
class PeakHoldSection:
    """
    Shaped-pulse acquisition: only the maximum inside [laser - before, laser + after] is kept.
    """
    detected_means: tuple = field(default=(0.76, 2.56), metadata=positive_list())
    digitizer: DigitizerSection = DigitizerSection(rate=500e6, window=300.0, laser_time=100.0)
    pulse: PulseSection = PulseSection(rise_tau=5.0, fall_tau=25.0, extinction=150.0, fall_spread=0.0)
    search_before: float = field(default=10.0, metadata=non_negative())
    search_after: float = field(default=50.0, metadata=positive())
    bin_width: float = field(default=0.01, metadata=positive())


@dataclass(frozen=True)
class StaircaseSection:
    """
    Dark acquisition for the threshold scan; thresholds are in one-cell peak amplitudes.
    """
    digitizer: DigitizerSection = DigitizerSection(window=1e6, noise_sigma=0.03, laser_time=0.0)
    pulse: PulseSection = PulseSection(rise_tau=4.0, fall_tau=15.0, extinction=60.0, fall_spread=0.0)
    exposure: float = field(default=0.2, metadata=positive())
    threshold_min: float = field(default=0.25, metadata=positive())
    threshold_max: float = field(default=3.5, metadata=positive())
    threshold_step: float = field(default=0.05, metadata=positive())


@dataclass(frozen=True)
class AcquisitionSpec:
    simulation: str = field(default="auto", metadata=one_of(SIMULATION_MODES))
    gates: tuple = field(default=(50.0, 70.0, 100.0, 350.0), metadata=positive_list())
    eps_gates: tuple = field(default=(20.0, 30.0, 40.0, 50.0, 70.0, 100.0, 125.0, 150.0, 200.0, 250.0, 300.0, 350.0),
                             metadata=positive_list())
    snr_gates: tuple = field(default=(25.0, 50.0, 75.0, 100.0, 125.0, 150.0, 175.0, 200.0, 250.0, 300.0, 350.0),
                             metadata=positive_list())
    spectrum_gates: tuple = field(default=(50.0, 350.0), metadata=positive_list())
    stats_gate: float = field(default=100.0, metadata=positive())
    bin_width: float = field(default=0.02, metadata=positive())
    max_peaks: int = field(default=10, metadata=_rule(lambda v: v >= 2, "must be at least 2"))
    correlation_model: str = field(default="cascade", metadata=one_of(CORRELATION_MODELS))
    digitizer: DigitizerSection = DigitizerSection()
    pulse: PulseSection = PulseSection()
    peak_hold: PeakHoldSection = PeakHoldSection()
    staircase: StaircaseSection = StaircaseSection()


@dataclass(frozen=True)
class SplitSection:
    transmittance: float = field(default=0.5, metadata=probability())


@dataclass(frozen=True)
class IntensityScanSection:
    mean_photons: float = field(default=15.0, metadata=positive())
    attenuations: tuple = field(default=(0.01, 0.03, 0.06, 0.1, 0.2, 0.35, 0.6, 1.0),
                                metadata=_rule(lambda v: len(v) >= 2 and all(0.01 <= a <= 1 for a in v),
                                               "must hold at least two factors in [0.01, 1]"))


@dataclass(frozen=True)
class ExperimentConfig:
    source: SourceSection = SourceSection()
    detector: DetectorSection = DetectorSection()
    temporal_xt: TemporalXTSection = TemporalXTSection()
    acquisition: AcquisitionSpec = AcquisitionSpec()
    split: SplitSection = SplitSection()
    intensity_scan: IntensityScanSection = IntensityScanSection()
    trials: int = field(default=120000, metadata=positive())
    seed: int = field(default=0, metadata=non_negative())
    jobs: int = field(default=1, metadata=positive())

    def to_dict(self) -> dict:
        def plain(value):
            if dataclasses.is_dataclass(value):
                return {f.name: plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
            if isinstance(value, tuple):
                return [plain(item) for item in value]
            return value
        return plain(self)

    def digest(self) -> str:
        return Helpers.canonical_hash(self.to_dict())

    def detector_params(self, mean_dc: float = 0.0, eps: float = 0.0) -> DetectorParams:
        d = self.detector
        return DetectorParams(d.eta, mean_dc, eps, d.gamma, d.n_cells, d.saturation_enabled, d.dcr, d.gain_spread)

    def xt(self) -> TemporalXTParams:
        return TemporalXTParams(self.temporal_xt.eps0, self.temporal_xt.a, self.temporal_xt.tau_xc)

    def gate_params(self, gate_T: float) -> DetectorParams:
        """
        Count-level detector parameters of a gate of gate_T ns: DCR*T dark counts and
        eps_effective(T), unless detector.mean_dc or detector.eps fix them.
        """
        d = self.detector
        mean_dc = d.mean_dc if d.mean_dc is not None else d.dcr * gate_T * 1e-9
        eps = d.eps if d.eps is not None else eps_effective(self.xt(), gate_T)
        return self.detector_params(mean_dc, eps)

    def with_values(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _coerce(value, kind, path, errors, default=None):
    if value is None and default is None:
        return None
    if kind is bool:
        if not isinstance(value, bool):
            errors.append(f"{path}: expected true or false, got {value!r}")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            errors.append(f"{path}: expected an integer, got {value!r}")
            return value
        return int(value)
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            errors.append(f"{path}: expected a number, got {value!r}")
            return value
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            errors.append(f"{path}: expected a string, got {value!r}")
        return value
    if kind is tuple:
        if not isinstance(value, (list, tuple)) or any(isinstance(v, bool) or not isinstance(v, (int, float))
                                                       for v in value):
            errors.append(f"{path}: expected a list of numbers, got {value!r}")
            return value
        return tuple(float(v) for v in value)
    return value


def _build(cls, data, path: str, errors: list):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        errors.append(f"{path or 'config'}: expected a mapping, got {data!r}")
        return cls()
    known = {f.name: f for f in dataclasses.fields(cls)}
    for key in data:
        if key not in known:
            errors.append(f"{path + '.' if path else ''}{key}: unknown key")
    values = {}
    for name, f in known.items():
        where = f"{path}.{name}" if path else name
        default = f.default
        if name not in data:
            continue
        if dataclasses.is_dataclass(default):
            nested = _merge(_plain(default), data[name]) if isinstance(data[name], dict) else data[name]
            values[name] = _build(type(default), nested, where, errors)
            continue
        before = len(errors)
        value = _coerce(data[name], f.type, where, errors, default)
        if len(errors) == before and "check" in f.metadata and not f.metadata["check"](value):
            errors.append(f"{where}: {f.metadata['rule']}, got {data[name]!r}")
        values[name] = value
    try:
        return cls(**values) if len(errors) == 0 else cls()
    except (TypeError, ValueError) as ex:
        errors.append(f"{path or 'config'}: {ex}")
        return cls()


def _plain(section) -> dict:
    out = {}
    for f in dataclasses.fields(section):
        value = getattr(section, f.name)
        out[f.name] = _plain(value) if dataclasses.is_dataclass(value) else value
    return out


def _merge(base: dict, update: dict) -> dict:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _cross_checks(config: ExperimentConfig, errors: list):
    acq = config.acquisition
    checks = [
        ("source", lambda: config.source.spec()),
        ("detector", lambda: config.detector_params(config.detector.mean_dc or 0.0, config.detector.eps or 0.0)),
        ("temporal_xt", config.xt),
        ("acquisition.digitizer", acq.digitizer.spec),
        ("acquisition.pulse", acq.pulse.shape),
        ("acquisition.peak_hold.digitizer", acq.peak_hold.digitizer.spec),
        ("acquisition.peak_hold.pulse", acq.peak_hold.pulse.shape),
        ("acquisition.staircase.digitizer", acq.staircase.digitizer.spec),
        ("acquisition.staircase.pulse", acq.staircase.pulse.shape),
    ]
    for where, build in checks:
        try:
            build()
        except CustomException as ex:
            errors.append(f"{where}: {ex.message}")
    room = acq.digitizer.window - acq.digitizer.laser_time
    for name in ("gates", "eps_gates", "snr_gates", "spectrum_gates"):
        too_long = [g for g in getattr(acq, name) if g > room]
        if too_long:
            errors.append(f"acquisition.{name}: gates {too_long} exceed acquisition.digitizer.window minus "
                          f"acquisition.digitizer.laser_time ({room:g} ns)")
    if acq.stats_gate > room:
        errors.append(f"acquisition.stats_gate: {acq.stats_gate:g} ns does not fit in the window")
    ph = acq.peak_hold
    if ph.digitizer.laser_time - ph.search_before < 0 or ph.digitizer.laser_time + ph.search_after > ph.digitizer.window:
        errors.append("acquisition.peak_hold: the search window must lie inside the acquisition window")
    sc = acq.staircase
    if sc.threshold_max <= sc.threshold_min:
        errors.append("acquisition.staircase: threshold_max must exceed threshold_min")


def validate_config(data) -> ExperimentConfig:
    """
    Normalizes a raw configuration mapping.

    Parameters:
    data (dict | None): Sections as loaded from YAML; missing keys take their defaults.

    Returns:
    ExperimentConfig: The validated configuration.

    Raises:
    InvalidExperimentConfig: Listing every offending field in its value.
    """
    errors = []
    config = _build(ExperimentConfig, _merge(_plain(ExperimentConfig()), data or {}) if isinstance(data or {}, dict)
                    else data, "", errors)
    if not errors:
        _cross_checks(config, errors)
    if errors:
        raise InvalidExperimentConfig(f"Invalid configuration ({len(errors)} problem(s)): " + "; ".join(errors),
                                      errors)
    return config


def load_config(config_path: str = None, overrides=None) -> ExperimentConfig:
    """
    Loads a YAML configuration (defaults when no path is given) and applies KEY=VALUE overrides.
    """
    data = Helpers.load_yaml(config_path) if config_path else {}
    Helpers.apply_overrides(data, overrides)
    return validate_config(data)
