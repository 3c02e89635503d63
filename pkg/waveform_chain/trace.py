"""
Digitized single-shot traces: rendering of avalanche pulses, white baseline noise,
mid-tread quantization, gate integration, peak-and-hold and the dark threshold scan.

Amplitudes are expressed in charge units per ns (one fired cell integrates to its
gain), times in ns and sampling rates in samples/s.
"""
import math
import logging
from dataclasses import dataclass

import numpy as np

from waveform_chain.pulse import PulseShape
from waveform_chain.events import AvalancheBatch
from custom_exceptions.exception import InvalidGate
from custom_exceptions.exception import EventOutsideWindow
from custom_exceptions.exception import InvalidDigitizerSpec

logger = logging.getLogger(__name__)

PRETRIGGER_FRACTION = 0.1


def sample_count(rate: float, window: float) -> int:
    return int(math.floor(rate * window * 1e-9 + 1e-9))


@dataclass(frozen=True)
class DigitizerSpec:
    """
    Acquisition settings of the digitizer.

    Attributes:
        rate: Sampling rate in samples/s.
        bits: ADC resolution.
        window: Record length in ns.
        noise_sigma: Electronic noise sigma in units of the one-cell peak amplitude.
        full_scale: Positive full scale in one-cell peak amplitudes.
        laser_time: Arrival time of the light pulse in ns.
    """
    rate: float = 250e6
    bits: int = 12
    window: float = 600.0
    noise_sigma: float = 0.12
    full_scale: float = 40.0
    laser_time: float = 200.0

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise InvalidDigitizerSpec("The sampling rate must be positive.", self.rate)
        if int(self.bits) != self.bits or not 2 <= self.bits <= 16:
            raise InvalidDigitizerSpec("The resolution must be an integer number of bits in [2, 16].", self.bits)
        if not (math.isfinite(self.window) and self.window > 0):
            raise InvalidDigitizerSpec("The acquisition window must be positive.", self.window)
        if self.noise_sigma < 0 or self.full_scale <= 0:
            raise InvalidDigitizerSpec("Noise must be non-negative and the full scale positive.",
                                       (self.noise_sigma, self.full_scale))
        if not 0.0 <= self.laser_time < self.window:
            raise InvalidDigitizerSpec("The laser time must lie inside the window.", self.laser_time)
        if self.n_samples < 1:
            raise InvalidDigitizerSpec("The window holds no sample at this rate.", (self.rate, self.window))

    @property
    def dt(self) -> float:
        return 1e9 / self.rate

    @property
    def n_samples(self) -> int:
        return sample_count(self.rate, self.window)

    def lsb(self, cell_amplitude: float) -> float:
        return self.full_scale * cell_amplitude / 2 ** (self.bits - 1)


@dataclass(frozen=True)
class GateSpec:
    start: float
    width: float

    def indices(self, dt: float, window: float):
        """
        Sample range [i0, i1) covered by the gate.

        Raises:
        InvalidGate: If the gate is empty or not fully inside the window.
        """
        if not (math.isfinite(self.start) and math.isfinite(self.width)) or self.width <= 0:
            raise InvalidGate("The gate width must be positive.", self)
        if self.start < 0 or self.start + self.width > window + 1e-9:
            raise InvalidGate(f"The gate [{self.start}, {self.start + self.width}] ns is outside the "
                              f"{window} ns window.", self)
        n = sample_count(1e9 / dt, window)
        i0 = int(math.floor(self.start / dt + 1e-9))
        i1 = min(n, int(math.ceil((self.start + self.width) / dt - 1e-9)))
        return i0, max(i1, i0 + 1)


@dataclass(frozen=True, eq=False)
class TraceBatch:
    """
    Many traces sharing one digitizer: codes has one row per shot.

    baseline is the known pedestal in amplitude units, or None to estimate it per trace
    from the pre-trigger region.
    """
    codes: np.ndarray
    rate: float
    bits: int
    window: float
    baseline_sigma: float = 0.0
    lsb: float = 1.0
    baseline: float = None

    def __post_init__(self):
        n = sample_count(self.rate, self.window)
        if self.codes.ndim != 2 or self.codes.shape[1] != n:
            raise InvalidDigitizerSpec(f"Traces must hold {n} samples at this rate and window.", self.codes.shape)
        low, high = -2 ** (self.bits - 1), 2 ** (self.bits - 1) - 1
        if self.codes.size and (self.codes.min() < low or self.codes.max() > high):
            raise InvalidDigitizerSpec(f"Sample codes must lie in [{low}, {high}].",
                                       (int(self.codes.min()), int(self.codes.max())))

    def __len__(self):
        return self.codes.shape[0]

    @property
    def dt(self) -> float:
        return 1e9 / self.rate

    def baselines(self) -> np.ndarray:
        if self.baseline is not None:
            return np.full(len(self), float(self.baseline))
        pre = max(1, int(self.codes.shape[1] * PRETRIGGER_FRACTION))
        return self.codes[:, :pre].mean(axis=1) * self.lsb

    def integrate(self, gate: GateSpec) -> np.ndarray:
        i0, i1 = gate.indices(self.dt, self.window)
        sums = self.codes[:, i0:i1].sum(axis=1, dtype=np.int64) * self.lsb
        return (sums - self.baselines() * (i1 - i0)) * self.dt

    def peak(self, search_window: GateSpec) -> np.ndarray:
        i0, i1 = search_window.indices(self.dt, self.window)
        return self.codes[:, i0:i1].max(axis=1) * self.lsb - self.baselines()

    def record(self, index: int) -> "TraceRecord":
        return TraceRecord(self.codes[index].copy(), self.rate, self.bits, self.window,
                           self.baseline_sigma, self.lsb, self.baseline)

    def records(self):
        return [self.record(i) for i in range(len(self))]

    @classmethod
    def from_records(cls, records) -> "TraceBatch":
        if not records:
            raise InvalidDigitizerSpec("No trace to batch.", records)
        first = records[0]
        for rec in records[1:]:
            if (rec.rate, rec.bits, rec.window, rec.lsb) != (first.rate, first.bits, first.window, first.lsb):
                raise InvalidDigitizerSpec("All traces of a batch must share rate, bits, window and lsb.", rec)
        return cls(np.stack([rec.samples for rec in records]), first.rate, first.bits, first.window,
                   first.baseline_sigma, first.lsb, first.baseline)


@dataclass(frozen=True, eq=False)
class TraceRecord:
    """
    One digitized waveform: integer ADC codes, value = code * lsb.
    """
    samples: np.ndarray
    rate: float
    bits: int
    window: float
    baseline_sigma: float = 0.0
    lsb: float = 1.0
    baseline: float = None

    def __post_init__(self):
        TraceBatch(np.asarray(self.samples)[None, :], self.rate, self.bits, self.window)

    @property
    def dt(self) -> float:
        return 1e9 / self.rate

    def values(self) -> np.ndarray:
        return self.samples * self.lsb

    def as_batch(self) -> TraceBatch:
        return TraceBatch(np.asarray(self.samples)[None, :], self.rate, self.bits, self.window,
                          self.baseline_sigma, self.lsb, self.baseline)


def quantize(values: np.ndarray, lsb: float, bits: int) -> np.ndarray:
    """
    Mid-tread uniform quantizer, clipped to the signed code range.
    """
    codes = np.rint(values / lsb)
    return np.clip(codes, -2 ** (bits - 1), 2 ** (bits - 1) - 1).astype(np.int16)


def cell_amplitude(shape: PulseShape, gamma: float) -> float:
    return gamma * shape.peak_amplitude()


def render_traces(avalanches: AvalancheBatch, shape: PulseShape, digitizer: DigitizerSpec,
                  rng: np.random.Generator, gamma: float = 1.0, gain_spread: float = 0.0) -> TraceBatch:
    """
    Renders every avalanche of a batch as a pulse and digitizes the sum.

    Each sample is the average of the analog signal over its sampling period, so gate
    sums reproduce the exact charge integral of the pulses they contain.
    """
    n, dt, n_shots = digitizer.n_samples, digitizer.dt, avalanches.n_shots
    values = np.zeros(n_shots * n)
    if avalanches.size:
        fall = shape.draw_fall(rng, avalanches.size)[:, None]
        gain = gamma * np.maximum(1.0 + gain_spread * rng.standard_normal(avalanches.size), 0.0)[:, None]
        onset = avalanches.time[:, None]
        span = int(math.ceil(shape.extinction / dt)) + 2
        index = np.floor(onset / dt).astype(np.int64) + np.arange(span)[None, :]
        low = index * dt - onset
        charge = gain * (shape.charge_fraction(low + dt, fall) - shape.charge_fraction(low, fall))
        inside = index < n
        flat = avalanches.shot[:, None] * n + index
        values += np.bincount(flat[inside], weights=charge[inside] / dt, minlength=n_shots * n)
    values = values.reshape(n_shots, n)
    amplitude = cell_amplitude(shape, gamma)
    sigma = digitizer.noise_sigma * amplitude
    if sigma > 0:
        values += rng.normal(0.0, sigma, values.shape)
    lsb = digitizer.lsb(amplitude)
    return TraceBatch(quantize(values, lsb, digitizer.bits), digitizer.rate, digitizer.bits, digitizer.window,
                      sigma, lsb, 0.0)


def synth_trace(fired_events, shape: PulseShape, digitizer: DigitizerSpec, seed: int,
                gamma: float = 1.0, gain_spread: float = 0.0) -> TraceRecord:
    """
    Synthesizes one trace from (time, cell-count) events.

    Raises:
    EventOutsideWindow: If an event time falls outside [0, window].
    """
    times = np.array([float(t) for t, _ in fired_events])
    counts = np.array([int(c) for _, c in fired_events], dtype=np.int64)
    outside = (times < 0) | (times > digitizer.window)
    if outside.any():
        raise EventOutsideWindow(f"Event times must lie in [0, {digitizer.window}] ns.", times[outside].tolist())
    if (counts < 0).any():
        raise EventOutsideWindow("Cell counts must be non-negative.", counts.tolist())
    time = np.repeat(times, counts)
    empty = np.zeros(time.size, dtype=np.int64)
    avalanches = AvalancheBatch(1, empty, time, empty, np.full(time.size, np.nan))
    batch = render_traces(avalanches, shape, digitizer, np.random.default_rng(seed), gamma, gain_spread)
    return batch.record(0)


def gate_integrate(trace: TraceRecord, gate: GateSpec) -> float:
    """
    Baseline-subtracted charge inside the gate.

    Raises:
    InvalidGate: If the gate is not fully inside the trace window.
    """
    return float(trace.as_batch().integrate(gate)[0])


def peak_hold(trace: TraceRecord, search_window: GateSpec) -> float:
    """
    Maximum baseline-subtracted sample inside the search window.
    """
    return float(trace.as_batch().peak(search_window)[0])


def _crossing_candidates(values: np.ndarray, floor_level: float):
    # only samples at or above the lowest threshold can complete an upward crossing
    position = np.nonzero(values[1:] >= floor_level)[0] + 1
    return position, values[position - 1], values[position]


def _count_with_dead_time(positions: np.ndarray, dead_samples: float) -> int:
    accepted, last = 0, -math.inf
    for position in positions.tolist():
        if position - last >= dead_samples:
            accepted += 1
            last = position
    return accepted


def threshold_scan(dark_traces, thresholds, dead_time: float = 150.0):
    """
    Staircase of a dark acquisition: rate of upward threshold crossings per second.

    Parameters:
    dark_traces (TraceBatch | list[TraceRecord]): Traces recorded with no light.
    thresholds (list[float]): Amplitude thresholds, in the units of the trace values.
    dead_time (float): Crossings closer than this (ns) to the last accepted one are ignored.

    Returns:
    list[tuple[float, float]]: (threshold, rate in Hz) pairs.
    """
    batch = dark_traces if isinstance(dark_traces, TraceBatch) else TraceBatch.from_records(list(dark_traces))
    thresholds = np.asarray(thresholds, dtype=float)
    counts = np.zeros(thresholds.size, dtype=np.int64)
    if thresholds.size == 0:
        return []
    dead_samples = dead_time / batch.dt
    baselines = batch.baselines()
    floor_level = thresholds.min()
    for row in range(len(batch)):
        values = batch.codes[row] * batch.lsb - baselines[row]
        position, previous, current = _crossing_candidates(values, floor_level)
        for i, level in enumerate(thresholds):
            crossing = (current >= level) & (previous < level)
            counts[i] += _count_with_dead_time(position[crossing], dead_samples)
    exposure = len(batch) * batch.codes.shape[1] * batch.dt * 1e-9
    logger.debug("Threshold scan over %.3g s of dark traces.", exposure)
    return [(float(level), float(count / exposure)) for level, count in zip(thresholds, counts)]
