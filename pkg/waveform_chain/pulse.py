import math
from dataclasses import dataclass

import numpy as np

from custom_exceptions.exception import InvalidPulseShape
from custom_exceptions.exception import InvalidTemporalParams


@dataclass(frozen=True)
class PulseShape:
    """
    Single-cell pulse p(t) proportional to exp(-t/fall_tau) - exp(-t/rise_tau), cut at `extinction`.

    The amplitude is normalized so that one cell integrates to 1 (times its gain) over
    [0, extinction]. `fall_spread` is the log-normal relative spread of the fall time from
    avalanche to avalanche; it moves charge inside short gates but never changes the total.
    All times are in ns.
    """
    rise_tau: float = 2.0
    fall_tau: float = 40.0
    extinction: float = 150.0
    fall_spread: float = 0.25

    def __post_init__(self):
        if not (self.rise_tau > 0 and self.fall_tau > 0 and self.extinction > 0):
            raise InvalidPulseShape("Pulse time constants and extinction must be positive.", self)
        if self.rise_tau >= self.fall_tau:
            raise InvalidPulseShape("The rise time must be shorter than the fall time.", (self.rise_tau, self.fall_tau))
        if self.fall_spread < 0:
            raise InvalidPulseShape("The fall-time spread must be non-negative.", self.fall_spread)

    def _primitive(self, u, fall):
        u = np.clip(u, 0.0, self.extinction)
        return fall * -np.expm1(-u / fall) - self.rise_tau * -np.expm1(-u / self.rise_tau)

    def charge_fraction(self, u, fall=None):
        """
        Fraction of one cell's charge collected between the onset and u ns later.
        """
        fall = self.fall_tau if fall is None else fall
        return self._primitive(u, fall) / self._primitive(self.extinction, fall)

    def peak_time(self) -> float:
        ratio = self.fall_tau / self.rise_tau
        return self.rise_tau * self.fall_tau / (self.fall_tau - self.rise_tau) * math.log(ratio)

    def amplitude(self, t, fall=None):
        """
        Pulse value per unit charge at t ns after the onset (1/ns).
        """
        fall = self.fall_tau if fall is None else fall
        t = np.asarray(t, dtype=float)
        inside = (t >= 0) & (t <= self.extinction)
        shape = np.exp(-np.clip(t, 0, None) / fall) - np.exp(-np.clip(t, 0, None) / self.rise_tau)
        return np.where(inside, shape, 0.0) / self._primitive(self.extinction, fall)

    def peak_amplitude(self) -> float:
        return float(self.amplitude(self.peak_time()))

    def draw_fall(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.fall_spread == 0:
            return np.full(size, self.fall_tau)
        fall = self.fall_tau * np.exp(self.fall_spread * rng.standard_normal(size))
        return np.maximum(fall, 1.5 * self.rise_tau)


@dataclass(frozen=True)
class TemporalXTParams:
    """
    Prompt and delayed cross talk: eps0 is the prompt probability, the delayed density is
    a*exp(-t/tau_xc) with a per ns and tau_xc in ns.
    """
    eps0: float = 0.0219
    a: float = 0.0004
    tau_xc: float = 53.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.eps0, self.a, self.tau_xc)):
            raise InvalidTemporalParams("Cross-talk parameters must be finite.", self)
        if self.eps0 < 0 or self.a < 0:
            raise InvalidTemporalParams("eps0 and a must be non-negative.", (self.eps0, self.a))
        if self.tau_xc <= 0:
            raise InvalidTemporalParams("tau_xc must be positive.", self.tau_xc)
        if self.eps0 + self.a * self.tau_xc > 1:
            raise InvalidTemporalParams("eps0 + a*tau_xc exceeds 1, so the secondary probabilities are not valid.",
                                        self.eps0 + self.a * self.tau_xc)

    def delayed_probability(self, span):
        """
        Probability that an avalanche spawns a delayed secondary within `span` ns.
        """
        span = np.clip(np.asarray(span, dtype=float), 0.0, None)
        return self.a * self.tau_xc * -np.expm1(-span / self.tau_xc)

    def gated_eps(self, gate_T: float) -> float:
        """
        Probability that an avalanche at the gate start has its secondary inside a gate of gate_T ns.
        """
        return self.eps0 + float(self.delayed_probability(gate_T))

    def draw_delay(self, rng: np.random.Generator, span: np.ndarray) -> np.ndarray:
        """
        Delays from the exponential density truncated to [0, span].
        """
        u = rng.random(np.shape(span))
        return -self.tau_xc * np.log1p(u * np.expm1(-np.asarray(span) / self.tau_xc))


def eps_effective(xt: TemporalXTParams, gate_T: float) -> float:
    """
    Effective cross-talk probability for a gate of width T:
    eps = eps0 + (tau_xc/T) a [1 - exp(-T/tau_xc)].

    Raises:
    InvalidTemporalParams: For a non-positive gate width.
    """
    if not gate_T > 0:
        raise InvalidTemporalParams("The gate width must be positive.", gate_T)
    return xt.eps0 + (xt.tau_xc / gate_T) * xt.a * -math.expm1(-gate_T / xt.tau_xc)
