"""Tymbal plate: four resonant bands, one per buckling event kind.

Each buckling pulse drives only the band for its own event kind; the mix
output is dry pulses plus the four wet bands. Band centers sit at
3 * pitch * ratio and the running Q is half the unloaded Q, standing in
for the damping the surrounding anatomy adds to the free plate.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError
from .excitation import KIND_ORDER

RATIO_MIN = 0.8
RATIO_MAX = 1.5

PLATE_CENTER_FACTOR = 3.0  # plate resonance anchors at the third harmonic


@dataclass(frozen=True)
class FilterSpec:
    center_hz: float
    q: float
    gain: float


def design_resonator(center_hz: float, bandwidth_hz: float, sr: int):
    """Two-pole resonator coefficients with unit gain at the center.

    Pole radius r = e^(-pi * bw / sr) makes the impulse-response envelope
    decay by e^(-pi * bw * t); the numerator is normalized against the
    denominator's response at the center frequency.
    """
    if not 0.0 < center_hz < sr / 2.0:
        raise ConfigError(f"resonator center {center_hz} Hz outside (0, Nyquist)")
    if bandwidth_hz <= 0.0:
        raise ConfigError("resonator bandwidth must be positive")
    r = math.exp(-math.pi * bandwidth_hz / sr)
    theta = 2.0 * math.pi * center_hz / sr
    a1 = -2.0 * r * math.cos(theta)
    a2 = r * r
    z = cmath.exp(-1j * theta)
    b0 = abs(1.0 + a1 * z + a2 * z * z)
    return np.array([b0]), np.array([1.0, a1, a2])


class Resonator:
    """Stateful two-pole band with retuning that preserves filter memory."""

    def __init__(self, center_hz: float, bandwidth_hz: float, sr: int):
        self._sr = sr
        self._b, self._a = design_resonator(center_hz, bandwidth_hz, sr)
        self._zi = np.zeros(2)
        self.center_hz = center_hz
        self.bandwidth_hz = bandwidth_hz

    def retune(self, center_hz: float, bandwidth_hz: float):
        if center_hz == self.center_hz and bandwidth_hz == self.bandwidth_hz:
            return
        self._b, self._a = design_resonator(center_hz, bandwidth_hz, self._sr)
        self.center_hz = center_hz
        self.bandwidth_hz = bandwidth_hz

    def process(self, x: np.ndarray) -> np.ndarray:
        y, self._zi = lfilter(self._b, self._a, x, zi=self._zi)
        return y

    def reset(self):
        self._zi[:] = 0.0


def plate_bank_config(pitch_hz: float, ratios, q_unloaded, gains) -> tuple:
    """FilterSpecs for the four bands at a given pitch.

    Ratios outside [0.8, 1.5] are rejected rather than clamped: a band
    that far off the third harmonic no longer reads as the same plate.
    """
    specs = []
    for ratio, qu, gain in zip(ratios, q_unloaded, gains):
        if not RATIO_MIN <= ratio <= RATIO_MAX:
            raise ConfigError(f"plate ratio {ratio} outside [{RATIO_MIN}, {RATIO_MAX}]")
        if qu <= 0.0:
            raise ConfigError("plate unloaded q must be positive")
        specs.append(FilterSpec(PLATE_CENTER_FACTOR * pitch_hz * ratio, qu / 2.0, gain))
    return tuple(specs)


class PlateBank:
    def __init__(self, sr: int, pitch_hz: float, constants):
        self._sr = sr
        self._ratios = tuple(
            constants[f"c_PLATE_RATIO_{k.value.upper()}"] for k in KIND_ORDER
        )
        self._q_unloaded = tuple(
            constants[f"c_PLATE_Q_UNLOADED_{k.value.upper()}"] for k in KIND_ORDER
        )
        self.dry_weight = constants.c_PLATE_DRY_WEIGHT
        self.wet_weights = tuple(
            constants[f"c_PLATE_WET_WEIGHT_{k.value.upper()}"] for k in KIND_ORDER
        )
        self.specs = plate_bank_config(
            pitch_hz, self._ratios, self._q_unloaded, self.wet_weights
        )
        self._filters = {
            kind: Resonator(spec.center_hz, spec.center_hz / spec.q, sr)
            for kind, spec in zip(KIND_ORDER, self.specs)
        }
        self.pitch_hz = pitch_hz

    def set_pitch(self, pitch_hz: float):
        if pitch_hz == self.pitch_hz:
            return
        self.specs = plate_bank_config(
            pitch_hz, self._ratios, self._q_unloaded, self.wet_weights
        )
        for kind, spec in zip(KIND_ORDER, self.specs):
            self._filters[kind].retune(spec.center_hz, spec.center_hz / spec.q)
        self.pitch_hz = pitch_hz

    def process(self, excitation_by_kind: dict) -> np.ndarray:
        """Mix dry pulse sum with the four per-kind filtered bands."""
        dry = None
        wet = None
        for kind, weight in zip(KIND_ORDER, self.wet_weights):
            x = excitation_by_kind[kind]
            dry = x.copy() if dry is None else dry + x
            band = self._filters[kind].process(x) * weight
            wet = band if wet is None else wet + band
        return self.dry_weight * dry + wet

    def reset(self):
        for f in self._filters.values():
            f.reset()


def verify_25pct(pitch_hz: float, sr: int, constants) -> bool:
    """Check the plate keeps ringing audibly between coherent pulses.

    Simulates one buckling pulse per band at full pulling speed and
    compares the decayed peak of the last resonant cycle before the next
    pulse would land (one pitch period later) against the band's own peak
    response. Every band must retain at least 25%.
    """
    period = 1.0 / pitch_hz
    dur = period / 3.0
    n = int(math.ceil(period * 1.25 * sr))
    t = np.arange(n) / sr
    specs = plate_bank_config(
        pitch_hz,
        tuple(constants[f"c_PLATE_RATIO_{k.value.upper()}"] for k in KIND_ORDER),
        tuple(constants[f"c_PLATE_Q_UNLOADED_{k.value.upper()}"] for k in KIND_ORDER),
        (1.0,) * 4,
    )
    pulse = np.where(t <= dur, np.sin(2.0 * np.pi * t / dur), 0.0)
    for spec in specs:
        b, a = design_resonator(spec.center_hz, spec.center_hz / spec.q, sr)
        y = np.abs(lfilter(b, a, pulse))
        peak = float(np.max(y[t <= period]))
        cycle = 1.0 / spec.center_hz
        window = (t >= period - cycle) & (t <= period)
        tail_peak = float(np.max(y[window]))
        if tail_peak < 0.25 * peak:
            return False
    return True


def clip_resonation(x: np.ndarray, loudness_nrm: float, drive_max: float = 3.0):
    """Progressive peak flattening for the upper loudness half.

    Identity for loudness <= 0.5. Above that, pre-gain g rises to
    1 + drive_max, hard limits at +/-1, then divides back out, so output
    magnitude never exceeds min(|x|, 1/g).
    """
    if loudness_nrm <= 0.5:
        return x
    g = 1.0 + drive_max * (2.0 * loudness_nrm - 1.0)
    return np.clip(x * g, -1.0, 1.0) / g
