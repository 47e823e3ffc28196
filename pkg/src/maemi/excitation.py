"""Tymbal drive: muscle contraction clock and rib buckling pulses.

A contraction fires each time the muscle phase accumulator wraps. The
accumulator integrates (pitch / 4) * envelope_factor * detune in closed
form, so wrap instants land on an exact continuous-time grid whenever the
factor is constant; nothing about the schedule depends on block size.

Each contraction emits four buckling events: three inward rib buckles and
one outward release. At full apodeme pulling speed the events are spaced
exactly one pitch period apart; as speed drops, a uniformly random extra
gap up to T * (1/speed - 1) decoheres them.

Draw order per contraction is fixed (one detune draw, then three gap
draws) so a seeded generator reproduces a performance bit for bit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class EventKind(enum.Enum):
    IN_RIB_1 = "InRib1"
    IN_RIB_2 = "InRib2"
    IN_RIB_3 = "InRib3"
    OUT_ALL = "OutAll"


KIND_ORDER = (
    EventKind.IN_RIB_1,
    EventKind.IN_RIB_2,
    EventKind.IN_RIB_3,
    EventKind.OUT_ALL,
)

# outward release leads with the positive lobe; in-buckles lead negative
PULSE_SIGN = {
    EventKind.IN_RIB_1: -1.0,
    EventKind.IN_RIB_2: -1.0,
    EventKind.IN_RIB_3: -1.0,
    EventKind.OUT_ALL: 1.0,
}


@dataclass(frozen=True)
class BucklingEvent:
    onset_s: float
    kind: EventKind
    amplitude: float
    pulse_duration_s: float

    @property
    def end_s(self) -> float:
        return self.onset_s + self.pulse_duration_s


def muscle_base_freq(pitch_hz: float, factor: float) -> float:
    """Contraction rate: a quarter of the pitch, scaled by the phase factor."""
    return (pitch_hz / 4.0) * factor


def sample_detune_cents(rng: np.random.Generator, sigma_cents: float, limit_cents: float) -> float:
    """Zero-mean normal draw in cents, redrawn until within +/- limit.

    sigma_cents <= 0 disables detune and returns exactly 0 without
    consuming generator state.
    """
    if sigma_cents <= 0.0:
        return 0.0
    while True:
        cents = rng.normal(0.0, sigma_cents)
        if abs(cents) <= limit_cents:
            return float(cents)


def detune_factor(cents: float) -> float:
    return 2.0 ** (cents / 1200.0)


def apodeme_speed(muscle_freq_hz: float, pitch_hz: float) -> float:
    """Normalized pulling speed: rate relative to the coherent rate, capped at 1."""
    return min(1.0, muscle_freq_hz / (pitch_hz / 4.0))


def amplitude_scale(loudness_nrm: float) -> float:
    """Lower loudness half maps linearly onto buckling amplitude; upper half saturates."""
    return min(loudness_nrm, 0.5) / 0.5


def pulse_duration_s(pitch_hz: float) -> float:
    # one cycle of the 3*pitch plate resonance, leaving room for exactly
    # two in-phase echo cycles before the next pulse at full speed
    return 1.0 / (3.0 * pitch_hz)


def schedule_contraction(
    t0_s: float,
    pitch_hz: float,
    speed_nrm: float,
    loudness_nrm: float,
    rng: np.random.Generator,
) -> list:
    """Four buckling events for one contraction starting at t0_s.

    Inter-event gaps are T + U(0, D) with T = 1/pitch and
    D = T * (1/speed - 1); at speed 1 the gaps collapse to exactly T.
    """
    if speed_nrm <= 0.0:
        return []
    speed = min(1.0, speed_nrm)
    period = 1.0 / pitch_hz
    spread = period * (1.0 / speed - 1.0)
    amp = amplitude_scale(loudness_nrm)
    dur = pulse_duration_s(pitch_hz)

    events = []
    onset = t0_s
    for i, kind in enumerate(KIND_ORDER):
        if i > 0:
            onset += period + rng.uniform(0.0, spread)
        events.append(BucklingEvent(onset, kind, amp, dur))
    return events


def render_buckling_pulse(event: BucklingEvent, t_s: float, gain: float = 1.0) -> float:
    """Pulse value at one instant; zero outside [onset, onset + duration].

    The pulse is a single bipolar sine cycle, so its integral is zero and
    no net displacement accumulates into the filters.
    """
    tau = t_s - event.onset_s
    if tau < 0.0 or tau > event.pulse_duration_s:
        return 0.0
    return (
        PULSE_SIGN[event.kind]
        * math.sin(2.0 * math.pi * tau / event.pulse_duration_s)
        * event.amplitude
        * gain
    )


def add_pulse_to_block(
    event: BucklingEvent, gain: float, block_start: int, out: np.ndarray, sr: int
):
    """Accumulate the event's samples that overlap [block_start, block_start+len)."""
    i0 = max(block_start, int(math.ceil(event.onset_s * sr - 1e-9)))
    i1 = min(block_start + len(out) - 1, int(math.floor(event.end_s * sr + 1e-9)))
    if i1 < i0:
        return
    tau = np.arange(i0, i1 + 1, dtype=np.float64) / sr - event.onset_s
    out[i0 - block_start : i1 - block_start + 1] += (
        PULSE_SIGN[event.kind]
        * np.sin(2.0 * np.pi * tau / event.pulse_duration_s)
        * (event.amplitude * gain)
    )


class MuscleClock:
    """Contraction scheduler driven by the muscle-rate envelope integral.

    Phase between wraps is the pure function
        phase(t) = base * detune * (I(t) - I_anchor)
    where I is the envelope's absolute time integral, so results are
    identical no matter how the render is chunked.
    """

    def __init__(self, rng: np.random.Generator, sigma_cents: float, limit_cents: float):
        self._rng = rng
        self._sigma = float(sigma_cents)
        self._limit = float(limit_cents)
        self._base_hz = 0.0
        self._phase0 = 0.0
        self._int0 = 0.0
        self._det = detune_factor(sample_detune_cents(rng, self._sigma, self._limit))
        self._t_last = None
        self._int_last = 0.0

    @property
    def detune(self) -> float:
        return self._det

    def _phase_at(self, integral: float) -> float:
        return self._phase0 + self._base_hz * self._det * (integral - self._int0)

    def process_block(
        self,
        times_s: np.ndarray,
        levels: np.ndarray,
        integrals: np.ndarray,
        pitch_hz: float,
        loudness_nrm: float,
    ):
        """Scan one block for contraction wraps.

        Returns (events, trig_sample_offsets, detune_per_sample) where
        offsets index into this block and events carry absolute onsets.
        """
        base = pitch_hz / 4.0
        n = len(times_s)
        if base != self._base_hz:
            # re-anchor so already-accumulated phase survives a pitch change
            if self._base_hz != 0.0:
                self._phase0 = self._phase_at(integrals[0])
                self._int0 = float(integrals[0])
            else:
                self._int0 = float(integrals[0])
            self._base_hz = base

        det_arr = np.full(n, self._det)
        events: list = []
        trig_offsets: list = []

        while True:
            rate = self._base_hz * self._det
            if rate <= 0.0:
                break
            need = self._int0 + (1.0 - self._phase0) / rate
            n_w = int(np.searchsorted(integrals, need, side="left"))
            if n_w >= n:
                break
            if n_w == 0:
                t_a, i_a = self._t_last, self._int_last
                if t_a is None:
                    t_a, i_a = float(times_s[0]), float(integrals[0])
            else:
                t_a, i_a = float(times_s[n_w - 1]), float(integrals[n_w - 1])
            t_b, i_b = float(times_s[n_w]), float(integrals[n_w])
            if i_b > i_a:
                t_star = t_a + (need - i_a) / (i_b - i_a) * (t_b - t_a)
            else:
                t_star = t_b

            speed = min(1.0, float(levels[n_w]))
            cents = sample_detune_cents(self._rng, self._sigma, self._limit)
            self._det = detune_factor(cents)
            det_arr[n_w:] = self._det
            events.extend(
                schedule_contraction(t_star, pitch_hz, speed, loudness_nrm, self._rng)
            )
            trig_offsets.append(n_w)
            self._phase0 = 0.0
            self._int0 = need

        if n:
            self._t_last = float(times_s[-1])
            self._int_last = float(integrals[-1])
        return events, trig_offsets, det_arr
