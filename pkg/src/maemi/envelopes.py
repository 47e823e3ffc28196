"""Curved multi-segment envelopes keyed to call phases.

Each call phase owns a short segment list. A segment heads toward a target
level over a duration, along either a straight line or an exponential bend

    level(u) = v0 + (v1 - v0) * (1 - e^(c*u)) / (1 - e^c),   u in [0, 1]

which degenerates to the straight line when |c| < 1e-6. Positive curvature
starts slow and accelerates, negative starts fast and settles.

Retriggering never jumps: a freshly triggered envelope begins from whatever
level is current, so a new first segment interpolates from there. An
explicit jump is expressed as a zero-duration segment.

Everything is evaluated from absolute time, not per-sample accumulation,
so levels are sample-rate invariant and the running time integral (used by
the tymbal muscle phase accumulator) is exact regardless of how rendering
is chunked into blocks.

Parameters follow the numpy docstring shape used elsewhere in the package
only where the behavior is not obvious from the signature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .control import CallPhase

LINEAR_EPS = 1e-6


@dataclass(frozen=True)
class Segment:
    """One envelope leg: go to `target_level` over `duration_s`.

    duration_s == 0 is an instantaneous jump. Curvature follows the
    exponential bend above; 0 means linear.
    """

    target_level: float
    duration_s: float
    curvature: float = 0.0

    def __post_init__(self):
        if self.duration_s < 0.0:
            raise ValueError("segment duration must be >= 0")


@dataclass(frozen=True)
class PhaseEnvelope:
    """Segment list for one call phase.

    sustain_index, when set, is the segment at whose end the envelope holds
    until the next trigger; otherwise it holds at the final segment's end.
    """

    segments: tuple[Segment, ...]
    sustain_index: Optional[int] = None

    def __post_init__(self):
        if not self.segments:
            raise ValueError("phase envelope needs at least one segment")
        if self.sustain_index is not None and not (
            0 <= self.sustain_index < len(self.segments)
        ):
            raise ValueError("sustain_index out of range")


def segment_value(v0: float, v1: float, curvature: float, u):
    """Level at normalized position u (scalar or ndarray), endpoints exact."""
    u = np.clip(u, 0.0, 1.0)
    if abs(curvature) < LINEAR_EPS:
        w = u
    else:
        # expm1 keeps the ratio well conditioned for small curvatures
        w = np.expm1(curvature * u) / math.expm1(curvature)
    return v0 + (v1 - v0) * w


def segment_integral(v0: float, v1: float, curvature: float, u):
    """Integral of segment_value over [0, u], in units of segment duration.

    Multiply by duration_s for a time integral in level-seconds. Used to
    advance oscillator phase through a curved frequency ramp in closed form.
    """
    u = np.clip(u, 0.0, 1.0)
    if abs(curvature) < LINEAR_EPS:
        w_int = u * u * 0.5
    else:
        # (expm1(cu) - cu) avoids the cancellation that the naive
        # u - (e^(cu)-1)/c form suffers for curvatures near the cutoff
        c = curvature
        w_int = (np.expm1(c * u) - c * u) / (c * math.expm1(c))
    return v0 * u + (v1 - v0) * w_int


class EnvelopeSystem:
    """Per-phase envelope bank with a single running output level.

    The system idles at `initial_level` until the first trigger. `trigger`
    swaps in the segment list for a phase; the first segment departs from
    the current level, so output is continuous across any retrigger.

    Evaluation methods must be called with non-decreasing times.
    """

    def __init__(self, phases: dict, initial_level: float = 0.0):
        self._phases = dict(phases)
        self._t = 0.0
        # idle state is modeled as an indefinite hold
        self._segs: Optional[tuple[Segment, ...]] = None
        self._idx = 0
        self._seg_t0 = 0.0
        self._seg_v0 = float(initial_level)
        self._int0 = 0.0  # integral of level from t=0 up to _seg_t0 / _hold_t0
        self._sustain: Optional[int] = None
        self._holding = True
        self._hold_level = float(initial_level)
        self._hold_t0 = 0.0
        self.unknown_phase_count = 0

    # -- state bookkeeping ------------------------------------------------

    def _enter_hold(self, level: float, t: float):
        self._holding = True
        self._hold_level = level
        self._hold_t0 = t

    def _complete_segment(self):
        seg = self._segs[self._idx]
        self._int0 += seg.duration_s * segment_integral(
            self._seg_v0, seg.target_level, seg.curvature, 1.0
        )
        end_t = self._seg_t0 + seg.duration_s
        if self._idx == self._sustain or self._idx + 1 >= len(self._segs):
            self._enter_hold(seg.target_level, end_t)
            return
        self._idx += 1
        self._seg_t0 = end_t
        self._seg_v0 = seg.target_level

    def _settle(self, t: float):
        while not self._holding:
            seg = self._segs[self._idx]
            if t < self._seg_t0 + seg.duration_s and seg.duration_s > 0.0:
                return
            self._complete_segment()

    def _level_at(self, t: float) -> float:
        if self._holding:
            return self._hold_level
        seg = self._segs[self._idx]
        u = (t - self._seg_t0) / seg.duration_s
        return float(segment_value(self._seg_v0, seg.target_level, seg.curvature, u))

    def _integral_at(self, t: float) -> float:
        if self._holding:
            return self._int0 + self._hold_level * (t - self._hold_t0)
        seg = self._segs[self._idx]
        u = (t - self._seg_t0) / seg.duration_s
        return self._int0 + seg.duration_s * float(
            segment_integral(self._seg_v0, seg.target_level, seg.curvature, u)
        )

    # -- public API --------------------------------------------------------

    @property
    def now_s(self) -> float:
        return self._t

    @property
    def level(self) -> float:
        self._settle(self._t)
        return self._level_at(self._t)

    def trigger(self, phase: CallPhase) -> bool:
        """Swap in the envelope for `phase`, departing from the current level.

        Unknown phases are counted and ignored so a voice keeps running.
        """
        env = self._phases.get(phase)
        if env is None:
            self.unknown_phase_count += 1
            return False
        self._settle(self._t)
        cur = self._level_at(self._t)
        cur_int = self._integral_at(self._t)
        self._segs = env.segments
        self._idx = 0
        self._seg_t0 = self._t
        self._seg_v0 = cur
        self._int0 = cur_int
        self._sustain = env.sustain_index
        self._holding = False
        return True

    def sample(self, dt_s: float) -> float:
        """Advance by dt_s and return the level at the new time."""
        self._t += dt_s
        self._settle(self._t)
        return self._level_at(self._t)

    def render(self, times_s: np.ndarray) -> np.ndarray:
        levels, _ = self.render_with_integral(times_s, want_integral=False)
        return levels

    def render_with_integral(self, times_s: np.ndarray, want_integral: bool = True):
        """Vectorized levels (and running time-integrals) at absolute times.

        Segment boundaries inside the span are handled piecewise; the state
        is left settled at times_s[-1].
        """
        times_s = np.asarray(times_s, dtype=np.float64)
        n = times_s.shape[0]
        levels = np.empty(n)
        integrals = np.empty(n) if want_integral else None
        i = 0
        while i < n:
            self._settle(times_s[i])
            if self._holding:
                sl = slice(i, n)
                levels[sl] = self._hold_level
                if want_integral:
                    integrals[sl] = self._int0 + self._hold_level * (
                        times_s[sl] - self._hold_t0
                    )
                i = n
                break
            seg = self._segs[self._idx]
            end_t = self._seg_t0 + seg.duration_s
            j = int(np.searchsorted(times_s, end_t, side="left"))
            j = min(max(j, i + 1), n)
            u = (times_s[i:j] - self._seg_t0) / seg.duration_s
            levels[i:j] = segment_value(self._seg_v0, seg.target_level, seg.curvature, u)
            if want_integral:
                integrals[i:j] = self._int0 + seg.duration_s * segment_integral(
                    self._seg_v0, seg.target_level, seg.curvature, u
                )
            i = j
        if n:
            self._t = max(self._t, float(times_s[-1]))
            self._settle(self._t)
        return levels, integrals
