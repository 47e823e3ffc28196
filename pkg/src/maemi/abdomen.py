"""Abdominal resonator: Helmholtz-tuned bandpass plus opercular shading.

The abdomen is treated as a Helmholtz resonator whose neck is the pair of
tympana and whose cavity is the extendable abdominal air sac. For a single
tympanum of area a and cavity volume V, with an unflanged neck-length
correction from the effective radius,

    r  = sqrt(a / pi)
    L  = 16 r / (3 pi)
    A  = 2 a              (two tympana)
    f0 = (c / 2 pi) * sqrt(A / (L V))

The playing resonance is not the raw physical f0: the geometry's f0 is
normalized by its value at full extension and that ratio steers an anchor
of 3x a reference pitch. In the default mode the anchor stays on E5
regardless of played pitch; the alternative mode follows the played pitch.

The filter itself is three cascaded two-pole resonators sharing f0 (six
poles, -36 dB/oct asymptotic skirts) behind a DC-blocking zero; per-stage
bandwidth is widened so the cascade's -3 dB width matches the requested
bandwidth.
"""

from __future__ import annotations

import enum
import logging
import math

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError
from .plate import design_resonator

log = logging.getLogger(__name__)

E5_HZ = 659.26
ANCHOR_FACTOR = 3.0

BANDWIDTH_FACTOR_MIN = 0.2
BANDWIDTH_FACTOR_MAX = 0.8

# three identical stages: widen each so the cascade -3 dB width is as asked
STAGE_WIDEN = 1.0 / math.sqrt(2.0 ** (1.0 / 3.0) - 1.0)
N_STAGES = 3

# coefficient update granularity for a sweeping f0, in absolute samples;
# fixed grid keeps renders identical across block sizes
COEFF_QUANTUM = 32

DC_BLOCK_POLE = 0.995


class PitchMode(enum.Enum):
    FIXED_E5 = "fixed"
    FOLLOWING = "following"


def helmholtz_f0(tympanum_area_m2, cavity_volume_m3, speed_of_sound_mps=343.0):
    """Resonant frequency of the two-tympana Helmholtz geometry.

    Accepts scalars or arrays; rejects non-positive geometry.
    """
    a = np.asarray(tympanum_area_m2, dtype=np.float64)
    v = np.asarray(cavity_volume_m3, dtype=np.float64)
    if np.any(a <= 0.0) or np.any(v <= 0.0) or speed_of_sound_mps <= 0.0:
        raise ConfigError("helmholtz geometry must be strictly positive")
    radius = np.sqrt(a / math.pi)
    neck_len = 16.0 * radius / (3.0 * math.pi)
    area_total = 2.0 * a
    f0 = (speed_of_sound_mps / (2.0 * math.pi)) * np.sqrt(
        area_total / (neck_len * v)
    )
    return float(f0) if f0.ndim == 0 else f0


def abdominal_f0(
    pitch_hz: float,
    mode: PitchMode,
    tympanum_area_m2,
    cavity_volume_m3,
    area_max_m2: float,
    volume_max_m3: float,
    speed_of_sound_mps: float = 343.0,
):
    """Playing resonance: geometry-normalized ratio steering a 3x anchor."""
    anchor = ANCHOR_FACTOR * (E5_HZ if mode is PitchMode.FIXED_E5 else pitch_hz)
    ref = helmholtz_f0(area_max_m2, volume_max_m3, speed_of_sound_mps)
    now = helmholtz_f0(tympanum_area_m2, cavity_volume_m3, speed_of_sound_mps)
    return anchor * now / ref


def abdominal_bandwidth(pitch_hz: float, factor: float = 0.45) -> float:
    if not BANDWIDTH_FACTOR_MIN <= factor <= BANDWIDTH_FACTOR_MAX:
        raise ConfigError(
            f"bandwidth factor {factor} outside "
            f"[{BANDWIDTH_FACTOR_MIN}, {BANDWIDTH_FACTOR_MAX}]"
        )
    return factor * pitch_hz


def opercular_gain(area_nrm, floor_db: float = -20.0):
    """Shading gain for the current effective tympanal area.

    Fully open (1.0) passes untouched; fully covered lands on the floor.
    Interpolation is linear in dB so equal area steps sound like equal
    level steps.
    """
    area = np.clip(area_nrm, 0.0, 1.0)
    return 10.0 ** ((floor_db * (1.0 - area)) / 20.0)


class Bandpass6:
    """Six-pole resonant bandpass with block-safe center sweeping.

    Coefficients refresh on a fixed 32-sample absolute grid while f0
    sweeps, so the rendered result does not depend on how the caller
    chunks its buffers. Stage state is carried across every retune.
    """

    def __init__(self, sr: int):
        if sr <= 0:
            raise ConfigError("sample rate must be positive")
        self._sr = sr
        self._zi = [np.zeros(2) for _ in range(N_STAGES)]
        self._dc_zi = np.zeros(1)
        self._b = None
        self._a = None
        self._f0 = None
        self._bw = None
        self._warned_clamp = False

    def _clamp_f0(self, f0: float) -> float:
        limit = self._sr / 4.0
        if f0 > limit:
            if not self._warned_clamp:
                log.warning("abdominal f0 %.1f Hz above %.1f Hz, clamping", f0, limit)
                self._warned_clamp = True
            return limit
        return f0

    def set_response(self, f0_hz: float, bandwidth_hz: float):
        f0_hz = self._clamp_f0(float(f0_hz))
        if f0_hz == self._f0 and bandwidth_hz == self._bw:
            return
        self._b, self._a = design_resonator(
            f0_hz, bandwidth_hz * STAGE_WIDEN, self._sr
        )
        self._f0 = f0_hz
        self._bw = bandwidth_hz

    def _run(self, x: np.ndarray) -> np.ndarray:
        y = x
        for i in range(N_STAGES):
            y, self._zi[i] = lfilter(self._b, self._a, y, zi=self._zi[i])
        return y

    def process(self, x: np.ndarray) -> np.ndarray:
        if self._f0 is None:
            raise ConfigError("set_response must be called before process")
        y, self._dc_zi = lfilter(
            [1.0, -1.0], [1.0, -DC_BLOCK_POLE], x, zi=self._dc_zi
        )
        return self._run(y)

    def process_swept(
        self, x: np.ndarray, f0_hz: np.ndarray, bandwidth_hz: float, block_start: int
    ) -> np.ndarray:
        """Filter a block whose target f0 varies per sample.

        f0 is sampled at the start of each 32-sample grid cell; runs of
        equal values collapse into single filter calls.
        """
        n = len(x)
        y, self._dc_zi = lfilter(
            [1.0, -1.0], [1.0, -DC_BLOCK_POLE], x, zi=self._dc_zi
        )
        out = np.empty(n)
        i = 0
        while i < n:
            cell_end = ((block_start + i) // COEFF_QUANTUM + 1) * COEFF_QUANTUM
            j = min(n, cell_end - block_start)
            f0 = float(f0_hz[i])
            # extend through following cells that share this f0
            while j < n and float(f0_hz[j]) == f0:
                j = min(n, j + COEFF_QUANTUM)
            self.set_response(f0, bandwidth_hz)
            out[i:j] = self._run(y[i:j])
            i = j
        return out

    def reset(self):
        for zi in self._zi:
            zi[:] = 0.0
        self._dc_zi[:] = 0.0
