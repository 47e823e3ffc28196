"""Single synthesis voice: muscle clock into tymbal plate into abdomen.

One Voice renders fixed-size blocks from successive ControlFrames and
exposes every intermediate signal as a named tap, so verification can probe
the chain anywhere without re-deriving state. The per-block order is

    phase update -> envelopes -> contraction scheduling -> buckling pulses
    -> plate bank -> loudness clip -> abdominal bandpass -> opercular
    shading -> output gain and release ramp

Determinism contract: a Voice built from the same config and fed the same
frame sequence produces bit-identical output. All randomness flows through
one seeded generator in a fixed draw order.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .abdomen import (
    E5_HZ,
    Bandpass6,
    PitchMode,
    abdominal_bandwidth,
    abdominal_f0,
    opercular_gain,
)
from .constants import Constants
from .control import (
    PITCH_MAX_HZ,
    CallPhase,
    ControlFrame,
    advance_phase,
    honored_trigger,
)
from .envelopes import EnvelopeSystem, PhaseEnvelope, Segment
from .errors import ConfigError
from .excitation import KIND_ORDER, MuscleClock, add_pulse_to_block
from .plate import PlateBank, clip_resonation, verify_25pct

log = logging.getLogger(__name__)

SUPPORTED_RATES = (44100, 48000, 96000)
MIN_BLOCK = 16
DEFAULT_SEED = 0xC1CADA


@dataclass(frozen=True)
class VoiceConfig:
    sample_rate_hz: int = 48000
    block_frames: int = 256
    seed: int = DEFAULT_SEED
    mode: PitchMode = PitchMode.FIXED_E5
    constants: Constants = field(default_factory=Constants)
    release_duration_s: float = 0.05

    def __post_init__(self):
        if self.sample_rate_hz not in SUPPORTED_RATES:
            raise ConfigError(
                f"sample rate {self.sample_rate_hz} not one of {SUPPORTED_RATES}"
            )
        if self.block_frames < MIN_BLOCK:
            raise ConfigError(f"block size {self.block_frames} below {MIN_BLOCK}")
        if not isinstance(self.mode, PitchMode):
            raise ConfigError(f"mode must be a PitchMode, got {self.mode!r}")
        if self.release_duration_s <= 0.0:
            raise ConfigError("release duration must be positive")


@dataclass
class VoiceTaps:
    """Every per-sample signal from one rendered block."""

    muscle_trig: np.ndarray
    muscle_freq_hz: np.ndarray
    apodeme_speed_nrm: np.ndarray
    ribs_buckling: np.ndarray
    plate_resonation: np.ndarray
    plate_clipping_resonation: np.ndarray
    abdominal_volume_m3: np.ndarray
    tympanal_area_m2: np.ndarray
    unattenuated_abdominal_resonation: np.ndarray
    opercular_attenuation: np.ndarray
    abdominal_resonation: np.ndarray
    output_l: np.ndarray
    output_r: np.ndarray

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


TAP_NAMES = tuple(f.name for f in fields(VoiceTaps))


def build_envelope_systems(constants: Constants):
    """Muscle-rate, tympanal-area, and abdomen-volume envelope banks.

    Segment shapes per phase are entirely table-driven; retuning the sound
    is a constants override, not a code change.
    """
    c = constants

    muscle = EnvelopeSystem(
        {
            CallPhase.INITIAL: PhaseEnvelope(
                (
                    Segment(c.c_MAETRIG_MUSCFREQ_START_NRM, 0.0),
                    Segment(
                        c.c_MUSCFREQ_COHERENT_NRM,
                        c.c_MAETRIG_MUSCFREQ_RISE_DUR_S,
                        c.c_MAETRIG_MUSCFREQ_RISE_CURVE,
                    ),
                )
            ),
            CallPhase.MIDDLE: PhaseEnvelope(
                (
                    Segment(
                        c.c_MAERETRIG_MUSCFREQ_DIP_NRM,
                        c.c_MAERETRIG_MUSCFREQ_DIP_DUR_S,
                        c.c_MAERETRIG_MUSCFREQ_DIP_CURVE,
                    ),
                    Segment(
                        c.c_MUSCFREQ_COHERENT_NRM,
                        c.c_MAERETRIG_MUSCFREQ_RISE_DUR_S,
                        c.c_MAERETRIG_MUSCFREQ_RISE_CURVE,
                    ),
                )
            ),
            CallPhase.FINAL: PhaseEnvelope(
                (
                    Segment(
                        c.c_MUSCFREQ_COHERENT_NRM, c.c_MITRIG_MUSCFREQ_HOLD_DUR_S
                    ),
                    Segment(
                        c.c_MITRIG_MUSCFREQ_LOW_NRM,
                        c.c_MITRIG_MUSCFREQ_FALL_DUR_S,
                        c.c_MITRIG_MUSCFREQ_FALL_CURVE,
                    ),
                )
            ),
            CallPhase.RELEASING: PhaseEnvelope(
                (
                    Segment(
                        c.c_RELEASE_MUSCFREQ_END_NRM, c.c_RELEASE_MUSCFREQ_FALL_DUR_S
                    ),
                )
            ),
        },
        initial_level=0.0,
    )

    area = EnvelopeSystem(
        {
            CallPhase.INITIAL: PhaseEnvelope(
                (
                    Segment(c.c_MAETRIG_TYMPAREA_START_NRM, 0.0),
                    Segment(
                        c.c_MAETRIG_TYMPAREA_MAX_NRM,
                        c.c_MAETRIG_TYMPAREA_RISE_DUR_S,
                        c.c_MAETRIG_TYMPAREA_RISE_CURVE,
                    ),
                    Segment(
                        c.c_MAETRIG_TYMPAREA_SUST_NRM,
                        c.c_MAETRIG_TYMPAREA_SETTLE_DUR_S,
                        c.c_MAETRIG_TYMPAREA_SETTLE_CURVE,
                    ),
                )
            ),
            CallPhase.MIDDLE: PhaseEnvelope(
                (
                    Segment(c.c_MAERETRIG_TYMPAREA_START_NRM, 0.0),
                    Segment(
                        c.c_MAERETRIG_TYMPAREA_MAX_NRM,
                        c.c_MAERETRIG_TYMPAREA_RISE_DUR_S,
                        c.c_MAERETRIG_TYMPAREA_RISE_CURVE,
                    ),
                    Segment(
                        c.c_MAERETRIG_TYMPAREA_SAG_NRM,
                        c.c_MAERETRIG_TYMPAREA_SAG_DUR_S,
                        c.c_MAERETRIG_TYMPAREA_SAG_CURVE,
                    ),
                    Segment(
                        c.c_MAERETRIG_TYMPAREA_SUST_NRM,
                        c.c_MAERETRIG_TYMPAREA_SUST_RISE_DUR_S,
                    ),
                )
            ),
            CallPhase.FINAL: PhaseEnvelope(
                (
                    Segment(
                        c.c_MAETRIG_TYMPAREA_SUST_NRM, c.c_MITRIG_TYMPAREA_HOLD_DUR_S
                    ),
                    Segment(
                        c.c_MITRIG_TYMPAREA_MAX_NRM,
                        c.c_MITRIG_TYMPAREA_RISE_DUR_S,
                        c.c_MITRIG_TYMPAREA_RISE_CURVE,
                    ),
                    Segment(
                        c.c_MITRIG_TYMPAREA_END_NRM,
                        c.c_MITRIG_TYMPAREA_FALL_DUR_S,
                        c.c_MITRIG_TYMPAREA_FALL_CURVE,
                    ),
                )
            ),
            CallPhase.RELEASING: PhaseEnvelope(
                (
                    Segment(
                        c.c_RELEASE_TYMPAREA_END_NRM, c.c_RELEASE_TYMPAREA_FALL_DUR_S
                    ),
                )
            ),
        },
        initial_level=c.c_TYMPAREA_REST_NRM,
    )

    volume = EnvelopeSystem(
        {
            CallPhase.INITIAL: PhaseEnvelope(
                (
                    Segment(
                        c.c_MAETRIG_ABDVOL_MAX_NRM,
                        c.c_MAETRIG_ABDVOL_RISE_DUR_S,
                        c.c_MAETRIG_ABDVOL_RISE_CURVE,
                    ),
                )
            ),
            CallPhase.MIDDLE: PhaseEnvelope(
                (
                    Segment(
                        c.c_MAERETRIG_ABDVOL_DIP_NRM, c.c_MAERETRIG_ABDVOL_DIP_DUR_S
                    ),
                    Segment(
                        c.c_MAETRIG_ABDVOL_MAX_NRM, c.c_MAERETRIG_ABDVOL_RISE_DUR_S
                    ),
                )
            ),
            CallPhase.FINAL: PhaseEnvelope(
                (
                    Segment(
                        c.c_MITRIG_ABDVOL_END_NRM,
                        c.c_MITRIG_ABDVOL_FALL_DUR_S,
                        c.c_MITRIG_ABDVOL_FALL_CURVE,
                    ),
                )
            ),
            CallPhase.RELEASING: PhaseEnvelope(
                (
                    Segment(c.c_RELEASE_ABDVOL_END_NRM, c.c_RELEASE_ABDVOL_FALL_DUR_S),
                )
            ),
        },
        initial_level=c.c_ABDVOL_REST_NRM,
    )

    return muscle, area, volume


class Voice:
    """One rendering voice; drive with process_block, read the taps."""

    def __init__(self, config: VoiceConfig):
        self.config = config
        c = config.constants
        self._sr = config.sample_rate_hz
        self._block = config.block_frames
        self._rng = np.random.default_rng(config.seed)
        self._kind_gains = {
            k: c[f"c_PULSE_GAIN_{k.value.upper()}"] for k in KIND_ORDER
        }
        self._bw_factor = c.c_ABD_BANDWIDTH_FACTOR
        self._area_lo = c.c_TYMPANUM_AREA_MIN_M2
        self._area_hi = c.c_TYMPANUM_AREA_MAX_M2
        self._vol_lo = c.c_ABDOMEN_VOLUME_MIN_M3
        self._vol_hi = c.c_ABDOMEN_VOLUME_MAX_M3
        if self._area_hi <= self._area_lo or self._vol_hi <= self._vol_lo:
            raise ConfigError("geometry ranges must have max > min")

        self._plate = PlateBank(self._sr, PITCH_MAX_HZ, c)
        self._abdomen = Bandpass6(self._sr)
        self._fresh_call()
        self._n0 = 0
        self._gate_prev = False

        self.plate_ring_ok = all(
            verify_25pct(p, self._sr, c) for p in (329.63, PITCH_MAX_HZ)
        )
        if not self.plate_ring_ok:
            log.warning(
                "plate bank decays below 25%% between coherent pulses; "
                "check ratio/q constants"
            )

    def _fresh_call(self):
        c = self.config.constants
        self._muscle_env, self._area_env, self._vol_env = build_envelope_systems(c)
        self._clock = MuscleClock(
            self._rng, c.c_DETUNE_SIGMA_CENTS, c.c_DETUNE_LIMIT_CENTS
        )
        self._plate.reset()
        self._abdomen.reset()
        self._pending = []
        self._phase = CallPhase.IDLE
        self._release_t0 = None
        self._finished = False

    # -- observable state ---------------------------------------------------

    @property
    def phase(self) -> CallPhase:
        return self._phase

    @property
    def finished(self) -> bool:
        """True once the release ramp has fully closed."""
        return self._finished

    @property
    def sample_pos(self) -> int:
        return self._n0

    # -- rendering ----------------------------------------------------------

    def process_block(self, frame: ControlFrame):
        """Render one block; returns (stereo frames, taps).

        Stereo comes back as shape (block_frames, 2); the same samples are
        also visible through the output_l / output_r taps.
        """
        c = self.config.constants
        n = self._block
        sr = self._sr
        n0 = self._n0
        times = (n0 + np.arange(n)) / sr

        # a new gate on a released voice starts the next call from scratch
        if frame.gate and not self._gate_prev and self._release_t0 is not None:
            self._fresh_call()
        self._gate_prev = frame.gate

        nxt = advance_phase(self._phase, frame)
        entering_release = (
            nxt is CallPhase.RELEASING and self._phase is not CallPhase.RELEASING
        )
        retrig = (
            frame.gate
            and self._phase is not CallPhase.RELEASING
            and honored_trigger(frame) is not None
        )
        self._phase = nxt
        if entering_release:
            self._release_t0 = float(times[0])
            for env in (self._muscle_env, self._area_env, self._vol_env):
                env.trigger(CallPhase.RELEASING)
        elif retrig:
            for env in (self._muscle_env, self._area_env, self._vol_env):
                env.trigger(nxt)

        m_lvl, m_int = self._muscle_env.render_with_integral(times)
        a_lvl = self._area_env.render(times)
        v_lvl = self._vol_env.render(times)

        events, trig_offsets, det_arr = self._clock.process_block(
            times, m_lvl, m_int, frame.pitch_hz, frame.loudness_nrm
        )
        self._pending.extend(events)

        muscle_trig = np.zeros(n)
        for off in trig_offsets:
            muscle_trig[off] = 1.0
        muscle_freq = (frame.pitch_hz / 4.0) * m_lvl * det_arr
        speed = np.minimum(1.0, m_lvl)

        exc = {k: np.zeros(n) for k in KIND_ORDER}
        last = n0 + n - 1
        keep = []
        for ev in self._pending:
            add_pulse_to_block(ev, self._kind_gains[ev.kind], n0, exc[ev.kind], sr)
            if int(math.floor(ev.end_s * sr + 1e-9)) > last:
                keep.append(ev)
        self._pending = keep

        ribs = exc[KIND_ORDER[0]].copy()
        for k in KIND_ORDER[1:]:
            ribs += exc[k]

        self._plate.set_pitch(frame.pitch_hz)
        plate_out = self._plate.process(exc)
        if c.c_CLIP_ENABLE > 0.0:
            clipped = clip_resonation(
                plate_out, frame.loudness_nrm, c.c_CLIP_DRIVE_MAX
            )
        else:
            clipped = plate_out

        area_m2 = self._area_lo + a_lvl * (self._area_hi - self._area_lo)
        vol_m3 = self._vol_lo + v_lvl * (self._vol_hi - self._vol_lo)

        f0 = abdominal_f0(
            frame.pitch_hz,
            self.config.mode,
            area_m2,
            vol_m3,
            self._area_hi,
            self._vol_hi,
            c.c_SPEED_OF_SOUND_MPS,
        )
        # fixed mode pins the whole abdomen response, width included, so the
        # measured transfer peak cannot drift with the played note
        track_hz = E5_HZ if self.config.mode is PitchMode.FIXED_E5 else frame.pitch_hz
        bw = abdominal_bandwidth(track_hz, self._bw_factor)
        unatt = self._abdomen.process_swept(clipped, f0, bw, n0)

        op = opercular_gain(a_lvl, c.c_OPERCULA_FLOOR_DB)
        abd = unatt * op

        out = abd * c.c_OUTPUT_GAIN
        if self._release_t0 is not None:
            rel = self.config.release_duration_s
            ramp = np.clip(1.0 - (times - self._release_t0) / rel, 0.0, 1.0)
            out = out * ramp
            if times[-1] >= self._release_t0 + rel:
                # keep _release_t0 so the closed ramp pins later blocks to
                # exact zero even if an excitation tail is still decaying
                self._finished = True
                self._phase = CallPhase.IDLE

        self._n0 = n0 + n
        taps = VoiceTaps(
            muscle_trig=muscle_trig,
            muscle_freq_hz=muscle_freq,
            apodeme_speed_nrm=speed,
            ribs_buckling=ribs,
            plate_resonation=plate_out,
            plate_clipping_resonation=clipped,
            abdominal_volume_m3=vol_m3,
            tympanal_area_m2=area_m2,
            unattenuated_abdominal_resonation=unatt,
            opercular_attenuation=op,
            abdominal_resonation=abd,
            output_l=out,
            output_r=out.copy(),
        )
        return np.column_stack((taps.output_l, taps.output_r)), taps
