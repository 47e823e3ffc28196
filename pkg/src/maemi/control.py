"""Live control surface: clamping, trigger edge detection, call-phase state.

Six controls reach a voice: a gate, a loudness in [0, 1], a musical pitch
clamped to the E4..E5 octave, and three one-shot triggers that select the
call phase (mae = initial, mae_re = middle, mi = final). Triggers are
edge-detected once per block; timing inside a block collapses to the block
boundary.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

PITCH_MIN_HZ = 329.63
PITCH_MAX_HZ = 659.26

LOUDNESS_MIN = 0.0
LOUDNESS_MAX = 1.0


class CallPhase(enum.Enum):
    IDLE = "idle"
    INITIAL = "initial"
    MIDDLE = "middle"
    FINAL = "final"
    RELEASING = "releasing"


@dataclass(frozen=True)
class ControlFrame:
    """One block's worth of ingested control state.

    At most one trigger flag is set; simultaneous raw triggers resolve
    mi > mae_re > mae before the frame is built.
    """

    gate: bool = False
    loudness_nrm: float = 0.0
    pitch_hz: float = PITCH_MAX_HZ
    trig_mae: bool = False
    trig_mae_re: bool = False
    trig_mi: bool = False


def clamp_pitch(pitch_hz: float) -> float:
    return min(max(float(pitch_hz), PITCH_MIN_HZ), PITCH_MAX_HZ)


def clamp_loudness(loudness_nrm: float) -> float:
    return min(max(float(loudness_nrm), LOUDNESS_MIN), LOUDNESS_MAX)


class ControlIngestor:
    """Stateful raw-control reader: one ingest per block.

    Remembers the previous raw trigger levels so that only 0 -> positive
    transitions fire. Feeding the same raw values twice never fires twice.
    """

    def __init__(self):
        self._prev_mae = 0.0
        self._prev_mae_re = 0.0
        self._prev_mi = 0.0

    def ingest(
        self,
        gate: bool,
        loudness_nrm: float,
        pitch_hz: float,
        raw_mae: float = 0.0,
        raw_mae_re: float = 0.0,
        raw_mi: float = 0.0,
    ) -> ControlFrame:
        edge_mae = self._prev_mae <= 0.0 < raw_mae
        edge_mae_re = self._prev_mae_re <= 0.0 < raw_mae_re
        edge_mi = self._prev_mi <= 0.0 < raw_mi
        self._prev_mae = raw_mae
        self._prev_mae_re = raw_mae_re
        self._prev_mi = raw_mi

        # one trigger per frame, most final-ward wins
        if edge_mi:
            edge_mae_re = edge_mae = False
        elif edge_mae_re:
            edge_mae = False

        return ControlFrame(
            gate=bool(gate),
            loudness_nrm=clamp_loudness(loudness_nrm),
            pitch_hz=clamp_pitch(pitch_hz),
            trig_mae=edge_mae,
            trig_mae_re=edge_mae_re,
            trig_mi=edge_mi,
        )


def honored_trigger(frame: ControlFrame):
    """Phase requested by the frame's trigger, or None."""
    if frame.trig_mi:
        return CallPhase.FINAL
    if frame.trig_mae_re:
        return CallPhase.MIDDLE
    if frame.trig_mae:
        return CallPhase.INITIAL
    return None


def advance_phase(phase: CallPhase, frame: ControlFrame) -> CallPhase:
    """Pure transition function; same inputs always give the same phase.

    Gate-off sends any sounding phase to RELEASING; an idle voice has
    nothing to release and stays put. Triggers are honored from any phase
    except RELEASING, including re-entry into the current phase.
    """
    if not frame.gate:
        return CallPhase.IDLE if phase is CallPhase.IDLE else CallPhase.RELEASING
    if phase is CallPhase.RELEASING:
        return CallPhase.RELEASING
    target = honored_trigger(frame)
    return target if target is not None else phase
