"""Physically modeled cicada call: voice, offline renderer, verification.

The public surface is small on purpose. Build a `VoiceConfig`, feed a
`Voice` control frames block by block, or hand a score to `render_score`
and write the result with `write_wav`. Everything under `analysis` is
offline measurement over plain arrays.
"""

from .abdomen import PitchMode, abdominal_bandwidth, abdominal_f0, helmholtz_f0
from .constants import Constants
from .control import PITCH_MAX_HZ, PITCH_MIN_HZ, CallPhase, ControlFrame, ControlIngestor
from .errors import ConfigError, ScoreError
from .render import RenderResult, read_wav, render_score, write_wav
from .score import DEMO_PHASE_WINDOWS, NOTE_HZ, ScoreEvent, demo_score, note_to_hz, parse_score
from .voice import DEFAULT_SEED, Voice, VoiceConfig, VoiceTaps

__version__ = "0.1.0"

__all__ = [
    "CallPhase",
    "ConfigError",
    "Constants",
    "ControlFrame",
    "ControlIngestor",
    "DEFAULT_SEED",
    "DEMO_PHASE_WINDOWS",
    "NOTE_HZ",
    "PITCH_MAX_HZ",
    "PITCH_MIN_HZ",
    "PitchMode",
    "RenderResult",
    "ScoreError",
    "ScoreEvent",
    "Voice",
    "VoiceConfig",
    "VoiceTaps",
    "abdominal_bandwidth",
    "abdominal_f0",
    "demo_score",
    "helmholtz_f0",
    "note_to_hz",
    "parse_score",
    "read_wav",
    "render_score",
    "write_wav",
]
