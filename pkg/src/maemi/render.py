"""Offline rendering: drive a Voice from a parsed score.

Score events are quantized to the block containing their sample time, so
an event acts at its block's first frame. Trigger events model a raw
control line that pulses high for one block; two same-kind triggers landing
in adjacent blocks therefore collapse into one edge, exactly as they would
on a sampled hardware gate input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.io import wavfile

from .control import PITCH_MAX_HZ, ControlIngestor
from .errors import ScoreError
from .voice import TAP_NAMES, Voice, VoiceConfig


@dataclass
class RenderResult:
    audio: np.ndarray  # shape (frames, 2), float64 in [-1, 1]
    sample_rate_hz: int
    taps: Optional[dict]
    voice: Voice


def render_score(
    events,
    config: VoiceConfig,
    duration_s: Optional[float] = None,
    collect_taps: bool = False,
) -> RenderResult:
    """Render a score; duration defaults to the last event's time."""
    if duration_s is None:
        if not events:
            raise ScoreError("empty score and no explicit duration")
        duration_s = max(ev.t_s for ev in events)
    if duration_s <= 0.0:
        raise ScoreError(f"render duration must be positive, got {duration_s}")

    sr = config.sample_rate_hz
    block = config.block_frames
    n_samples = int(round(duration_s * sr))
    n_blocks = max(1, math.ceil(n_samples / block))

    by_block: dict = {}
    for ev in events:
        idx = int(round(ev.t_s * sr)) // block
        by_block.setdefault(idx, []).append(ev)

    voice = Voice(config)
    ingestor = ControlIngestor()
    gate = False
    loudness = 0.0
    pitch = PITCH_MAX_HZ

    chunks = []
    tap_chunks = {name: [] for name in TAP_NAMES} if collect_taps else None

    for b in range(n_blocks):
        raw_mae = raw_mae_re = raw_mi = 0.0
        for ev in by_block.get(b, ()):
            if ev.kind == "gate_on":
                gate = True
            elif ev.kind == "gate_off":
                gate = False
            elif ev.kind == "pitch":
                pitch = ev.value
            elif ev.kind == "loudness":
                loudness = ev.value
            elif ev.kind == "mae":
                raw_mae = 1.0
            elif ev.kind == "mae_re":
                raw_mae_re = 1.0
            elif ev.kind == "mi":
                raw_mi = 1.0

        frame = ingestor.ingest(gate, loudness, pitch, raw_mae, raw_mae_re, raw_mi)
        stereo, taps = voice.process_block(frame)
        chunks.append(stereo)
        if collect_taps:
            for name in TAP_NAMES:
                tap_chunks[name].append(getattr(taps, name))

    audio = np.concatenate(chunks, axis=0)[:n_samples]
    full_taps = None
    if collect_taps:
        full_taps = {
            name: np.concatenate(parts)[:n_samples]
            for name, parts in tap_chunks.items()
        }
    return RenderResult(audio, sr, full_taps, voice)


def write_wav(path, audio: np.ndarray, sample_rate_hz: int, float32: bool = False):
    """RIFF/WAVE out; PCM16 by default, IEEE float via float32=True."""
    clipped = np.clip(audio, -1.0, 1.0)
    if float32:
        wavfile.write(path, sample_rate_hz, clipped.astype(np.float32))
    else:
        wavfile.write(
            path, sample_rate_hz, np.round(clipped * 32767.0).astype(np.int16)
        )


def read_wav(path):
    """Returns (sample_rate, float64 audio in [-1, 1], shape (frames, ch))."""
    sr, data = wavfile.read(path)
    if data.dtype == np.int16:
        audio = data.astype(np.float64) / 32767.0
    elif data.dtype == np.int32:
        audio = data.astype(np.float64) / 2147483647.0
    else:
        audio = data.astype(np.float64)
    if audio.ndim == 1:
        audio = audio[:, None]
    return sr, audio
