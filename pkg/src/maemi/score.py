"""Plain-text control scores.

One event per line: `<time_s> <kind> [value]`. Kinds are gate_on, gate_off,
mae, mae_re, mi (no value), pitch (Hz or a note name), loudness (0..1).
Blank lines and `#` comments are skipped. Event times must be
non-decreasing; an out-of-order line is a parse error, not a hint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import ScoreError

_SEMITONE_NAMES = (
    "E4", "F4", "F#4", "G4", "G#4", "A4", "A#4", "B4",
    "C5", "C#5", "D5", "D#5", "E5",
)

# equal temperament on A4 = 440, quoted to cents-robust 0.01 Hz
NOTE_HZ = {
    name: round(440.0 * 2.0 ** ((i - 5) / 12.0), 2)
    for i, name in enumerate(_SEMITONE_NAMES)
}

EVENT_KINDS = frozenset(
    {"gate_on", "gate_off", "mae", "mae_re", "mi", "pitch", "loudness"}
)
_VALUELESS = frozenset({"gate_on", "gate_off", "mae", "mae_re", "mi"})


@dataclass(frozen=True)
class ScoreEvent:
    t_s: float
    kind: str
    value: Optional[float] = None


def note_to_hz(name: str) -> float:
    try:
        return NOTE_HZ[name.strip().upper().replace("♯", "#")]
    except KeyError:
        raise ScoreError(
            f"unknown note {name!r}; playable range is E4..E5"
        ) from None


def parse_score(text: str) -> list:
    events = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ScoreError(f"line {lineno}: expected '<time_s> <kind> [value]'")
        try:
            t_s = float(parts[0])
        except ValueError:
            raise ScoreError(f"line {lineno}: bad time {parts[0]!r}") from None
        if t_s < 0.0:
            raise ScoreError(f"line {lineno}: negative time {t_s}")
        if events and t_s < events[-1].t_s:
            raise ScoreError(
                f"line {lineno}: time {t_s} earlier than previous event"
            )
        kind = parts[1]
        if kind not in EVENT_KINDS:
            raise ScoreError(f"line {lineno}: unknown event kind {kind!r}")
        if kind in _VALUELESS:
            if len(parts) > 2:
                raise ScoreError(f"line {lineno}: {kind} takes no value")
            events.append(ScoreEvent(t_s, kind))
            continue
        if len(parts) != 3:
            raise ScoreError(f"line {lineno}: {kind} needs a value")
        token = parts[2]
        if kind == "pitch":
            try:
                value = float(token)
            except ValueError:
                try:
                    value = note_to_hz(token)
                except ScoreError as exc:
                    raise ScoreError(f"line {lineno}: {exc}") from None
        else:
            try:
                value = float(token)
            except ValueError:
                raise ScoreError(
                    f"line {lineno}: bad value {token!r} for {kind}"
                ) from None
        events.append(ScoreEvent(t_s, kind, value))
    return events


def demo_score(pitch_name: str = "E5", loudness: float = 0.5) -> list:
    """The built-in full-call sequence: one call, two middle pushes.

    Timings: gate on at 0, initial at 0.1 s, middle at 2.2 s and 4.0 s,
    final at 5.2 s, gate off at 6.6 s. Loudness 0.5 keeps the plate clip
    out of the picture so the demo shows the resonant comb untouched.
    """
    pitch_hz = note_to_hz(pitch_name)
    return [
        ScoreEvent(0.0, "pitch", pitch_hz),
        ScoreEvent(0.0, "loudness", float(loudness)),
        ScoreEvent(0.0, "gate_on"),
        ScoreEvent(0.1, "mae"),
        ScoreEvent(2.2, "mae_re"),
        ScoreEvent(4.0, "mae_re"),
        ScoreEvent(5.2, "mi"),
        ScoreEvent(6.6, "gate_off"),
    ]


# settled stretches of the demo timeline, clear of trigger transients,
# for slicing demo renders into per-phase segments. The middle window sits
# between the two pushes: the re-trigger at 4.0 s drops the pulling speed
# and briefly decoheres the comb, which would contaminate any measurement
# that straddles it.
DEMO_PHASE_WINDOWS = {
    "initial": (0.3, 2.0),
    "middle": (2.8, 3.9),
    "final": (5.9, 6.5),
}


def format_score(events) -> str:
    lines = []
    for ev in events:
        if ev.value is None:
            lines.append(f"{ev.t_s:g} {ev.kind}")
        else:
            lines.append(f"{ev.t_s:g} {ev.kind} {ev.value:g}")
    return "\n".join(lines) + "\n"
