/** UI state and its two mutation paths.
 *
 * Controls are optimistic: the local value changes the moment the user
 * acts, then the next server `state` frame overwrites it. Meter and
 * spectrum keep only the latest frame; a stale frame is replaced, never
 * queued, which is what lets the canvas drop frames under load.
 */

import type { MeterFrame, ServerFrame, SpectrumFrame } from "./protocol.js";
import { NOTE_HZ, NOTE_NAMES, type NoteName } from "./notes.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface UiState {
  connection: ConnectionStatus;
  phase: string;
  note: NoteName;
  pitchHz: number;
  loudness: number;
  gate: boolean;
  meter: MeterFrame | null;
  spectrum: SpectrumFrame | null;
  lastError: string | null;
}

export function initialState(): UiState {
  return {
    connection: "closed",
    phase: "idle",
    note: "E5",
    pitchHz: NOTE_HZ["E5"],
    loudness: 0.8,
    gate: false,
    meter: null,
    spectrum: null,
    lastError: null,
  };
}

/** Clamp to [0,1] and snap to 0.01 steps; the slider never emits anything else. */
export function quantizeLoudness(x: number): number {
  if (Number.isNaN(x)) return 0;
  const clamped = Math.min(1, Math.max(0, x));
  return Math.round(clamped * 100) / 100;
}

export function noteForPitch(pitchHz: number): NoteName | null {
  for (const name of NOTE_NAMES) {
    if (Math.abs(NOTE_HZ[name] - pitchHz) < 0.005) return name;
  }
  return null;
}

export function applyConnection(s: UiState, c: ConnectionStatus): UiState {
  return { ...s, connection: c };
}

export function selectNote(s: UiState, note: NoteName): UiState {
  return { ...s, note, pitchHz: NOTE_HZ[note] };
}

export function setLoudness(s: UiState, value: number): UiState {
  return { ...s, loudness: quantizeLoudness(value) };
}

export function setGate(s: UiState, on: boolean): UiState {
  return { ...s, gate: on };
}

/** Reconcile with one server frame; unknown frames leave state untouched. */
export function applyFrame(s: UiState, frame: ServerFrame): UiState {
  switch (frame.type) {
    case "state": {
      const note = noteForPitch(frame.pitch_hz);
      return {
        ...s,
        phase: frame.phase,
        gate: frame.gate,
        pitchHz: frame.pitch_hz,
        loudness: frame.loudness,
        note: note ?? s.note,
      };
    }
    case "meter":
      return { ...s, meter: frame };
    case "spectrum":
      return { ...s, spectrum: frame };
    case "error":
      return { ...s, lastError: frame.message };
  }
}
