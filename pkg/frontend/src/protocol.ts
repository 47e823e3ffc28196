/** Wire schema for the control service: what we send, what comes back.
 *
 * This file is the only contract with the engine; nothing here imports
 * from outside the frontend.
 */

export type TriggerPhase = "mae" | "mae_re" | "mi";

export type ControlMessage =
  | { type: "hello"; voice?: number }
  | { type: "gate"; on: boolean; voice?: number }
  | { type: "trigger"; phase: TriggerPhase; voice?: number }
  | { type: "set"; param: "pitch_hz" | "loudness"; value: number; voice?: number }
  | { type: "set"; param: "mode"; value: "fixed" | "following"; voice?: number };

export interface StateFrame {
  type: "state";
  voice: number;
  phase: string;
  gate: boolean;
  pitch_hz: number;
  loudness: number;
}

export interface MeterFrame {
  type: "meter";
  rms_db: number;
  peak_db: number;
}

export interface SpectrumFrame {
  type: "spectrum";
  bins: number[];
  lo_hz: number;
  hi_hz: number;
}

export interface ErrorFrame {
  type: "error";
  message: string;
}

export type ServerFrame = StateFrame | MeterFrame | SpectrumFrame | ErrorFrame;

function isNum(x: unknown): x is number {
  return typeof x === "number" && Number.isFinite(x);
}

/** Parse one incoming text frame; null for anything malformed.
 *
 * A frame the UI cannot type must never reach the reducer, so every
 * field the display depends on is checked, not cast.
 */
export function parseServerFrame(text: string): ServerFrame | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const f = raw as Record<string, unknown>;
  switch (f["type"]) {
    case "state":
      if (
        isNum(f["voice"]) &&
        typeof f["phase"] === "string" &&
        typeof f["gate"] === "boolean" &&
        isNum(f["pitch_hz"]) &&
        isNum(f["loudness"])
      ) {
        return {
          type: "state",
          voice: f["voice"],
          phase: f["phase"],
          gate: f["gate"],
          pitch_hz: f["pitch_hz"],
          loudness: f["loudness"],
        };
      }
      return null;
    case "meter":
      if (isNum(f["rms_db"]) && isNum(f["peak_db"])) {
        return { type: "meter", rms_db: f["rms_db"], peak_db: f["peak_db"] };
      }
      return null;
    case "spectrum": {
      const bins = f["bins"];
      if (
        Array.isArray(bins) &&
        bins.length > 0 &&
        bins.every(isNum) &&
        isNum(f["lo_hz"]) &&
        isNum(f["hi_hz"]) &&
        f["lo_hz"] < f["hi_hz"]
      ) {
        return { type: "spectrum", bins, lo_hz: f["lo_hz"], hi_hz: f["hi_hz"] };
      }
      return null;
    }
    case "error":
      if (typeof f["message"] === "string") {
        return { type: "error", message: f["message"] };
      }
      return null;
    default:
      return null;
  }
}

export function encodeMessage(msg: ControlMessage): string {
  return JSON.stringify(msg);
}
