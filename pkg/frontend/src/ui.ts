/** DOM layer: builds the surface once, then repaints from UiState.
 *
 * Canvas painting runs on requestAnimationFrame and reads whatever frame
 * is current at that moment, so telemetry arriving faster than the
 * display refresh is dropped, never queued.
 */

import { isBlackKey, KEY_TO_NOTE, NOTE_NAMES, type NoteName } from "./notes.js";
import type { TriggerPhase } from "./protocol.js";
import type { UiState } from "./state.js";

export interface UiCallbacks {
  onNote: (note: NoteName) => void;
  onTrigger: (phase: TriggerPhase) => void;
  onGate: (on: boolean) => void;
  onLoudness: (value: number) => void;
}

interface TriggerButton {
  phase: TriggerPhase;
  el: HTMLButtonElement;
  /** state-frame phase this button lights up for */
  lit: string;
}

export interface Surface {
  render(state: UiState): void;
  /** For tests: translate one keydown into a note, or null. */
  noteForKey(key: string): NoteName | null;
}

const TRIGGER_LABELS: Array<[TriggerPhase, string, string]> = [
  ["mae", "mae", "initial"],
  ["mae_re", "mae (re)", "middle"],
  ["mi", "mi", "final"],
];

export function buildSurface(root: HTMLElement, cb: UiCallbacks): Surface {
  root.innerHTML = "";

  const banner = el("div", "banner");
  const keys = el("div", "keys");
  const controls = el("div", "controls");
  const meterCanvas = document.createElement("canvas");
  meterCanvas.className = "meter";
  meterCanvas.width = 360;
  meterCanvas.height = 48;
  const spectrumCanvas = document.createElement("canvas");
  spectrumCanvas.className = "spectrum";
  spectrumCanvas.width = 360;
  spectrumCanvas.height = 140;
  const errorLine = el("div", "error-line");

  const keyButtons = new Map<NoteName, HTMLButtonElement>();
  for (const name of NOTE_NAMES) {
    const b = document.createElement("button");
    b.textContent = name;
    b.className = isBlackKey(name) ? "key black" : "key white";
    b.addEventListener("click", () => cb.onNote(name));
    keyButtons.set(name, b);
    keys.appendChild(b);
  }

  const triggers: TriggerButton[] = TRIGGER_LABELS.map(([phase, label, lit]) => {
    const b = document.createElement("button");
    b.textContent = label;
    b.className = "trigger";
    b.addEventListener("click", () => cb.onTrigger(phase));
    controls.appendChild(b);
    return { phase, el: b, lit };
  });

  const gateButton = document.createElement("button");
  gateButton.className = "gate";
  controls.appendChild(gateButton);

  const slider = document.createElement("input");
  slider.type = "range";
  slider.min = "0";
  slider.max = "1";
  slider.step = "0.01";
  slider.className = "loudness";
  slider.addEventListener("input", () => cb.onLoudness(Number(slider.value)));
  controls.appendChild(slider);

  root.append(banner, keys, controls, meterCanvas, spectrumCanvas, errorLine);

  window.addEventListener("keydown", (ev) => {
    if (ev.repeat) return;
    const note = KEY_TO_NOTE[ev.key.toLowerCase()];
    if (note !== undefined) cb.onNote(note);
  });

  let current: UiState | null = null;
  let paintedMeter: UiState["meter"] = null;
  let paintedSpectrum: UiState["spectrum"] = null;

  function paint() {
    const s = current;
    if (s !== null) {
      if (s.meter !== paintedMeter) {
        paintedMeter = s.meter;
        drawMeter(meterCanvas, s.meter?.rms_db ?? -100, s.meter?.peak_db ?? -100);
      }
      if (s.spectrum !== paintedSpectrum) {
        paintedSpectrum = s.spectrum;
        drawSpectrum(spectrumCanvas, s.spectrum?.bins ?? []);
      }
    }
    requestAnimationFrame(paint);
  }
  requestAnimationFrame(paint);

  return {
    render(state: UiState) {
      current = state;
      const offline = state.connection !== "open";

      banner.textContent =
        state.connection === "open"
          ? `connected, phase: ${state.phase}`
          : state.connection === "connecting"
            ? "connecting..."
            : "disconnected, retrying...";
      banner.classList.toggle("offline", offline);

      for (const [name, b] of keyButtons) {
        b.disabled = offline;
        b.classList.toggle("active", name === state.note);
      }
      for (const t of triggers) {
        t.el.disabled = offline;
        t.el.classList.toggle("active", state.phase === t.lit);
      }

      gateButton.disabled = offline;
      gateButton.textContent = state.gate ? "gate on" : "gate off";
      // reassigned per render so the handler always toggles the shown value
      gateButton.onclick = () => cb.onGate(!state.gate);

      if (document.activeElement !== slider) {
        slider.value = String(state.loudness);
      }
      errorLine.textContent = state.lastError ?? "";
    },
    noteForKey(key: string): NoteName | null {
      return KEY_TO_NOTE[key.toLowerCase()] ?? null;
    },
  };
}

function el(tag: string, className: string): HTMLDivElement {
  const e = document.createElement(tag) as HTMLDivElement;
  e.className = className;
  return e;
}

function drawMeter(canvas: HTMLCanvasElement, rmsDb: number, peakDb: number) {
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  const w = canvas.width;
  const h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#1b1f24";
  ctx.fillRect(0, 0, w, h);
  // -60 dB floor keeps silence visible as an empty bar, not a sliver
  const frac = (db: number) => Math.min(1, Math.max(0, (db + 60) / 60));
  ctx.fillStyle = "#3fa34d";
  ctx.fillRect(0, 4, w * frac(rmsDb), h / 2 - 6);
  ctx.fillStyle = "#d08a2b";
  ctx.fillRect(0, h / 2 + 2, w * frac(peakDb), h / 2 - 6);
}

function drawSpectrum(canvas: HTMLCanvasElement, bins: number[]) {
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  const w = canvas.width;
  const h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#1b1f24";
  ctx.fillRect(0, 0, w, h);
  if (bins.length === 0) return;
  const bw = w / bins.length;
  ctx.fillStyle = "#4d8dd0";
  bins.forEach((db, i) => {
    const frac = Math.min(1, Math.max(0, (db + 90) / 90));
    ctx.fillRect(i * bw + 1, h * (1 - frac), bw - 2, h * frac);
  });
}
