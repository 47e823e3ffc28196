/** Entry point: wire the surface to the service and keep them in step. */

import { Wire } from "./net.js";
import { NOTE_HZ, type NoteName } from "./notes.js";
import type { TriggerPhase } from "./protocol.js";
import {
  applyConnection,
  applyFrame,
  initialState,
  selectNote,
  setGate,
  setLoudness,
  type UiState,
} from "./state.js";
import { buildSurface } from "./ui.js";

function serviceUrl(): string {
  const param = new URLSearchParams(window.location.search).get("ws");
  if (param !== null) return param;
  const host = window.location.hostname || "127.0.0.1";
  return `ws://${host}:8765/ws`;
}

function boot() {
  const root = document.getElementById("app");
  if (root === null) throw new Error("missing #app element");

  let state: UiState = initialState();

  const surface = buildSurface(root, {
    onNote(note: NoteName) {
      state = selectNote(state, note);
      wire.send({ type: "set", param: "pitch_hz", value: NOTE_HZ[note] });
      surface.render(state);
    },
    onTrigger(phase: TriggerPhase) {
      wire.send({ type: "trigger", phase });
    },
    onGate(on: boolean) {
      state = setGate(state, on);
      wire.send({ type: "gate", on });
      surface.render(state);
    },
    onLoudness(value: number) {
      state = setLoudness(state, value);
      wire.send({ type: "set", param: "loudness", value: state.loudness });
      surface.render(state);
    },
  });

  const wire = new Wire(serviceUrl(), {
    factory: (url) => new WebSocket(url) as unknown as import("./net.js").SocketLike,
    onFrame(frame) {
      state = applyFrame(state, frame);
      surface.render(state);
    },
    onStatus(status) {
      state = applyConnection(state, status);
      surface.render(state);
    },
    snapshot: () => ({
      pitchHz: state.pitchHz,
      loudness: state.loudness,
      gate: state.gate,
    }),
  });

  surface.render(state);
  wire.connect();
}

boot();
