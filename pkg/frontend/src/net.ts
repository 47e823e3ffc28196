/** WebSocket wrapper with the two rules the surface lives by:
 * nothing is ever sent while disconnected, and a (re)connect re-sends
 * pitch, loudness, and gate so the engine ends up where the UI shows.
 */

import {
  encodeMessage,
  parseServerFrame,
  type ControlMessage,
  type ServerFrame,
} from "./protocol.js";
import type { ConnectionStatus } from "./state.js";

/** The slice of WebSocket both the browser and the `ws` package provide. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ResyncSnapshot {
  pitchHz: number;
  loudness: number;
  gate: boolean;
}

export interface WireOptions {
  factory: SocketFactory;
  onFrame: (frame: ServerFrame) => void;
  onStatus: (status: ConnectionStatus) => void;
  /** Called on every open to resynchronize the engine. */
  snapshot: () => ResyncSnapshot;
  reconnectDelayMs?: number;
}

export class Wire {
  readonly url: string;
  /** Messages dropped because the socket was not open. */
  dropped = 0;

  private opts: WireOptions;
  private socket: SocketLike | null = null;
  private openSocket: SocketLike | null = null;
  private stopped = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(url: string, opts: WireOptions) {
    this.url = url;
    this.opts = opts;
  }

  get isOpen(): boolean {
    return this.openSocket !== null;
  }

  connect(): void {
    this.stopped = false;
    if (this.socket !== null) return;
    this.opts.onStatus("connecting");
    let sock: SocketLike;
    try {
      sock = this.opts.factory(this.url);
    } catch {
      this.scheduleReconnect();
      return;
    }
    this.socket = sock;
    sock.onopen = () => {
      if (this.socket !== sock) return; // superseded
      this.openSocket = sock;
      this.opts.onStatus("open");
      this.resync();
    };
    sock.onmessage = (ev) => {
      if (typeof ev.data !== "string") return;
      const frame = parseServerFrame(ev.data);
      if (frame !== null) this.opts.onFrame(frame);
    };
    sock.onerror = () => {
      // onclose follows; nothing to do here
    };
    sock.onclose = () => {
      if (this.socket !== sock) return;
      this.socket = null;
      this.openSocket = null;
      this.opts.onStatus("closed");
      this.scheduleReconnect();
    };
  }

  /** Send one message; false means it was dropped because we are offline. */
  send(msg: ControlMessage): boolean {
    if (this.openSocket === null) {
      this.dropped += 1;
      return false;
    }
    this.openSocket.send(encodeMessage(msg));
    return true;
  }

  /** Close and stay closed; no reconnect until connect() is called again. */
  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    const sock = this.socket;
    this.socket = null;
    this.openSocket = null;
    if (sock !== null) {
      sock.onclose = null;
      sock.close();
      this.opts.onStatus("closed");
    }
  }

  private resync(): void {
    const snap = this.opts.snapshot();
    this.send({ type: "set", param: "pitch_hz", value: snap.pitchHz });
    this.send({ type: "set", param: "loudness", value: snap.loudness });
    this.send({ type: "gate", on: snap.gate });
  }

  private scheduleReconnect(): void {
    if (this.stopped || this.timer !== null) return;
    const delay = this.opts.reconnectDelayMs ?? 1000;
    this.timer = setTimeout(() => {
      this.timer = null;
      if (!this.stopped) this.connect();
    }, delay);
  }
}
