"""Live control endpoint: WebSocket messages in, audio blocks out.

Three contexts cooperate:

  render    owns the voices; drains control mailboxes at block boundaries
  network   validates client JSON and feeds the mailboxes
  telemetry reads a monitor ring and broadcasts meter/spectrum/state frames

The mailboxes are single-producer single-consumer deques; CPython's deque
append/popleft are atomic, so the render side never takes a lock and never
waits. Everything the render thread touches per block is preallocated by
the voice; frames the telemetry thread builds are allocated off the render
path, as required.
"""

from __future__ import annotations

import asyncio
import collections
import dataclasses
import json
import logging
import math
import threading
import time
from contextlib import asynccontextmanager

import numpy as np
from fastapi import FastAPI, WebSocket
from starlette.websockets import WebSocketDisconnect

from .abdomen import PitchMode
from .control import PITCH_MAX_HZ, ControlIngestor
from .errors import ConfigError
from .voice import Voice, VoiceConfig

log = logging.getLogger(__name__)

# past this the two-block worst case breaches ~10.7 ms at 48 kHz
MAX_LIVE_BLOCK = 256
TELEMETRY_HZ = 15.0
SPECTRUM_BINS = 48
_TRIGGER_NAMES = ("mae", "mae_re", "mi")
_MODES = {"fixed": PitchMode.FIXED_E5, "following": PitchMode.FOLLOWING}


class VoiceHost:
    """One voice plus its control mailbox and last-known control values."""

    def __init__(self, config: VoiceConfig, index: int = 0):
        self.index = index
        self.config = config
        self.voice = Voice(config)
        self.ingestor = ControlIngestor()
        self.mailbox: collections.deque = collections.deque()
        self.gate = False
        self.loudness = 0.8
        self.pitch_hz = PITCH_MAX_HZ
        self._raw_trig = dict.fromkeys(_TRIGGER_NAMES, 0.0)

    def render_block(self) -> np.ndarray:
        while True:
            try:
                kind, payload = self.mailbox.popleft()
            except IndexError:
                break
            if kind == "gate":
                self.gate = payload
            elif kind == "pitch_hz":
                self.pitch_hz = payload
            elif kind == "loudness":
                self.loudness = payload
            elif kind == "trigger":
                self._raw_trig[payload] = 1.0
            elif kind == "swap":
                # replacement voice was built on the network side
                self.voice = payload
        frame = self.ingestor.ingest(
            gate=self.gate,
            loudness_nrm=self.loudness,
            pitch_hz=self.pitch_hz,
            raw_mae=self._raw_trig["mae"],
            raw_mae_re=self._raw_trig["mae_re"],
            raw_mi=self._raw_trig["mi"],
        )
        for name in _TRIGGER_NAMES:
            self._raw_trig[name] = 0.0
        stereo, _ = self.voice.process_block(frame)
        return stereo

    def state_frame(self) -> dict:
        return {
            "type": "state",
            "voice": self.index,
            "phase": self.voice.phase.value,
            "gate": self.gate,
            "pitch_hz": self.pitch_hz,
            "loudness": self.loudness,
        }


class AudioRing:
    """Drainable FIFO of rendered blocks, bounded by dropping the oldest."""

    def __init__(self, sample_rate_hz: int, block_frames: int, seconds: float = 8.0):
        cap = max(1, int(seconds * sample_rate_hz / block_frames))
        self._blocks: collections.deque = collections.deque(maxlen=cap)

    def push(self, block: np.ndarray):
        self._blocks.append(block)

    def drain(self) -> np.ndarray:
        out = []
        while True:
            try:
                out.append(self._blocks.popleft())
            except IndexError:
                break
        if not out:
            return np.zeros((0, 2))
        return np.concatenate(out, axis=0)


class NullAudioSink(threading.Thread):
    """Renders at wall-clock pace into a drainable ring; stands in for a
    device so the whole protocol is testable headless."""

    daemon = True

    def __init__(self, hosts, block_frames: int, sample_rate_hz: int,
                 ring_seconds: float = 8.0):
        super().__init__(name="maemi-null-audio")
        self.hosts = hosts
        self.block_frames = block_frames
        self.sample_rate_hz = sample_rate_hz
        self.ring = AudioRing(sample_rate_hz, block_frames, ring_seconds)
        self.monitor: collections.deque = collections.deque(maxlen=16)
        self._halt = threading.Event()

    def run(self):
        period = self.block_frames / self.sample_rate_hz
        next_t = time.monotonic()
        while not self._halt.is_set():
            mix = self.hosts[0].render_block()
            if len(self.hosts) > 1:
                mix = mix.copy()
                for host in self.hosts[1:]:
                    mix += host.render_block()
                np.clip(mix, -1.0, 1.0, out=mix)
            self.ring.push(mix)
            self.monitor.append(mix)
            next_t += period
            delay = next_t - time.monotonic()
            if delay > 0.0:
                time.sleep(delay)
            elif delay < -1.0:
                next_t = time.monotonic()  # fell badly behind; resync

    def stop(self):
        self._halt.set()


class DeviceAudioSink:
    """Thin wrapper over a PortAudio output stream."""

    def __init__(self, hosts, block_frames: int, sample_rate_hz: int):
        try:
            import sounddevice
        except ImportError as exc:
            raise RuntimeError(
                "no audio backend available; install 'sounddevice' or run "
                "with --null-audio"
            ) from exc
        self.hosts = hosts
        self.monitor: collections.deque = collections.deque(maxlen=16)
        self.ring = None

        def callback(outdata, frames, time_info, status):
            mix = hosts[0].render_block()
            for host in hosts[1:]:
                mix = mix + host.render_block()
            outdata[:] = np.clip(mix, -1.0, 1.0)
            self.monitor.append(mix)

        self._stream = sounddevice.OutputStream(
            samplerate=sample_rate_hz,
            blocksize=block_frames,
            channels=2,
            dtype="float32",
            callback=callback,
        )

    def start(self):
        self._stream.start()

    def stop(self):
        self._stream.stop()
        self._stream.close()

    def join(self, timeout=None):
        pass


class Telemetry(threading.Thread):
    """Broadcasts state/meter/spectrum frames at a fixed low rate."""

    daemon = True

    def __init__(self, app: FastAPI, hosts, monitor, sample_rate_hz: int):
        super().__init__(name="maemi-telemetry")
        self.app = app
        self.hosts = hosts
        self.monitor = monitor
        self.sample_rate_hz = sample_rate_hz
        self._halt = threading.Event()
        lo, hi = 60.0, min(12000.0, 0.45 * sample_rate_hz)
        self._edges = np.geomspace(lo, hi, SPECTRUM_BINS + 1)

    def run(self):
        period = 1.0 / TELEMETRY_HZ
        while not self._halt.is_set():
            frames = [host.state_frame() for host in self.hosts]
            frames.extend(self._audio_frames())
            _broadcast(self.app, frames)
            time.sleep(period)

    def stop(self):
        self._halt.set()

    def _audio_frames(self):
        blocks = list(self.monitor)
        if not blocks:
            return []
        mono = np.concatenate(blocks, axis=0)[:, 0]
        recent = mono[-2048:]
        rms = float(np.sqrt(np.mean(recent**2)))
        peak = float(np.max(np.abs(recent)))
        meter = {
            "type": "meter",
            "rms_db": round(20.0 * math.log10(max(rms, 1e-10)), 2),
            "peak_db": round(20.0 * math.log10(max(peak, 1e-10)), 2),
        }
        win = np.hanning(len(recent))
        power = np.abs(np.fft.rfft(recent * win, 2048)) ** 2
        freqs = np.fft.rfftfreq(2048, 1.0 / self.sample_rate_hz)
        bins = []
        for i in range(SPECTRUM_BINS):
            sel = (freqs >= self._edges[i]) & (freqs < self._edges[i + 1])
            p = float(np.mean(power[sel])) if np.any(sel) else 0.0
            bins.append(round(10.0 * math.log10(max(p, 1e-12)), 1))
        spectrum = {
            "type": "spectrum",
            "bins": bins,
            "lo_hz": round(float(self._edges[0]), 1),
            "hi_hz": round(float(self._edges[-1]), 1),
        }
        return [meter, spectrum]


def _broadcast(app: FastAPI, frames):
    loop = getattr(app.state, "loop", None)
    if loop is None or loop.is_closed():
        return
    with app.state.clients_lock:
        queues = list(app.state.clients.values())
    for q in queues:
        for frame in frames:
            try:
                loop.call_soon_threadsafe(q.put_nowait, frame)
            except RuntimeError:
                return  # loop shut down mid-broadcast


def _error(message: str) -> dict:
    return {"type": "error", "message": message}


def handle_message(hosts, text: str):
    """Validate one client frame; returns a direct reply or None.

    Malformed input earns an error frame, never a disconnect. Unknown
    fields are ignored.
    """
    try:
        msg = json.loads(text)
    except json.JSONDecodeError:
        return _error("frame is not valid JSON")
    if not isinstance(msg, dict):
        return _error("frame must be a JSON object")
    v = msg.get("voice", 0)
    if isinstance(v, bool) or not isinstance(v, int):
        return _error("voice must be an integer")
    if not 0 <= v < len(hosts):
        return _error(f"no voice {v}")
    host = hosts[v]

    mtype = msg.get("type")
    if mtype == "hello":
        return host.state_frame()
    if mtype == "trigger":
        phase = msg.get("phase")
        if phase not in _TRIGGER_NAMES:
            return _error("trigger phase must be one of mae, mae_re, mi")
        host.mailbox.append(("trigger", phase))
        return None
    if mtype == "gate":
        on = msg.get("on")
        if not isinstance(on, bool):
            return _error("gate needs a boolean 'on'")
        host.mailbox.append(("gate", on))
        return None
    if mtype == "set":
        param = msg.get("param")
        if param in ("pitch_hz", "loudness"):
            try:
                value = float(msg.get("value"))
            except (TypeError, ValueError):
                return _error(f"{param} needs a number")
            if not math.isfinite(value):
                return _error(f"{param} must be finite")
            host.mailbox.append((param, value))
            return None
        if param == "mode":
            mode = _MODES.get(msg.get("value"))
            if mode is None:
                return _error("mode must be 'fixed' or 'following'")
            if mode is not host.config.mode:
                host.config = dataclasses.replace(host.config, mode=mode)
                # build the replacement off the render thread; the swap
                # itself is a reference assignment at a block boundary
                host.mailbox.append(("swap", Voice(host.config)))
            return None
        return _error("param must be pitch_hz, loudness, or mode")
    return _error(f"unknown message type {mtype!r}")


def create_app(
    config: VoiceConfig,
    *,
    block_frames: int = 256,
    voices: int = 1,
    null_audio: bool = True,
    ring_seconds: float = 8.0,
) -> FastAPI:
    if block_frames > MAX_LIVE_BLOCK:
        raise ConfigError(
            f"block_frames {block_frames} rejected for live mode "
            f"(max {MAX_LIVE_BLOCK}: keeps two-block latency near 10 ms)"
        )
    if voices < 1:
        raise ConfigError("need at least one voice")
    live_config = dataclasses.replace(config, block_frames=block_frames)
    hosts = [
        VoiceHost(dataclasses.replace(live_config, seed=live_config.seed + i), i)
        for i in range(voices)
    ]
    if null_audio:
        sink = NullAudioSink(hosts, block_frames, live_config.sample_rate_hz,
                             ring_seconds)
    else:
        sink = DeviceAudioSink(hosts, block_frames, live_config.sample_rate_hz)
    telemetry = None

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        nonlocal telemetry
        app.state.loop = asyncio.get_running_loop()
        telemetry = Telemetry(app, hosts, sink.monitor, live_config.sample_rate_hz)
        sink.start()
        telemetry.start()
        try:
            yield
        finally:
            telemetry.stop()
            sink.stop()
            sink.join(timeout=2.0)
            telemetry.join(timeout=2.0)

    app = FastAPI(lifespan=lifespan)
    app.state.hosts = hosts
    app.state.sink = sink
    app.state.clients = {}
    app.state.clients_lock = threading.Lock()

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        outbound: asyncio.Queue = asyncio.Queue(maxsize=256)
        with app.state.clients_lock:
            app.state.clients[ws] = outbound

        async def pump():
            while True:
                frame = await outbound.get()
                await ws.send_text(json.dumps(frame))

        sender = asyncio.ensure_future(pump())
        try:
            while True:
                text = await ws.receive_text()
                reply = handle_message(hosts, text)
                if reply is not None:
                    await ws.send_text(json.dumps(reply))
        except WebSocketDisconnect:
            pass
        finally:
            with app.state.clients_lock:
                app.state.clients.pop(ws, None)
            sender.cancel()

    return app


def run_serve(args) -> int:
    import uvicorn

    from .cli import _config_from

    host_str, _, port_str = args.bind.partition(":")
    try:
        port = int(port_str) if port_str else 8765
    except ValueError:
        print(f"error: bad port in {args.bind!r}")
        return 2
    try:
        app = create_app(
            _config_from(args),
            block_frames=args.block,
            voices=args.voices,
            null_audio=args.null_audio,
        )
    except (ConfigError, RuntimeError) as exc:
        print(f"error: {exc}")
        return 2
    uvicorn.run(app, host=host_str or "127.0.0.1", port=port, log_level="warning")
    return 0
