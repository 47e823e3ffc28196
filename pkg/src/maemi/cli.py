"""Command-line surface: render scores, run the demo, analyze, serve.

`maemi render score.txt --out call.wav`
`maemi demo E5`
`maemi analyze call.wav > report.tsv`
`maemi serve --bind 127.0.0.1:8765 --null-audio`

Analysis reports go to standard output as tab-separated key/value lines;
figures land next to the input file (see --figures).
"""

from __future__ import annotations

import argparse
import pathlib
import sys

import numpy as np

from . import analysis
from .abdomen import Bandpass6, PitchMode
from .constants import Constants
from .errors import ConfigError, ScoreError
from .render import read_wav, render_score, write_wav
from .score import DEMO_PHASE_WINDOWS, demo_score, format_score, parse_score
from .voice import DEFAULT_SEED, VoiceConfig

_MODES = {"fixed": PitchMode.FIXED_E5, "following": PitchMode.FOLLOWING}


def _add_voice_flags(p: argparse.ArgumentParser):
    p.add_argument("--sr", type=int, default=48000, help="sample rate in Hz")
    p.add_argument(
        "--seed",
        type=lambda s: int(s, 0),
        default=DEFAULT_SEED,
        help="random seed (accepts hex)",
    )
    p.add_argument("--mode", choices=sorted(_MODES), default="fixed",
                   help="abdominal resonance tracking mode")
    p.add_argument("--constants", type=pathlib.Path, default=None,
                   help="constants file overriding the embedded defaults")


def _config_from(args) -> VoiceConfig:
    constants = Constants()
    if args.constants is not None:
        constants = Constants.loads(args.constants.read_text())
    return VoiceConfig(
        sample_rate_hz=args.sr,
        seed=args.seed,
        mode=_MODES[args.mode],
        constants=constants,
    )


def cmd_render(args) -> int:
    try:
        text = args.score.read_text()
    except OSError as exc:
        print(f"error: cannot read score: {exc}", file=sys.stderr)
        return 2
    events = parse_score(text)
    result = render_score(events, _config_from(args), duration_s=args.duration)
    write_wav(args.out, result.audio, result.sample_rate_hz, float32=args.float)
    print(f"wrote {args.out} ({result.audio.shape[0] / result.sample_rate_hz:.2f} s)")
    return 0


def cmd_demo(args) -> int:
    events = demo_score(args.pitch)
    out = args.out or pathlib.Path(f"demo_{args.pitch.replace('#', 's').lower()}.wav")
    result = render_score(events, _config_from(args))
    write_wav(out, result.audio, result.sample_rate_hz, float32=args.float)
    print(f"wrote {out} ({result.audio.shape[0] / result.sample_rate_hz:.2f} s)")
    if args.print_score:
        print(format_score(events), end="")
    return 0


def _slice(sig: np.ndarray, sr: int, window) -> np.ndarray:
    a, b = window
    return sig[int(a * sr) : int(b * sr)]


def cmd_analyze(args) -> int:
    try:
        sr, audio = read_wav(args.wav)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read {args.wav}: {exc}", file=sys.stderr)
        return 2
    mono = audio.mean(axis=1)
    report: dict = {"file": str(args.wav), "sample_rate_hz": sr,
                    "duration_s": len(mono) / sr}

    demo_length = len(mono) / sr >= DEMO_PHASE_WINDOWS["final"][1]
    if demo_length:
        mid = _slice(mono, sr, DEMO_PHASE_WINDOWS["middle"])
        fin = _slice(mono, sr, DEMO_PHASE_WINDOWS["final"])
    else:
        mid = mono
        fin = None

    pitch = analysis.estimate_pitch(mid, sr)
    report["pitch_hz"] = "undefined" if pitch is None else pitch
    if pitch is not None:
        base = pitch / 4.0
        hp = analysis.harmonic_peaks(mid, sr, base, 6, 17)
        report["harmonic_base_hz"] = base
        report["harmonic_peaks_db"] = hp.peak_db
        report["harmonic_floor_db"] = hp.floor_db
        report["hnr_db"] = hp.hnr_db
        if demo_length:
            for name, window in DEMO_PHASE_WINDOWS.items():
                seg = _slice(mono, sr, window)
                # the final phase halves the contraction rate, so its comb
                # is twice as dense as the song body's
                seg_base = base / 2.0 if name == "final" else base
                k_lo = max(1, int(np.ceil(1500.0 / seg_base)))
                k_hi = int(np.floor(3000.0 / seg_base))
                seg_hp = analysis.harmonic_peaks(seg, sr, seg_base, k_lo, k_hi)
                report[f"hnr_{name}_db"] = seg_hp.hnr_db
        if fin is not None:
            report["comb_spacing_final_hz"] = analysis.comb_spacing(fin, sr)
        report["rolloff_db_per_oct"] = _probe_rolloff(3.0 * pitch)

    print(analysis.format_report(report), end="")

    fig_dir = args.figures or args.wav.parent
    fig_dir.mkdir(parents=True, exist_ok=True)
    stem = args.wav.stem
    from . import plots  # deferred: pulls in matplotlib

    plots.save_spectrogram(mono, sr, fig_dir / f"{stem}_spectrogram.png", title=stem)
    if pitch is not None:
        plots.save_harmonics(mid, sr, pitch / 4.0, 6, 17,
                             fig_dir / f"{stem}_harmonics.png", title=stem)
    return 0


def _probe_rolloff(f0_hz: float, probe_sr: int = 96000) -> float:
    """Measured cascade rolloff; probed at 96 kHz so the upper octaves of
    the fit stay well below Nyquist."""

    def probe(freq_hz: float) -> float:
        filt = Bandpass6(probe_sr)
        filt.set_response(f0_hz, f0_hz * 0.15)
        t = np.arange(int(0.25 * probe_sr)) / probe_sr
        y = filt.process(np.sin(2 * np.pi * freq_hz * t))
        tail = y[len(y) // 2 :]
        return 20.0 * np.log10(max(float(np.sqrt(np.mean(tail**2))), 1e-300))

    return analysis.rolloff_slope(probe, f0_hz)


def cmd_selftest(args) -> int:
    from .plate import verify_25pct
    from .abdomen import helmholtz_f0
    from .score import NOTE_HZ

    config = _config_from(args)
    failures = []

    for name, hz in NOTE_HZ.items():
        ok = verify_25pct(hz, config.sample_rate_hz, config.constants)
        print(f"plate ring-through at {name:>3} ({hz:7.2f} Hz): {'ok' if ok else 'FAIL'}")
        if not ok:
            failures.append(f"plate {name}")

    f0 = helmholtz_f0(1e-4, 1e-6)
    ok = abs(f0 - 7888.9) < 1.0
    print(f"resonator geometry check: {f0:.1f} Hz {'ok' if ok else 'FAIL'}")
    if not ok:
        failures.append("helmholtz")

    result = render_score(demo_score("E5"), config, duration_s=1.0)
    peak = float(np.max(np.abs(result.audio)))
    ok = 0.01 < peak <= 1.0
    print(f"demo render peak {peak:.3f}: {'ok' if ok else 'FAIL'}")
    if not ok:
        failures.append("render")

    if failures:
        print(f"selftest FAILED: {', '.join(failures)}", file=sys.stderr)
        return 1
    print("selftest passed")
    return 0


def cmd_serve(args) -> int:
    from . import service

    return service.run_serve(args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maemi", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render a score file to WAV")
    p.add_argument("score", type=pathlib.Path)
    p.add_argument("--out", type=pathlib.Path, default=pathlib.Path("out.wav"))
    p.add_argument("--float", action="store_true", help="write 32-bit float samples")
    p.add_argument("--duration", type=float, default=None,
                   help="override render length in seconds")
    _add_voice_flags(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("demo", help="render the built-in demo call")
    p.add_argument("pitch", nargs="?", default="E5", help="note name E4..E5")
    p.add_argument("--out", type=pathlib.Path, default=None)
    p.add_argument("--float", action="store_true")
    p.add_argument("--print-score", action="store_true",
                   help="echo the demo score after rendering")
    _add_voice_flags(p)
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("analyze", help="report spectral measurements of a WAV")
    p.add_argument("wav", type=pathlib.Path)
    p.add_argument("--figures", type=pathlib.Path, default=None,
                   help="directory for rendered figures (default: beside the WAV)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="live WebSocket control service")
    p.add_argument("--bind", default="127.0.0.1:8765")
    p.add_argument("--block", type=int, default=256)
    p.add_argument("--null-audio", action="store_true",
                   help="render into a drainable ring instead of a device")
    p.add_argument("--voices", type=int, default=1)
    _add_voice_flags(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("selftest", help="quick built-in verification")
    _add_voice_flags(p)
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ScoreError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
