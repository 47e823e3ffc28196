"""Figure rendering for analysis reports. File output only, no GUI backend."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import analysis


def save_spectrogram(sig, sr: int, path, title: str = "", fmax_hz: float = 8000.0):
    spec = analysis.spectrogram(sig, sr)
    db = 20.0 * np.log10(np.maximum(spec.magnitudes.T, analysis.DB_TINY))
    db -= db.max()
    keep = spec.freqs_hz <= fmax_hz
    fig, ax = plt.subplots(figsize=(9, 4.5))
    im = ax.imshow(
        db[keep],
        origin="lower",
        aspect="auto",
        extent=(spec.times_s[0], spec.times_s[-1], 0.0, spec.freqs_hz[keep][-1]),
        vmin=-90.0,
        vmax=0.0,
        cmap="magma",
    )
    ax.set_xlabel("time [s]")
    ax.set_ylabel("frequency [Hz]")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, label="dB")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_harmonics(sig, sr: int, base_hz: float, k_lo: int, k_hi: int, path, title: str = ""):
    """Averaged spectrum with harmonic peak markers and the pooled floor."""
    spec = analysis.spectrogram(sig, sr)
    psd_db = 10.0 * np.log10(np.maximum(spec.power(), analysis.DB_TINY))
    report = analysis.harmonic_peaks(sig, sr, base_hz, k_lo, k_hi)
    fig, ax = plt.subplots(figsize=(9, 4.5))
    lo_hz = max(0.0, (k_lo - 2) * base_hz)
    hi_hz = (k_hi + 2) * base_hz
    keep = (spec.freqs_hz >= lo_hz) & (spec.freqs_hz <= hi_hz)
    ax.plot(spec.freqs_hz[keep], psd_db[keep], lw=0.7, color="#444")
    ks = np.arange(k_lo, k_hi + 1)
    ax.plot(ks * base_hz, report.peak_db, "o", ms=4, color="#c23", label="harmonic peaks")
    ax.axhline(report.floor_db, color="#27a", ls="--", lw=1.0, label="inter-harmonic floor")
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel("level [dB]")
    ax.legend(loc="upper right", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_taps(taps: dict, sr: int, path, title: str = ""):
    """Stacked traces of the per-sample diagnostic taps, decimated for speed."""
    names = [
        "muscle_freq_hz",
        "apodeme_speed_nrm",
        "ribs_buckling",
        "plate_clipping_resonation",
        "tympanal_area_m2",
        "abdominal_volume_m3",
        "opercular_attenuation",
        "abdominal_resonation",
    ]
    names = [n for n in names if n in taps]
    step = max(1, len(taps[names[0]]) // 200000)
    fig, axes = plt.subplots(len(names), 1, figsize=(9, 1.3 * len(names)), sharex=True)
    for ax, name in zip(np.atleast_1d(axes), names):
        y = np.asarray(taps[name])[::step]
        t = np.arange(len(y)) * step / sr
        ax.plot(t, y, lw=0.5)
        ax.set_ylabel(name, rotation=0, ha="right", fontsize=7)
        ax.tick_params(labelsize=7)
    np.atleast_1d(axes)[-1].set_xlabel("time [s]")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
