"""Offline spectral verification: spectrograms, combs, pitch, slopes.

Everything here is a pure function over buffers. FFT sizes are always
powers of two. Levels are reported in dB relative to an arbitrary common
reference unless a function says otherwise; only differences matter to the
checks built on top.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import signal as sps
from scipy.ndimage import median_filter

DB_TINY = 1e-30


def _db(power) -> np.ndarray:
    return 10.0 * np.log10(np.maximum(power, DB_TINY))


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


@dataclass
class Spectrogram:
    window_s: float
    hop_s: float
    sample_rate: int
    freqs_hz: np.ndarray
    times_s: np.ndarray
    magnitudes: np.ndarray  # (frames, bins), linear

    def power(self) -> np.ndarray:
        """Time-averaged power spectrum over all frames."""
        return np.mean(self.magnitudes**2, axis=0)

    def energy(self) -> float:
        """Total signal energy implied by the frames.

        Only meaningful for rectangular windows with hop == window, where
        frames tile the signal and Parseval applies exactly.
        """
        mags2 = self.magnitudes**2
        nfft = 2 * (mags2.shape[1] - 1)
        # undo the one-sided fold: interior bins carry both conjugate halves
        full = 2.0 * mags2.sum(axis=1) - mags2[:, 0] - mags2[:, -1]
        return float(full.sum() / nfft)


def spectrogram(
    sig,
    sr: int,
    window_s: float = 4096.0 / 48000.0,
    hop_s: float = 1024.0 / 48000.0,
    window: str = "hann",
) -> Spectrogram:
    """Short-time magnitude spectra; hann by default, "rect" for energy checks."""
    x = np.asarray(sig, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("spectrogram expects a mono signal")
    win_n = int(round(window_s * sr))
    hop_n = max(1, int(round(hop_s * sr)))
    if hop_n > win_n:
        raise ValueError("hop must not exceed the window")
    if len(x) < win_n:
        raise ValueError("signal shorter than one analysis window")
    if window == "hann":
        w = np.hanning(win_n)
    elif window == "rect":
        w = np.ones(win_n)
    else:
        raise ValueError(f"unknown window {window!r}")
    nfft = _next_pow2(win_n)
    starts = np.arange(0, len(x) - win_n + 1, hop_n)
    mags = np.empty((len(starts), nfft // 2 + 1))
    for i, s in enumerate(starts):
        mags[i] = np.abs(np.fft.rfft(x[s : s + win_n] * w, nfft))
    freqs = np.fft.rfftfreq(nfft, 1.0 / sr)
    times = (starts + win_n / 2) / sr
    return Spectrogram(win_n / sr, hop_n / sr, sr, freqs, times, mags)


@dataclass
class HarmonicReport:
    base_hz: float
    k_lo: int
    k_hi: int
    peak_db: np.ndarray  # one level per harmonic k_lo..k_hi
    floor_db: float  # median level between harmonics
    hnr_db: float  # mean(peak_db) - floor_db


def harmonic_peaks(sig, sr: int, base_hz: float, k_lo: int, k_hi: int) -> HarmonicReport:
    """Comb measurement: per-harmonic peak levels against the median floor.

    Peaks are searched within +-base/4 of each k*base; the floor pools every
    bin in the span that sits further than base/4 from any harmonic.
    """
    if k_hi * base_hz >= sr / 2:
        raise ValueError("highest harmonic exceeds Nyquist")
    if k_lo < 1 or k_hi < k_lo:
        raise ValueError("bad harmonic range")
    spec = spectrogram(sig, sr)
    psd_db = _db(spec.power())
    freqs = spec.freqs_hz

    peaks = np.empty(k_hi - k_lo + 1)
    for i, k in enumerate(range(k_lo, k_hi + 1)):
        sel = np.abs(freqs - k * base_hz) <= base_hz / 4.0
        peaks[i] = float(np.max(psd_db[sel]))

    span = (freqs >= (k_lo - 0.5) * base_hz) & (freqs <= (k_hi + 0.5) * base_hz)
    near = np.abs(freqs / base_hz - np.round(freqs / base_hz)) <= 0.25
    between = span & ~near
    floor = float(np.median(psd_db[between]))
    return HarmonicReport(
        base_hz, k_lo, k_hi, peaks, floor, float(np.mean(peaks) - floor)
    )


# -- pitch ------------------------------------------------------------------

PITCH_SEARCH_LO_HZ = 100.0
PITCH_SEARCH_HI_HZ = 1000.0
# buckling events per muscle contraction; sustained song puts its comb at
# the contraction rate, two octaves below the musical pitch
PULSES_PER_CONTRACTION = 4
_PITCH_HARMONICS = 5
_PITCH_SCORE_MIN_DB = 12.0
_COMB_SCAN_HZ = (40.0, 250.0)
_COMB_BAND_HZ = (200.0, 3200.0)
_COMB_MIN_LINES = 8
_COMB_MIN_NET_DB = 8.0
_LINE_PRESENT_DB = 6.0


def _refine_peak(db: np.ndarray, b: int) -> float:
    """Sub-bin peak position by log-parabolic fit around bin b."""
    b = b - 1 + int(np.argmax(db[b - 1 : b + 2])) if 0 < b < len(db) - 1 else b
    if not 0 < b < len(db) - 1:
        return float(b)
    y0, y1, y2 = db[b - 1], db[b], db[b + 1]
    denom = y0 - 2.0 * y1 + y2
    delta = 0.5 * (y0 - y2) / denom if abs(denom) > 1e-12 else 0.0
    return b + float(np.clip(delta, -0.5, 0.5))


def _comb_net_score(prom: np.ndarray, df: float, spacing_hz: float):
    """Prominence of present lines minus mean midpoint prominence.

    Lines are sampled at every multiple of the spacing inside the comb
    band; midpoints half a spacing up. Averaging hits over present lines
    only keeps a comb that dies into a filter skirt from diluting its own
    score. A spacing that is double the true one puts its midpoints ON
    real lines and scores badly, which is what rules out sparse supersets
    of the true comb; half the true spacing ties with it and is resolved
    by the caller preferring the larger spacing.
    """
    m_lo = int(math.ceil(_COMB_BAND_HZ[0] / spacing_hz))
    m_hi = int(math.floor(_COMB_BAND_HZ[1] / spacing_hz))
    if m_hi - m_lo + 1 < _COMB_MIN_LINES:
        return -1e9, 0
    ms = np.arange(m_lo, m_hi + 1)
    half = max(1, int(round(spacing_hz / 4.0 / df)))
    hits = np.empty(len(ms))
    mids = np.empty(len(ms))
    for i, m in enumerate(ms):
        b = int(round(m * spacing_hz / df))
        c = int(round((m + 0.5) * spacing_hz / df))
        hits[i] = prom[max(0, b - half) : b + half + 1].max()
        mids[i] = prom[max(0, c - half) : c + half + 1].max()
    strong = hits >= _LINE_PRESENT_DB
    present = int(np.sum(strong))
    if present < _COMB_MIN_LINES:
        return -1e9, present
    return float(np.mean(hits[strong]) - np.mean(mids)), present


def estimate_pitch(sig, sr: int) -> Optional[float]:
    """Pitch in Hz of a sustained segment, or None when nothing periodic.

    Two-stage: a dense comb spanning many adjacent multiples of one spacing
    is read as a muscle-rate comb, whose musical pitch sits a factor of
    PULSES_PER_CONTRACTION above the spacing (grouped buckling pulses place
    the spectral fundamental at the contraction rate, not at the perceived
    pitch). Anything without such a comb falls through to a plain
    harmonic-product-spectrum search over 100..1000 Hz on the whitened
    spectrum. Needs at least half a second of signal.
    """
    x = np.asarray(sig, dtype=np.float64)
    if x.ndim == 2:
        x = x.mean(axis=1)
    if len(x) < int(0.5 * sr):
        raise ValueError("need at least 0.5 s of signal")
    x = x - x.mean()
    # averaged spectrum: line positions stay put while the variance of both
    # the noise floor and the line shapes drops enough to threshold on
    win_s = 8192.0 / 48000.0
    spec = spectrogram(x, sr, window_s=win_s, hop_s=win_s / 4.0)
    db = _db(spec.power())
    df = float(spec.freqs_hz[1] - spec.freqs_hz[0])
    width = max(3, int(round(90.0 / df)) | 1)
    prom = np.maximum(db - median_filter(db, size=width, mode="nearest"), 0.0)
    n_bins = len(prom)

    # stage 1: muscle-rate comb
    scan = np.arange(_COMB_SCAN_HZ[0], _COMB_SCAN_HZ[1], 0.25)
    nets = np.array([_comb_net_score(prom, df, float(s))[0] for s in scan])
    best_net = float(nets.max())
    if best_net >= _COMB_MIN_NET_DB:
        # half the true spacing scores the same set of real lines, so take
        # the largest spacing among the near-ties
        best_s = float(scan[np.flatnonzero(nets >= best_net - 1.0)[-1]])
        # least-squares fit over every present line: k*spacing ~ f_k. The
        # detilted spectrum keeps the fit off the filter skirts, and the
        # line positions themselves carry far more precision than the scan
        half = max(1, int(round(best_s / 4.0 / df)))
        num = den = 0.0
        for k in range(1, int(math.floor(_COMB_BAND_HZ[1] / best_s)) + 1):
            b = int(round(k * best_s / df))
            if b + half >= n_bins:
                break
            lo = max(0, b - half)
            w = float(prom[lo : b + half + 1].max())
            if w < _LINE_PRESENT_DB:
                continue
            b_pk = lo + int(np.argmax(prom[lo : b + half + 1]))
            f_k = _refine_peak(prom, b_pk) * df
            w = min(w, 20.0)
            num += w * k * f_k
            den += w * k * k
        if den > 0.0:
            return PULSES_PER_CONTRACTION * (num / den)

    # stage 2: harmonic product spectrum for plain tonal input
    lo = int(math.ceil(PITCH_SEARCH_LO_HZ / df))
    hi = int(math.floor(PITCH_SEARCH_HI_HZ / df))
    cand = np.arange(lo, hi + 1)
    score = np.zeros(len(cand))
    for h in range(1, _PITCH_HARMONICS + 1):
        idx = cand * h
        valid = idx < n_bins
        score[valid] += prom[idx[valid]] / h
    best = int(np.argmax(score))
    if score[best] < _PITCH_SCORE_MIN_DB:
        return None
    base_bin = cand[best]
    h_star, best_prom = 1, -1.0
    for h in range(1, _PITCH_HARMONICS + 1):
        b = base_bin * h
        if b + 1 >= n_bins:
            break
        if prom[b] > best_prom:
            best_prom, h_star = float(prom[b]), h
    pos = _refine_peak(db, base_bin * h_star)
    return pos * df / h_star


def rolloff_slope(probe: Callable[[float], float], f0_hz: float) -> float:
    """Least-squares level slope, dB per octave, over octaves 2..4 above f0.

    probe(freq_hz) must return the measured response in dB at that
    frequency; log-spaced probe points are drawn inside [4*f0, 16*f0].
    """
    octs = np.linspace(2.0, 4.0, 9)
    freqs = f0_hz * 2.0**octs
    levels = np.array([probe(float(f)) for f in freqs])
    slope, _ = np.polyfit(octs, levels, 1)
    return float(slope)


def comb_spacing(
    sig,
    sr: int,
    spacing_lo_hz: float = 60.0,
    spacing_hi_hz: float = 120.0,
    band_hz: tuple = (1500.0, 3000.0),
) -> float:
    """Dominant comb spacing inside band_hz, by harmonic template match."""
    spec = spectrogram(sig, sr)
    psd_db = _db(spec.power())
    df = float(spec.freqs_hz[1] - spec.freqs_hz[0])
    width = max(3, int(round(90.0 / df)) | 1)
    prom = np.maximum(psd_db - median_filter(psd_db, size=width, mode="nearest"), 0.0)

    def template_score(s: float) -> float:
        m_lo = int(math.ceil(band_hz[0] / s))
        m_hi = int(math.floor(band_hz[1] / s))
        if m_hi < m_lo:
            return 0.0
        idx = np.round(np.arange(m_lo, m_hi + 1) * s / df).astype(int)
        idx = idx[idx < len(prom)]
        return float(np.mean(prom[idx]))

    grid = np.arange(spacing_lo_hz, spacing_hi_hz, 0.05)
    scores = np.array([template_score(s) for s in grid])
    i = int(np.argmax(scores))
    if 0 < i < len(grid) - 1:
        y0, y1, y2 = scores[i - 1], scores[i], scores[i + 1]
        denom = y0 - 2.0 * y1 + y2
        delta = 0.5 * (y0 - y2) / denom if abs(denom) > 1e-12 else 0.0
        return float(grid[i] + np.clip(delta, -0.5, 0.5) * 0.05)
    return float(grid[i])


def transfer_peak(
    sig_in,
    sig_out,
    sr: int,
    band_hz: tuple = (800.0, 3500.0),
) -> float:
    """Frequency of the peak |out|/|in| power ratio across band_hz.

    The input is a harmonic comb, so a naive argmax of the ratio snaps to
    whichever comb line lands nearest the true peak and wobbles with the
    note being played. Instead: a low-leakage window makes the ratio exact
    wherever the broadband excitation floor dominates, which is nearly
    every bin, and a quadratic fit over the top of that dense curve lands
    on the same frequency regardless of where the comb lines fall.
    """
    nseg = 8192
    kw = dict(fs=sr, nperseg=nseg, noverlap=nseg - nseg // 8, window="blackmanharris")
    freqs, p_in = sps.welch(np.asarray(sig_in, dtype=np.float64), **kw)
    _, p_out = sps.welch(np.asarray(sig_out, dtype=np.float64), **kw)

    band = (freqs >= band_hz[0]) & (freqs <= band_hz[1])
    driven = p_in > np.max(p_in[band]) * 1e-7
    sel = band & driven
    ratio_db = np.where(sel, _db(np.maximum(p_out, DB_TINY)) - _db(np.maximum(p_in, DB_TINY)), -np.inf)

    # median only for locating the coarse maximum; the fit uses raw bins
    smooth = median_filter(
        np.where(np.isfinite(ratio_db), ratio_db, -300.0), size=5, mode="nearest"
    )
    smooth[~sel] = -np.inf
    i = int(np.argmax(smooth))
    f_pk = freqs[i]

    top = sel & (ratio_db >= smooth[i] - 2.0) & (np.abs(freqs - f_pk) < 0.25 * f_pk)
    if np.count_nonzero(top) >= 5:
        ff = freqs[top] - f_pk
        coef = np.polyfit(ff, ratio_db[top], 2)
        if coef[0] < 0.0:
            vertex = -coef[1] / (2.0 * coef[0])
            if abs(vertex) < 0.25 * f_pk:
                return float(f_pk + vertex)
    return float(f_pk)


def band_energy_fraction_db(sig, sr: int, split_hz: float = 3000.0) -> float:
    """10*log10(energy above split / total energy)."""
    spec = spectrogram(sig, sr)
    p = spec.power()
    hi = float(np.sum(p[spec.freqs_hz >= split_hz]))
    total = float(np.sum(p))
    return 10.0 * math.log10(max(hi, DB_TINY) / max(total, DB_TINY))


def rms(sig) -> float:
    x = np.asarray(sig, dtype=np.float64)
    return float(np.sqrt(np.mean(x**2)))


def format_report(entries: dict) -> str:
    """Flat key/value lines; arrays join as space-separated numbers."""
    lines = []
    for key, value in entries.items():
        if isinstance(value, (list, tuple, np.ndarray)):
            body = " ".join(f"{float(v):.6g}" for v in np.asarray(value).ravel())
        elif isinstance(value, float):
            body = f"{value:.6g}"
        else:
            body = str(value)
        lines.append(f"{key}\t{body}")
    return "\n".join(lines) + "\n"
