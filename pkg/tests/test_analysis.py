import numpy as np
import pytest
from scipy.signal import lfilter

from maemi import analysis
from maemi.plate import design_resonator

SR = 48000


def _sine(freq, dur=1.0, sr=SR, amp=1.0):
    t = np.arange(int(dur * sr)) / sr
    return amp * np.sin(2 * np.pi * freq * t)


def _comb(base, ks, dur=2.0, sr=SR):
    """Harmonic stack with staggered phases over a faint noise bed."""
    t = np.arange(int(dur * sr)) / sr
    rng = np.random.default_rng(1)
    sig = 1e-4 * rng.normal(size=len(t))
    for k in ks:
        sig = sig + np.sin(2 * np.pi * k * base * t + 0.7 * k)
    return sig


def test_spectrogram_rejects_bad_inputs():
    with pytest.raises(ValueError):
        analysis.spectrogram(np.zeros((64, 2)), SR)
    with pytest.raises(ValueError):
        analysis.spectrogram(np.zeros(100), SR)
    with pytest.raises(ValueError):
        analysis.spectrogram(_sine(440.0), SR, window_s=0.01, hop_s=0.02)
    with pytest.raises(ValueError):
        analysis.spectrogram(_sine(440.0), SR, window="tukey")


def test_pure_tone_lands_in_one_bin_every_frame():
    spec = analysis.spectrogram(_sine(1000.0), SR)
    target = int(np.argmin(np.abs(spec.freqs_hz - 1000.0)))
    for frame in spec.magnitudes:
        assert abs(int(np.argmax(frame)) - target) <= 1


def test_silence_stays_on_the_floor():
    spec = analysis.spectrogram(np.zeros(SR), SR)
    assert float(np.max(spec.magnitudes)) <= 1e-12


def test_equal_tones_carry_equal_power():
    spec = analysis.spectrogram(_sine(1000.0) + _sine(2000.0), SR)
    p = spec.power()
    b1 = int(np.argmin(np.abs(spec.freqs_hz - 1000.0)))
    b2 = int(np.argmin(np.abs(spec.freqs_hz - 2000.0)))
    e1 = float(p[b1 - 5 : b1 + 6].sum())
    e2 = float(p[b2 - 5 : b2 + 6].sum())
    assert abs(10.0 * np.log10(e1 / e2)) <= 0.5


def test_rectangular_tiling_conserves_energy():
    rng = np.random.default_rng(0)
    win = 4096.0 / SR
    sig = rng.normal(size=8 * 4096)
    spec = analysis.spectrogram(sig, SR, window_s=win, hop_s=win, window="rect")
    assert spec.energy() == pytest.approx(float(np.sum(sig**2)), rel=1e-9)


def test_comb_peaks_rise_over_the_floor():
    base = 164.815
    rep = analysis.harmonic_peaks(_comb(base, range(1, 20)), SR, base, 6, 17)
    assert len(rep.peak_db) == 12
    assert rep.hnr_db >= 40.0
    assert np.all(rep.peak_db - rep.floor_db >= 12.0)


def test_harmonic_range_validation():
    sig = _comb(164.815, range(1, 20), dur=0.5)
    with pytest.raises(ValueError):
        analysis.harmonic_peaks(sig, SR, 164.815, 0, 5)
    with pytest.raises(ValueError):
        analysis.harmonic_peaks(sig, SR, 164.815, 8, 6)
    with pytest.raises(ValueError):
        analysis.harmonic_peaks(sig, SR, 3000.0, 1, 10)


def test_hnr_ignores_overall_gain():
    base = 164.815
    sig = _comb(base, range(1, 20))
    a = analysis.harmonic_peaks(sig, SR, base, 6, 17).hnr_db
    b = analysis.harmonic_peaks(7.3 * sig, SR, base, 6, 17).hnr_db
    assert abs(a - b) <= 0.1


def test_white_noise_shows_no_comb():
    rng = np.random.default_rng(9)
    rep = analysis.harmonic_peaks(rng.normal(size=2 * SR), SR, 164.815, 6, 17)
    assert rep.hnr_db <= 3.0


def test_lone_tone_towers_over_the_floor():
    sig = _sine(440.0, dur=2.0) + 1e-5 * np.random.default_rng(2).normal(size=2 * SR)
    rep = analysis.harmonic_peaks(sig, SR, 440.0, 1, 1)
    assert float(rep.peak_db[0]) - rep.floor_db >= 40.0


def test_pitch_of_plain_tones():
    assert analysis.estimate_pitch(_sine(440.0), SR) == pytest.approx(440.0, abs=1.0)
    assert analysis.estimate_pitch(_sine(1000.0), SR) == pytest.approx(1000.0, abs=1.0)


def test_pitch_of_a_sparse_stack_is_the_fundamental():
    sig = _sine(200.0) + _sine(400.0) + _sine(600.0)
    assert analysis.estimate_pitch(sig, SR) == pytest.approx(200.0, abs=1.0)


def test_noise_has_no_pitch():
    rng = np.random.default_rng(4)
    assert analysis.estimate_pitch(rng.normal(size=SR), SR) is None


def test_pitch_needs_half_a_second():
    with pytest.raises(ValueError):
        analysis.estimate_pitch(_sine(440.0, dur=0.3), SR)


def test_rolloff_slope_of_an_ideal_skirt():
    probe = lambda f: -36.0 * np.log2(f / 500.0)
    assert analysis.rolloff_slope(probe, 500.0) == pytest.approx(-36.0, abs=1e-9)
    assert analysis.rolloff_slope(lambda f: 0.0, 500.0) == pytest.approx(0.0, abs=1e-12)


def test_rolloff_slope_of_a_single_resonator_stage():
    sr = 96000
    b, a = design_resonator(500.0, 100.0, sr)

    def probe(freq_hz):
        w = 2 * np.pi * freq_hz / sr
        z1 = np.exp(-1j * w)
        h = b[0] / (1.0 + a[1] * z1 + a[2] * z1 * z1)
        return 20.0 * np.log10(abs(h))

    slope = analysis.rolloff_slope(probe, 500.0)
    assert -15.0 <= slope <= -9.0


def test_comb_spacing_of_a_dense_comb():
    base = 82.4075
    sig = _comb(base, range(12, 40))
    assert analysis.comb_spacing(sig, SR) == pytest.approx(base, rel=0.005)


def test_transfer_peak_recovers_a_known_resonance():
    sr = 48000
    rng = np.random.default_rng(3)
    x = rng.normal(size=4 * sr)
    b, a = design_resonator(1850.0, 400.0, sr)
    y = lfilter(b, a, x)
    assert analysis.transfer_peak(x, y, sr) == pytest.approx(1850.0, abs=25.0)


def test_band_fraction_tracks_the_energy_split():
    lo = _sine(1000.0)
    hi = _sine(5000.0)
    assert analysis.band_energy_fraction_db(hi, SR) > -0.2
    assert analysis.band_energy_fraction_db(lo, SR) < -30.0
    assert analysis.band_energy_fraction_db(lo + hi, SR) == pytest.approx(
        -3.01, abs=0.3
    )


def test_rms_reference_values():
    assert analysis.rms(np.ones(100)) == 1.0
    assert analysis.rms(_sine(100.0)) == pytest.approx(2.0**-0.5, rel=1e-3)
    assert analysis.rms(np.zeros(10)) == 0.0


def test_report_layout_is_tab_delimited():
    text = analysis.format_report({"a": 1.5, "b": [1.0, 2.0], "c": "x"})
    lines = text.strip("\n").split("\n")
    assert lines[0] == "a\t1.5"
    assert lines[1] == "b\t1 2"
    assert lines[2] == "c\tx"
    assert text.endswith("\n")
