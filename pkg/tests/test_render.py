import numpy as np
import pytest
from scipy.io import wavfile

from maemi import (
    ScoreError,
    VoiceConfig,
    demo_score,
    parse_score,
    read_wav,
    render_score,
    write_wav,
)
from maemi.voice import TAP_NAMES


def test_duration_defaults_to_the_last_event():
    res = render_score(demo_score("E5"), VoiceConfig())
    assert res.audio.shape == (int(6.6 * 48000), 2)
    assert res.sample_rate_hz == 48000


def test_empty_score_needs_an_explicit_duration():
    with pytest.raises(ScoreError):
        render_score([], VoiceConfig())
    res = render_score([], VoiceConfig(), duration_s=0.1)
    assert res.audio.shape == (4800, 2)
    assert np.all(res.audio == 0.0)


def test_nonpositive_duration_is_rejected():
    with pytest.raises(ScoreError):
        render_score(demo_score("E5"), VoiceConfig(), duration_s=-1.0)
    with pytest.raises(ScoreError):
        render_score(demo_score("E5"), VoiceConfig(), duration_s=0.0)


def test_taps_cover_every_output_sample(demo_e5):
    assert set(demo_e5.taps) == set(TAP_NAMES)
    n = demo_e5.audio.shape[0]
    for name, arr in demo_e5.taps.items():
        assert len(arr) == n, name
    np.testing.assert_array_equal(demo_e5.taps["output_l"], demo_e5.audio[:, 0])
    np.testing.assert_array_equal(demo_e5.taps["output_r"], demo_e5.audio[:, 1])


def test_collecting_taps_does_not_change_the_audio():
    a = render_score(demo_score("E5"), VoiceConfig(), duration_s=0.5)
    b = render_score(demo_score("E5"), VoiceConfig(), duration_s=0.5, collect_taps=True)
    np.testing.assert_array_equal(a.audio, b.audio)
    assert a.taps is None


def test_adjacent_same_kind_triggers_collapse_into_one():
    cfg = VoiceConfig()
    blk = cfg.block_frames / 48000.0
    head = "0 gate_on\n0 pitch E5\n0 loudness 0.5\n0.1 mae\n"
    one = parse_score(head)
    two = parse_score(head + f"{0.1 + blk:.9f} mae\n")
    ra = render_score(one, cfg, duration_s=0.4)
    rb = render_score(two, cfg, duration_s=0.4)
    np.testing.assert_array_equal(ra.audio, rb.audio)


def test_pcm16_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    audio = rng.uniform(-1.2, 1.2, (1000, 2))
    p = tmp_path / "x.wav"
    write_wav(p, audio, 48000)
    sr, back = read_wav(p)
    assert sr == 48000
    assert back.shape == (1000, 2)
    assert back.dtype == np.float64
    np.testing.assert_allclose(back, np.clip(audio, -1.0, 1.0), atol=1.0 / 32767)


def test_float32_round_trip(tmp_path):
    audio = np.linspace(-1.0, 1.0, 256).reshape(-1, 2)
    p = tmp_path / "f.wav"
    write_wav(p, audio, 44100, float32=True)
    sr, back = read_wav(p)
    assert sr == 44100
    np.testing.assert_allclose(back, audio, atol=1e-7)


def test_mono_files_gain_a_channel_axis(tmp_path):
    p = tmp_path / "m.wav"
    wavfile.write(p, 8000, np.zeros(100, dtype=np.int16))
    sr, back = read_wav(p)
    assert sr == 8000
    assert back.shape == (100, 1)
