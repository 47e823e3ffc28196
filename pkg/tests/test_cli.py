import numpy as np
import pytest

from maemi.cli import main
from maemi.render import read_wav, write_wav


def test_demo_renders_a_file(tmp_path, capsys):
    out = tmp_path / "call.wav"
    assert main(["demo", "E5", "--out", str(out)]) == 0
    assert "wrote" in capsys.readouterr().out
    sr, audio = read_wav(out)
    assert sr == 48000
    assert audio.shape[0] == int(6.6 * 48000)
    assert float(np.max(np.abs(audio))) > 0.01


def test_demo_can_print_its_score(tmp_path, capsys):
    out = tmp_path / "c.wav"
    assert main(["demo", "A4", "--out", str(out), "--print-score"]) == 0
    printed = capsys.readouterr().out
    assert "gate_on" in printed and "mi" in printed


def test_demo_rejects_notes_outside_the_range(tmp_path, capsys):
    assert main(["demo", "C3", "--out", str(tmp_path / "x.wav")]) == 2
    assert "unknown note" in capsys.readouterr().err


def test_render_reports_unreadable_scores(tmp_path, capsys):
    missing = tmp_path / "none.txt"
    assert main(["render", str(missing), "--out", str(tmp_path / "x.wav")]) == 2
    assert "cannot read score" in capsys.readouterr().err


def test_render_score_round_trip(tmp_path):
    score = tmp_path / "s.txt"
    score.write_text(
        "0 pitch A4\n0 loudness 0.4\n0 gate_on\n0.05 mae\n0.9 gate_off\n"
    )
    out = tmp_path / "r.wav"
    assert (
        main(["render", str(score), "--out", str(out), "--duration", "1.0", "--float"])
        == 0
    )
    sr, audio = read_wav(out)
    assert audio.shape == (48000, 2)
    assert float(np.max(np.abs(audio))) > 1e-3


def test_render_rejects_bad_scores(tmp_path, capsys):
    score = tmp_path / "s.txt"
    score.write_text("0 warble\n")
    assert main(["render", str(score), "--out", str(tmp_path / "x.wav")]) == 2
    assert "unknown event kind" in capsys.readouterr().err


def test_analyze_report_and_figures(tmp_path, capsys, demo_e5):
    wav = tmp_path / "demo.wav"
    write_wav(wav, demo_e5.audio, demo_e5.sample_rate_hz)
    figs = tmp_path / "figs"
    assert main(["analyze", str(wav), "--figures", str(figs)]) == 0
    report = capsys.readouterr().out
    entries = dict(
        line.split("\t", 1) for line in report.strip("\n").split("\n")
    )
    assert float(entries["pitch_hz"]) == pytest.approx(659.26, rel=0.001)
    assert float(entries["hnr_middle_db"]) - float(entries["hnr_final_db"]) >= 10.0
    assert float(entries["rolloff_db_per_oct"]) < -20.0
    assert float(entries["comb_spacing_final_hz"]) == pytest.approx(82.4, rel=0.02)
    assert (figs / "demo_spectrogram.png").stat().st_size > 0
    assert (figs / "demo_harmonics.png").stat().st_size > 0


def test_analyze_rejects_garbage_files(tmp_path, capsys):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"RIFFnope")
    assert main(["analyze", str(bad)]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    assert "selftest passed" in capsys.readouterr().out
