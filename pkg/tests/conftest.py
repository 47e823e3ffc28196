"""Shared fixtures: one full demo render reused by every measurement test."""

import pytest

from maemi import VoiceConfig, demo_score, render_score


@pytest.fixture(scope="session")
def demo_e5():
    # 6.8 s covers the whole demo timeline plus the release tail
    return render_score(
        demo_score("E5"), VoiceConfig(), duration_s=6.8, collect_taps=True
    )


@pytest.fixture(scope="session")
def demo_e5_mono(demo_e5):
    return demo_e5.audio.mean(axis=1)
