import numpy as np
import pytest

from f0warp import (
    AudioBuffer,
    DomainError,
    PitchConfig,
    PitchFrame,
    PitchTrack,
    TooShort,
    detect_pitch,
    median_f0,
    synth_harmonic,
)
from tests.conftest import noisy_harmonic

SR = 16000


def _interior(track):
    return track.frames[1:-1]


class TestDetector:
    def test_clean_100hz_train(self):
        track = detect_pitch(synth_harmonic(100.0, 1.0))
        for frame in _interior(track):
            assert frame.voiced
            assert abs(frame.f0 - 100.0) <= 2.0

    def test_clean_270hz_train(self):
        track = detect_pitch(synth_harmonic(270.0, 1.0))
        for frame in _interior(track):
            assert frame.voiced
        uf = median_f0(track, 100.0)
        assert abs(uf.f0_utt - 270.0) <= 3.0

    def test_silence_is_unvoiced(self):
        track = detect_pitch(AudioBuffer(np.zeros(SR), SR))
        assert all(not frame.voiced for frame in track.frames)
        assert all(frame.periodicity == 0.0 for frame in track.frames)

    def test_white_noise_mostly_unvoiced(self, rng):
        buf = AudioBuffer(rng.standard_normal(SR) * 0.2, SR)
        track = detect_pitch(buf)
        voiced = sum(frame.voiced for frame in track.frames)
        assert voiced < 0.2 * len(track.frames)

    @pytest.mark.parametrize("f0", [60.0, 200.0, 400.0])
    def test_noisy_20db_median_within_3hz(self, f0):
        uf = median_f0(detect_pitch(noisy_harmonic(f0, seed=int(f0))), 100.0)
        assert not uf.fallback_used
        assert abs(uf.f0_utt - f0) <= 3.0

    def test_amplitude_invariance(self):
        base = synth_harmonic(150.0, 0.5, amplitude=0.4)
        double = AudioBuffer(base.samples * 2.0, SR)
        track_a = detect_pitch(base)
        track_b = detect_pitch(double)
        # scaling by a power of two is exact, so tracks must match bitwise
        assert [f.f0 for f in track_a.frames] == [f.f0 for f in track_b.frames]
        assert [f.periodicity for f in track_a.frames] == [
            f.periodicity for f in track_b.frames
        ]

    def test_frame_times_increasing_by_shift(self):
        track = detect_pitch(synth_harmonic(120.0, 0.5))
        times = np.array([frame.time for frame in track.frames])
        assert np.allclose(np.diff(times), track.frame_shift)

    def test_voiced_f0_within_search_range(self):
        cfg = PitchConfig(f0_min=80.0, f0_max=300.0)
        track = detect_pitch(noisy_harmonic(100.0, seed=5), cfg)
        for frame in track.frames:
            if frame.voiced:
                assert cfg.f0_min <= frame.f0 <= cfg.f0_max

    def test_too_short_raises(self):
        with pytest.raises(TooShort):
            detect_pitch(AudioBuffer(np.zeros(500), SR))

    def test_f0_max_above_nyquist_rejected(self):
        with pytest.raises(DomainError):
            detect_pitch(
                AudioBuffer(np.zeros(SR), SR), PitchConfig(f0_max=9000.0)
            )

    def test_detector_is_pluggable(self):
        canned = PitchTrack(
            frames=(PitchFrame(0.02, 123.0, 0.9),), frame_shift=0.01
        )
        got = detect_pitch(
            AudioBuffer(np.zeros(SR), SR), detector=lambda buf, cfg: canned
        )
        assert got is canned

    def test_determinism(self):
        buf = noisy_harmonic(170.0, seed=11)
        a = detect_pitch(buf)
        b = detect_pitch(buf)
        assert [f.f0 for f in a.frames] == [f.f0 for f in b.frames]


class TestMedianF0:
    def _track(self, f0s):
        frames = tuple(
            PitchFrame(time=0.01 * i, f0=f0, periodicity=1.0 if f0 else 0.0)
            for i, f0 in enumerate(f0s)
        )
        return PitchTrack(frames=frames, frame_shift=0.01)

    def test_odd_count(self):
        uf = median_f0(self._track([90.0, 100.0, 110.0]), 100.0)
        assert uf.f0_utt == 100.0
        assert uf.voiced_count == 3
        assert not uf.fallback_used

    def test_even_count_takes_lower_middle(self):
        uf = median_f0(self._track([200.0, 300.0, 250.0, 280.0]), 100.0)
        assert uf.f0_utt == 250.0

    def test_fallback_when_all_unvoiced(self):
        uf = median_f0(self._track([None, None]), 100.0)
        assert uf.f0_utt == 100.0
        assert uf.voiced_count == 0
        assert uf.fallback_used

    def test_permutation_invariant(self):
        values = [130.0, 90.0, 210.0, 175.0, 110.0]
        a = median_f0(self._track(values), 100.0)
        b = median_f0(self._track(values[::-1]), 100.0)
        assert a.f0_utt == b.f0_utt

    def test_unvoiced_frames_ignored(self):
        uf = median_f0(self._track([None, 120.0, None, 140.0, 130.0]), 100.0)
        assert uf.f0_utt == 130.0
        assert uf.voiced_count == 3


class TestPitchConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"f0_min": 0.0},
            {"f0_min": 500.0, "f0_max": 400.0},
            {"voicing_threshold": 1.5},
            {"window": -0.01},
            {"shift": 0.0},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            PitchConfig(**kwargs)
