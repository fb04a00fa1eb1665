import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from f0warp import AudioBuffer, synth_harmonic, write_wav

SAMPLE_RATE = 16000


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def noisy_harmonic(f0, duration=1.0, snr_db=20.0, seed=0):
    """Harmonic train plus white noise at the requested SNR."""
    buf = synth_harmonic(f0, duration)
    gen = np.random.default_rng(seed)
    noise = gen.standard_normal(len(buf))
    signal_power = np.mean(buf.samples ** 2)
    noise *= np.sqrt(signal_power / np.mean(noise ** 2) / 10 ** (snr_db / 10))
    return AudioBuffer(buf.samples + noise, SAMPLE_RATE, f"noisy-{f0:g}hz")


def archive_hash(directory) -> str:
    digest = hashlib.sha256()
    for path in sorted(Path(directory).rglob("*")):
        if path.is_file():
            digest.update(path.name.encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


def write_manifest(path, entries) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for entry in entries:
            handle.write(json.dumps(entry) + "\n")


def make_wav_dataset(tmp_path, f0s, duration=0.5):
    """Synthesize one WAV per f0 and return manifest entry dicts."""
    entries = []
    for i, f0 in enumerate(f0s):
        wav_path = tmp_path / f"utt{i:02d}.wav"
        write_wav(wav_path, synth_harmonic(float(f0), duration))
        entries.append({"id": f"utt{i:02d}", "audio": str(wav_path)})
    return entries
