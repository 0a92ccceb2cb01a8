"""Synthetic speech-like utterances for offline runs and tests."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .audio import AudioClip, write_wav


def synthetic_utterance(rng: np.random.Generator, seconds: float = 0.5,
                        sample_rate: int = 16000) -> AudioClip:
    """A harmonic tone with a syllable-rate envelope and a little breath noise."""
    t = np.arange(int(seconds * sample_rate)) / sample_rate
    f0 = rng.uniform(100, 220)
    voiced = sum(np.sin(2 * np.pi * f0 * k * t) / k for k in range(1, 6))
    envelope = 0.5 * (1 - np.cos(2 * np.pi * t * rng.uniform(2, 5)))
    return AudioClip(0.3 * voiced * envelope / 2.3 + 0.01 * rng.standard_normal(t.shape[0]), sample_rate)


def write_fixture_dataset(root: str | Path, n: int = 5, seconds: float = 0.5,
                          sample_rate: int = 16000, seed: int = 0) -> Path:
    """Write ``n`` utterances and a JSONL manifest under ``root``; return the manifest path."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    lines = []
    for i in range(n):
        name = f"utt{i:03d}.wav"
        write_wav(root / name, synthetic_utterance(rng, seconds, sample_rate))
        lines.append(json.dumps({"utterance_id": f"utt{i:03d}", "path": name, "transcript": f"sentence {i}"}))
    manifest = root / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest
