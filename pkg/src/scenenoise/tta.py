"""Scene-based noise acquisition.

Noise audio for each noise type comes from a text-to-audio (TTA) service
over HTTP, or from a deterministic fixture synthesizer for offline runs.
A :class:`NoiseBank` caches clips on disk as 16-bit PCM WAV files.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import httpx
import numpy as np

from .audio import (
    DEFAULT_SAMPLE_RATE,
    AudioClip,
    decode_wav,
    quantize,
    read_wav,
    resample_linear,
    write_wav,
)
from .seeding import rng_for, stable_key

log = logging.getLogger(__name__)

VOLUME_LEVELS = (0, 25, 50, 75, 100)
API_KEY_ENV = "SCENENOISE_API_KEY"


class TransportError(RuntimeError):
    """Network failure, timeout, or a non-success reply from a service."""


class BadAudio(ValueError):
    """Service returned audio with the wrong sample rate or length."""


@dataclass(frozen=True)
class TtaRequest:
    prompt_text: str
    ddim_steps: int = 200
    guidance_scale: float = 2.5
    duration: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if not self.prompt_text.strip():
            raise ValueError("prompt_text must be non-empty")
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if self.ddim_steps <= 0:
            raise ValueError("ddim_steps must be > 0")

    def num_samples(self, sample_rate: int) -> int:
        return int(round(self.duration * sample_rate))


@dataclass(frozen=True)
class VolumeLevel:
    level: int

    def __post_init__(self):
        if self.level not in VOLUME_LEVELS:
            raise ValueError(f"volume level must be one of {VOLUME_LEVELS}")

    @property
    def gain(self) -> float:
        return self.level / 100


def volume_variants(clip: AudioClip) -> list[AudioClip]:
    """The clip at each volume level, ordered 0% to 100% (linear amplitude gain)."""
    return [clip.scaled(VolumeLevel(level).gain) for level in VOLUME_LEVELS]


@dataclass(frozen=True)
class TtaBackend:
    kind: Literal["fixture", "http"] = "fixture"
    endpoint: str | None = None
    timeout: float = 120.0
    sample_rate: int = DEFAULT_SAMPLE_RATE
    resample: bool = False
    http_client: httpx.Client | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("fixture", "http"):
            raise ValueError(f"unknown TTA backend kind {self.kind!r}")
        if self.kind == "http" and not self.endpoint:
            raise ValueError("http TTA backend needs an endpoint")
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")


def _fixture_noise(req: TtaRequest, sample_rate: int) -> np.ndarray:
    """Seeded noise with a 1/f^beta spectral tilt and slow amplitude modulation.

    Tilt, modulation rate and depth depend only on the prompt text, so a given
    noise type keeps its character across seeds.
    """
    n = req.num_samples(sample_rate)
    shape = rng_for("tta-shape", req.prompt_text)
    beta = shape.uniform(0.3, 1.8)
    am_rate = shape.uniform(0.5, 6.0)
    am_depth = shape.uniform(0.0, 0.6)

    rng = rng_for("tta-fixture", req.prompt_text, req.seed)
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.arange(spectrum.shape[0], dtype=np.float64)
    freqs[0] = 1.0
    spectrum *= freqs ** (-beta / 2)
    spectrum[0] = 0.0
    signal = np.fft.irfft(spectrum, n)

    t = np.arange(n) / sample_rate
    phase = rng.uniform(0, 2 * np.pi)
    signal *= 1.0 - am_depth * 0.5 * (1 + np.sin(2 * np.pi * am_rate * t + phase))

    peak = np.max(np.abs(signal)) if n else 0.0
    if peak > 0:
        signal *= 0.8 / peak
    return signal


def _http_noise(req: TtaRequest, backend: TtaBackend) -> AudioClip:
    body = {
        "prompt": req.prompt_text,
        "ddim_steps": req.ddim_steps,
        "guidance_scale": req.guidance_scale,
        "duration": req.duration,
        "seed": req.seed,
        "sample_rate": backend.sample_rate,
    }
    headers = {}
    if os.environ.get(API_KEY_ENV):
        headers["Authorization"] = f"Bearer {os.environ[API_KEY_ENV]}"
    client = backend.http_client or httpx.Client()
    try:
        resp = client.post(backend.endpoint, json=body, headers=headers, timeout=backend.timeout)
    except httpx.HTTPError as exc:
        raise TransportError(f"TTA request failed: {exc}") from exc
    finally:
        if backend.http_client is None:
            client.close()
    if resp.status_code != 200:
        raise TransportError(f"TTA service returned HTTP {resp.status_code}")
    try:
        return decode_wav(resp.content)
    except ValueError as exc:
        raise BadAudio(f"TTA service returned undecodable audio: {exc}") from exc


def synthesize_noise(req: TtaRequest, backend: TtaBackend = TtaBackend()) -> AudioClip:
    expected = req.num_samples(backend.sample_rate)
    if backend.kind == "fixture":
        return AudioClip(_fixture_noise(req, backend.sample_rate), backend.sample_rate)

    clip = _http_noise(req, backend)
    if clip.sample_rate == backend.sample_rate and len(clip) == expected:
        return clip
    if not backend.resample:
        raise BadAudio(
            f"expected {expected} samples at {backend.sample_rate} Hz, "
            f"got {len(clip)} at {clip.sample_rate} Hz"
        )
    log.info("resampling TTA audio %d Hz -> %d Hz", clip.sample_rate, backend.sample_rate)
    return resample_linear(clip, backend.sample_rate, expected)


class NoiseBank:
    """Disk cache of synthesized noise, keyed by (noise type, seed, duration, rate).

    Layout: ``<dir>/<key>.wav`` plus ``<dir>/index.json`` mapping keys to
    file names and request parameters.
    """

    INDEX = "index.json"

    def __init__(self, directory: str | Path, backend: TtaBackend = TtaBackend(), *,
                 duration: float = 5.0, ddim_steps: int = 200, guidance_scale: float = 2.5):
        self.directory = Path(directory)
        self.backend = backend
        self.duration = duration
        self.ddim_steps = ddim_steps
        self.guidance_scale = guidance_scale
        self.backend_calls = 0
        self._lock = threading.Lock()
        self._key_locks: dict[str, threading.Lock] = {}
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IOError(f"cannot create noise bank at {self.directory}: {exc}") from exc

    def key(self, noise_type: str, seed: int) -> str:
        return stable_key(noise_type, int(seed), float(self.duration), int(self.backend.sample_rate))

    def _read_index(self) -> dict:
        path = self.directory / self.INDEX
        if not path.exists():
            return {}
        return json.loads(path.read_text(encoding="utf-8"))

    def _write_index(self, index: dict) -> None:
        path = self.directory / self.INDEX
        tmp = path.with_suffix(f".tmp{threading.get_ident()}")
        tmp.write_text(json.dumps(index, indent=1, sort_keys=True), encoding="utf-8")
        os.replace(tmp, path)

    def __contains__(self, item: tuple[str, int]) -> bool:
        key = self.key(*item)
        return (self.directory / f"{key}.wav").exists() and key in self._read_index()

    def get(self, noise_type: str, seed: int) -> AudioClip:
        key = self.key(noise_type, seed)
        path = self.directory / f"{key}.wav"
        with self._lock:
            key_lock = self._key_locks.setdefault(key, threading.Lock())
        with key_lock:
            if path.exists():
                return read_wav(path)
            req = TtaRequest(noise_type, self.ddim_steps, self.guidance_scale, self.duration, int(seed))
            with self._lock:
                self.backend_calls += 1
            clip = quantize(synthesize_noise(req, self.backend))
            try:
                tmp = path.with_suffix(".tmp.wav")
                write_wav(tmp, clip)
                os.replace(tmp, path)
                with self._lock:
                    index = self._read_index()
                    index[key] = {
                        "file": path.name,
                        "noise_type": noise_type,
                        "seed": int(seed),
                        "duration": self.duration,
                        "sample_rate": clip.sample_rate,
                    }
                    self._write_index(index)
            except OSError as exc:
                raise IOError(f"cannot write noise bank entry {path}: {exc}") from exc
            return clip

    def clear(self) -> None:
        with self._lock:
            for entry in self.directory.glob("*.wav"):
                entry.unlink()
            index = self.directory / self.INDEX
            if index.exists():
                index.unlink()


def noise_bank_get(noise_type: str, seed: int, bank: NoiseBank) -> AudioClip:
    return bank.get(noise_type, seed)
