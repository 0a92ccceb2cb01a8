"""Mono audio clips and 16-bit PCM WAV I/O."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

DEFAULT_SAMPLE_RATE = 16000
PCM_SCALE = 32767.0


class SampleRateMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AudioClip:
    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64).reshape(-1)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.shape[0]

    def __eq__(self, other):
        if not isinstance(other, AudioClip):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(self.samples, other.samples)

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if len(self) else 0.0

    @property
    def energy(self) -> float:
        return float(np.dot(self.samples, self.samples))

    def scaled(self, gain: float) -> "AudioClip":
        return AudioClip(self.samples * gain, self.sample_rate)

    @classmethod
    def silence(cls, num_samples: int, sample_rate: int = DEFAULT_SAMPLE_RATE) -> "AudioClip":
        return cls(np.zeros(num_samples), sample_rate)


def to_pcm16(samples: np.ndarray) -> np.ndarray:
    return np.round(np.clip(samples, -1.0, 1.0) * PCM_SCALE).astype(np.int16)


def quantize(clip: AudioClip) -> AudioClip:
    """Round-trip through 16-bit PCM so in-memory audio equals what is on disk."""
    return AudioClip(to_pcm16(clip.samples) / PCM_SCALE, clip.sample_rate)


def _from_array(rate: int, data: np.ndarray) -> AudioClip:
    if data.ndim > 1:
        data = data.mean(axis=1)
    if data.dtype == np.int16:
        samples = data / PCM_SCALE
    elif data.dtype == np.int32:
        samples = data / 2147483647.0
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 127.0
    else:
        samples = data.astype(np.float64)
    return AudioClip(samples, rate)


def read_wav(path: str | Path) -> AudioClip:
    rate, data = wavfile.read(str(path))
    return _from_array(rate, data)


def decode_wav(payload: bytes) -> AudioClip:
    rate, data = wavfile.read(io.BytesIO(payload))
    return _from_array(rate, data)


def write_wav(path: str | Path, clip: AudioClip) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(str(path), clip.sample_rate, to_pcm16(clip.samples))


def encode_wav(clip: AudioClip) -> bytes:
    buf = io.BytesIO()
    wavfile.write(buf, clip.sample_rate, to_pcm16(clip.samples))
    return buf.getvalue()


def write_float_wav(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """32-bit float WAV, for signals (like RIRs) that may exceed [-1, 1]."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(str(path), sample_rate, np.asarray(samples, dtype=np.float32))


def resample_linear(clip: AudioClip, sample_rate: int, num_samples: int | None = None) -> AudioClip:
    """Linear-interpolation resampler; keeps duration unless ``num_samples`` is given."""
    if num_samples is None:
        num_samples = int(round(len(clip) * sample_rate / clip.sample_rate))
    if clip.sample_rate == sample_rate and num_samples == len(clip):
        return clip
    if len(clip) == 0 or num_samples == 0:
        return AudioClip.silence(num_samples, sample_rate)
    src_t = np.arange(len(clip)) / clip.sample_rate
    dst_t = np.arange(num_samples) / sample_rate
    return AudioClip(np.interp(dst_t, src_t, clip.samples), sample_rate)
