"""Image-source room acoustics for shoebox rooms.

The room impulse response between a source and a microphone is the sum,
over the source and its mirror images, of

    (1 - absorption) ** order / (4 pi distance)

placed at the fractional delay ``sample_rate * distance / speed_of_sound``
and spread over neighbouring taps by a raised-cosine kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.signal import oaconvolve

from .audio import DEFAULT_SAMPLE_RATE, AudioClip, SampleRateMismatch
from .scene import NoiseSource, SceneInfo, Vec3
from .seeding import stable_seed

SPEED_OF_SOUND = 343.0
SABINE_CONSTANT = 0.1611
PEAK_LIMIT = 0.95


class AcousticsError(ValueError):
    pass


class DegenerateRoom(AcousticsError):
    pass


class SourceOutsideRoom(AcousticsError):
    pass


class CoincidentMicSource(AcousticsError):
    pass


class MissingNoiseClip(AcousticsError):
    pass


@dataclass(frozen=True)
class RoomModel:
    dimensions: Vec3
    absorption: float
    max_order: int = 1
    sample_rate: int = DEFAULT_SAMPLE_RATE
    speed_of_sound: float = SPEED_OF_SOUND
    environment: Literal["indoor", "outdoor"] = "indoor"

    def __post_init__(self):
        if not 0.0 <= self.absorption <= 1.0:
            raise ValueError("absorption must be in [0, 1]")
        if self.max_order < 0:
            raise ValueError("max_order must be >= 0")
        if min(self.dimensions) <= 0:
            raise DegenerateRoom(f"room dimensions must be positive: {self.dimensions}")
        if self.environment not in ("indoor", "outdoor"):
            raise ValueError(f"unknown environment {self.environment!r}")
        if self.sample_rate <= 0 or self.speed_of_sound <= 0:
            raise ValueError("sample_rate and speed_of_sound must be positive")

    @property
    def effective_order(self) -> int:
        # outdoors, reflections stand in for extra direct sources: never beyond first order
        if self.environment == "outdoor":
            return min(self.max_order, 1)
        return self.max_order


@dataclass(frozen=True)
class ImageSource:
    location: Vec3
    order: int


@dataclass(frozen=True)
class KernelConfig:
    window_width_taps: int = 81
    mode: Literal["raised-cosine", "windowed-sinc"] = "raised-cosine"

    def __post_init__(self):
        if self.window_width_taps < 3 or self.window_width_taps % 2 == 0:
            raise ValueError("window_width_taps must be odd and >= 3")
        if self.mode not in ("raised-cosine", "windowed-sinc"):
            raise ValueError(f"unknown kernel mode {self.mode!r}")

    def window_seconds(self, sample_rate: int) -> float:
        return self.window_width_taps / sample_rate


@dataclass(frozen=True)
class ImageContribution:
    location: Vec3
    order: int
    distance: float
    gain: float
    delay: float  # samples


@dataclass(frozen=True, eq=False)
class Rir:
    taps: np.ndarray
    sample_rate: int
    contributions: tuple[ImageContribution, ...] = field(default=(), repr=False)

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float64).reshape(-1)
        if taps.shape[0] < 1 or not np.all(np.isfinite(taps)):
            raise ValueError("RIR taps must be finite and non-empty")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    def __len__(self) -> int:
        return self.taps.shape[0]

    def listing(self) -> list[dict]:
        return [
            {
                "location": list(c.location),
                "order": c.order,
                "distance": c.distance,
                "gain": c.gain,
                "delay": c.delay,
            }
            for c in self.contributions
        ]


def absorption_from_rt60(rt60: float, dims: Vec3) -> float:
    """Uniform wall absorption from Sabine's formula, clamped to [0, 1]."""
    if rt60 <= 0:
        raise ValueError("rt60 must be > 0")
    x, y, z = dims
    volume = x * y * z
    surface = 2 * (x * y + y * z + x * z)
    if surface <= 0 or volume <= 0:
        raise DegenerateRoom(f"room {dims} has no volume")
    return min(1.0, max(0.0, SABINE_CONSTANT * volume / (surface * rt60)))


def _strictly_inside(point: Vec3, dims: Vec3) -> bool:
    return all(0 < c < d for c, d in zip(point, dims))


def _axis_images(coord: float, length: float, max_order: int) -> list[tuple[float, int]]:
    # image coordinate (1 - 2q) * coord + 2 n length reflects |2n - q| times
    out = []
    for n in range(-max_order, max_order + 1):
        for q in (0, 1):
            reflections = abs(2 * n - q)
            if reflections <= max_order:
                out.append(((1 - 2 * q) * coord + 2 * n * length, reflections))
    return out


def enumerate_image_sources(room: RoomModel, source: Vec3) -> list[ImageSource]:
    """The real source (order 0) followed by its mirror images, by increasing order.

    At first order there is exactly one image per wall.
    """
    if not _strictly_inside(source, room.dimensions):
        raise SourceOutsideRoom(f"source {source} not strictly inside room {room.dimensions}")
    order_cap = room.effective_order
    axes = [_axis_images(c, d, order_cap) for c, d in zip(source, room.dimensions)]
    images = []
    for x, ox in axes[0]:
        for y, oy in axes[1]:
            for z, oz in axes[2]:
                order = ox + oy + oz
                if order <= order_cap:
                    images.append(ImageSource(Vec3(x, y, z), order))
    images.sort(key=lambda im: im.order)
    return images


def kernel(t, cfg: KernelConfig = KernelConfig(), sample_rate: int = DEFAULT_SAMPLE_RATE):
    """Raised-cosine fractional-delay kernel; ``t`` in seconds (scalar or array).

    ``0.5 * (1 + cos(2 pi t / T_w))`` on ``|t| <= T_w / 2`` and zero outside,
    with ``T_w = window_width_taps / sample_rate``. The ``windowed-sinc``
    mode multiplies by ``sinc(sample_rate * t)``.
    """
    t_arr = np.asarray(t, dtype=np.float64)
    width = cfg.window_seconds(sample_rate)
    inside = np.abs(t_arr) <= width / 2
    values = np.where(inside, 0.5 * (1.0 + np.cos(2.0 * np.pi * t_arr / width)), 0.0)
    if cfg.mode == "windowed-sinc":
        values = values * np.sinc(sample_rate * t_arr)
    if np.ndim(t) == 0:
        return float(values)
    return values


def compute_rir(room: RoomModel, source: Vec3, mic: Vec3,
                cfg: KernelConfig = KernelConfig()) -> Rir:
    """Sampled RIR from ``source`` to ``mic``.

    In a convex shoebox every image is visible from an interior microphone,
    so all enumerated images contribute. Kernel taps that would fall before
    time zero are dropped.
    """
    if not _strictly_inside(mic, room.dimensions):
        raise SourceOutsideRoom(f"microphone {mic} not strictly inside room {room.dimensions}")
    if source.distance(mic) < 1e-9:
        raise CoincidentMicSource(f"microphone coincides with source at {source}")
    images = enumerate_image_sources(room, source)
    fs, c = room.sample_rate, room.speed_of_sound
    half = cfg.window_width_taps // 2

    contributions = []
    for im in images:
        dist = im.location.distance(mic)
        gain = (1.0 - room.absorption) ** im.order / (4.0 * math.pi * dist)
        contributions.append(ImageContribution(im.location, im.order, dist, gain, fs * dist / c))

    max_delay = max(ct.delay for ct in contributions)
    taps = np.zeros(int(math.floor(max_delay)) + half + 2)
    for ct in contributions:
        if ct.gain == 0.0:
            continue
        lo = max(0, math.ceil(ct.delay - half - 1))
        hi = min(taps.shape[0], math.floor(ct.delay + half + 1) + 1)
        n = np.arange(lo, hi)
        taps[lo:hi] += ct.gain * kernel((n - ct.delay) / fs, cfg, fs)
    return Rir(taps, fs, tuple(contributions))


def convolve(clip: AudioClip, rir: Rir) -> AudioClip:
    """Full linear convolution (length ``len(clip) + len(rir) - 1``)."""
    if clip.sample_rate != rir.sample_rate:
        raise SampleRateMismatch(f"clip at {clip.sample_rate} Hz, RIR at {rir.sample_rate} Hz")
    if len(clip) == 0:
        return AudioClip(np.zeros(0), clip.sample_rate)
    return AudioClip(oaconvolve(clip.samples, rir.taps), clip.sample_rate)


# --- scene simulation ------------------------------------------------------


@dataclass(frozen=True)
class RoomParams:
    rt60: float = 0.5
    absorption: float | None = None  # overrides rt60 when set
    max_order: int = 1
    sample_rate: int = DEFAULT_SAMPLE_RATE
    speed_of_sound: float = SPEED_OF_SOUND
    environment: Literal["indoor", "outdoor"] = "indoor"
    kernel: KernelConfig = KernelConfig()
    seed: int = 0  # noise alignment offsets
    normalize: bool = True

    def room_for(self, dims: Vec3) -> RoomModel:
        alpha = self.absorption if self.absorption is not None else absorption_from_rt60(self.rt60, dims)
        return RoomModel(dims, alpha, self.max_order, self.sample_rate,
                         self.speed_of_sound, self.environment)


@dataclass(frozen=True)
class SimulationResult:
    audio: AudioClip
    normalization_gain: float
    rirs: tuple[Rir, ...]


def fit_noise(clip: AudioClip, length: int, seed: int, source: NoiseSource) -> np.ndarray:
    """Loop or crop ``clip`` to ``length`` samples from a seeded start offset.

    The offset depends on the seed and the source itself (type and location),
    not its position in the scene, so each source is aligned the same way
    whatever else the scene contains.
    """
    n = len(clip)
    if length == 0:
        return np.zeros(0)
    if n == 0:
        raise MissingNoiseClip(f"empty noise clip for {source.noise_type!r}")
    rng = np.random.default_rng(stable_seed("noise-offset", seed, source.noise_type, list(source.location)))
    if n >= length:
        start = int(rng.integers(0, n - length + 1))
        return clip.samples[start:start + length]
    start = int(rng.integers(0, n))
    return np.take(clip.samples, np.arange(start, start + length), mode="wrap")


def normalize_peak(samples: np.ndarray, limit: float = PEAK_LIMIT) -> tuple[np.ndarray, float]:
    peak = float(np.max(np.abs(samples))) if samples.size else 0.0
    if peak > limit:
        gain = limit / peak
        return samples * gain, gain
    return samples, 1.0


def render_source(room: RoomModel, location: Vec3, mic: Vec3, samples: np.ndarray,
                  cfg: KernelConfig) -> tuple[np.ndarray, Rir]:
    """One source convolved with its RIR, trimmed to the input length."""
    rir = compute_rir(room, location, mic, cfg)
    wet = convolve(AudioClip(samples, room.sample_rate), rir).samples[: samples.shape[0]]
    return wet, rir


def simulate_scene(scene: SceneInfo, speech: AudioClip,
                   noises: Sequence[tuple[NoiseSource, AudioClip]],
                   params: RoomParams = RoomParams()) -> SimulationResult:
    """Place speech and noise sources in the scene's room and mix at the microphone.

    ``noises`` pairs each of ``scene.noise_sources`` with its clip (already at
    the chosen volume). Output has the speech length; if the mixed peak
    exceeds 0.95 the whole mix is scaled down and the gain reported.
    """
    room = params.room_for(scene.dimensions)
    for clip in [speech] + [c for _, c in noises]:
        if clip.sample_rate != room.sample_rate:
            raise SampleRateMismatch(f"clip at {clip.sample_rate} Hz, room at {room.sample_rate} Hz")
    provided = [src for src, _ in noises]
    for src in scene.noise_sources:
        if src not in provided:
            raise MissingNoiseClip(f"no clip for noise source {src.noise_type!r}")

    length = len(speech)
    mix, speech_rir = render_source(room, scene.speaker_location, scene.mic_location,
                                    speech.samples, params.kernel)
    mix = mix.copy()
    rirs = [speech_rir]
    for src, clip in noises:
        aligned = fit_noise(clip, length, params.seed, src)
        wet, rir = render_source(room, src.location, scene.mic_location, aligned, params.kernel)
        mix += wet
        rirs.append(rir)

    gain = 1.0
    if params.normalize:
        mix, gain = normalize_peak(mix)
    return SimulationResult(AudioClip(mix, room.sample_rate), gain, tuple(rirs))


def scene_geometry(scene: SceneInfo, params: RoomParams = RoomParams()) -> dict:
    """Positions of microphone, sources and their images, for plotting."""
    room = params.room_for(scene.dimensions)
    sources = [("speech", scene.speaker_location)] + [
        (n.noise_type, n.location) for n in scene.noise_sources
    ]
    return {
        "dimensions": list(scene.dimensions),
        "absorption": room.absorption,
        "microphone": list(scene.mic_location),
        "sources": [
            {
                "label": label,
                "location": list(loc),
                "images": [
                    {"location": list(im.location), "order": im.order}
                    for im in enumerate_image_sources(room, loc)
                    if im.order > 0
                ],
            }
            for label, loc in sources
        ],
    }
