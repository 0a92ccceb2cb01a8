"""Dataset-level scene-based noise augmentation.

Each utterance is augmented with probability ``anr`` (the add-noise rate).
All randomness is drawn from generators seeded by ``(seed, utterance index,
purpose)``, so output is independent of worker count and scheduling.
"""

from __future__ import annotations

import json
import logging
import shutil
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Literal

from .acoustics import KernelConfig, RoomParams, simulate_scene
from .audio import AudioClip, read_wav, resample_linear, write_wav
from .chat import ChatClient, generate_scene_info
from .prompt import BetTemplate, ScenePrompt, default_template, render_query
from .scene import FilterConfig, SceneInfo
from .seeding import rng_for, stable_key, stable_seed
from .tta import VOLUME_LEVELS, NoiseBank, VolumeLevel

log = logging.getLogger(__name__)

DEFAULT_PROMPTS = (
    ScenePrompt("Noisy", "pedestrian street"),
    ScenePrompt("Busy", "cafe"),
    ScenePrompt("Noisy", "balcony"),
    ScenePrompt("Quiet", "office"),
    ScenePrompt("Crowded", "subway station"),
)


@dataclass(frozen=True)
class AugmentConfig:
    anr: float = 0.2
    seed: int = 0
    rt60: float = 0.5
    absorption: float | None = None  # overrides rt60 when set
    max_order: int = 1
    sample_rate: int = 16000
    speed_of_sound: float = 343.0
    environment: Literal["indoor", "outdoor"] = "indoor"
    scene_prompts: tuple[ScenePrompt, ...] = DEFAULT_PROMPTS
    filter: FilterConfig = FilterConfig()
    kernel: KernelConfig = KernelConfig()
    pool_size: int = 100
    jobs: int = 1

    def __post_init__(self):
        if not 0.0 <= self.anr <= 1.0:
            raise ValueError("anr must be in [0, 1]")
        if not self.scene_prompts:
            raise ValueError("scene_prompts must be non-empty")
        if self.pool_size < 1:
            raise ValueError("pool_size must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        object.__setattr__(self, "scene_prompts", tuple(self.scene_prompts))

    def room_params(self, seed: int) -> RoomParams:
        return RoomParams(rt60=self.rt60, absorption=self.absorption, max_order=self.max_order,
                          sample_rate=self.sample_rate, speed_of_sound=self.speed_of_sound, environment=self.environment,
                          kernel=self.kernel, seed=seed)

    def fingerprint(self) -> str:
        data = asdict(self)
        data.pop("jobs")
        return stable_key(data)


@dataclass
class ManifestEntry:
    utterance_id: str
    input_path: str = ""
    output_path: str = ""
    augmented: bool = False
    scene: SceneInfo | None = None
    scene_prompt: str | None = None
    volume_levels: list[int] = field(default_factory=list)
    normalization_gain: float = 1.0
    seed_used: int = 0
    transcript: str | None = None
    original_sample_rate: int | None = None
    config_id: str = ""
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["scene"] = self.scene.to_dict() if self.scene is not None else None
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ManifestEntry":
        data = dict(data)
        if data.get("scene") is not None:
            data["scene"] = SceneInfo.from_dict(data["scene"])
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in data.items() if k in known})


def utterance_seed(seed: int, utterance_index: int) -> int:
    return stable_seed("utterance", seed, utterance_index)


def should_augment(utterance_index: int, cfg: AugmentConfig) -> bool:
    return bool(rng_for("anr", cfg.seed, utterance_index).random() < cfg.anr)


def pick_volume(utterance_index: int, source_index: int, cfg: AugmentConfig) -> VolumeLevel:
    draw = rng_for("volume", cfg.seed, utterance_index, source_index).integers(len(VOLUME_LEVELS))
    return VolumeLevel(VOLUME_LEVELS[int(draw)])


def augment_utterance(speech: AudioClip, scene: SceneInfo, bank: NoiseBank, cfg: AugmentConfig,
                      utterance_index: int,
                      levels: list[VolumeLevel] | None = None) -> tuple[AudioClip, ManifestEntry]:
    """Mix one utterance into ``scene``; noise volumes are drawn unless ``levels`` is given."""
    if speech.sample_rate != cfg.sample_rate:
        raise ValueError(f"speech at {speech.sample_rate} Hz, expected {cfg.sample_rate} Hz")
    if levels is None:
        levels = [pick_volume(utterance_index, i, cfg) for i in range(scene.num_noise_types)]
    if len(levels) != scene.num_noise_types:
        raise ValueError("need one volume level per noise source")
    seed_used = utterance_seed(cfg.seed, utterance_index)
    noises = [
        (src, bank.get(src.noise_type, cfg.seed).scaled(level.gain))
        for src, level in zip(scene.noise_sources, levels)
    ]
    result = simulate_scene(scene, speech, noises, cfg.room_params(seed_used))
    entry = ManifestEntry(
        utterance_id=str(utterance_index),
        augmented=True,
        scene=scene,
        volume_levels=[lv.level for lv in levels],
        normalization_gain=result.normalization_gain,
        seed_used=seed_used,
        config_id=cfg.fingerprint(),
    )
    return result.audio, entry


class ScenePool:
    """Scenes generated once per (prompt, slot) and shared across utterances."""

    def __init__(self, client: ChatClient, cfg: AugmentConfig, template: BetTemplate | None = None):
        self.client = client
        self.cfg = cfg
        self.template = template or default_template()
        self._scenes: dict[tuple[int, int], SceneInfo] = {}
        self._lock = threading.Lock()
        self._key_locks: dict[tuple[int, int], threading.Lock] = {}

    def choose(self, utterance_index: int) -> tuple[int, int]:
        rng = rng_for("scene-choice", self.cfg.seed, utterance_index)
        return int(rng.integers(len(self.cfg.scene_prompts))), int(rng.integers(self.cfg.pool_size))

    def get(self, prompt_index: int, slot: int) -> SceneInfo:
        key = (prompt_index, slot)
        with self._lock:
            if key in self._scenes:
                return self._scenes[key]
            key_lock = self._key_locks.setdefault(key, threading.Lock())
        with key_lock:
            with self._lock:
                if key in self._scenes:
                    return self._scenes[key]
            task = self.cfg.scene_prompts[prompt_index]
            seed = stable_seed("scene", self.cfg.seed, render_query(task), slot)
            outcome = generate_scene_info(task, self.template, self.client, self.cfg.filter, seed=seed)
            with self._lock:
                self._scenes[key] = outcome.scene
            return outcome.scene


@dataclass
class DatasetResult:
    entries: list[ManifestEntry]
    manifest_path: Path

    @property
    def error_count(self) -> int:
        return sum(e.error is not None for e in self.entries)

    @property
    def augmented_count(self) -> int:
        return sum(e.augmented and e.error is None for e in self.entries)


def read_manifest(path: str | Path) -> list[dict[str, Any]]:
    records = []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            item = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{n}: {exc}") from None
        if not isinstance(item, dict) or "utterance_id" not in item or "path" not in item:
            raise ValueError(f"{path}:{n}: record needs 'utterance_id' and 'path'")
        records.append(item)
    return records


def write_manifest(path: str | Path, entries: list[ManifestEntry]) -> None:
    lines = [json.dumps(e.to_dict(), sort_keys=True, ensure_ascii=False) for e in entries]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


MANIFEST_NAME = "manifest.jsonl"


def augment_dataset(in_manifest: str | Path, out_dir: str | Path, cfg: AugmentConfig,
                    chat_client: ChatClient, bank: NoiseBank,
                    template: BetTemplate | None = None) -> DatasetResult:
    """Augment every utterance listed in ``in_manifest`` into ``out_dir``.

    Writes ``out_dir/audio/<utterance_id>.wav`` and ``out_dir/manifest.jsonl``.
    Utterances not selected for augmentation are copied byte for byte.
    Per-utterance failures are recorded in the manifest and do not stop the run.
    Entries already present with the same seed and configuration are reused.
    """
    in_manifest = Path(in_manifest)
    out_dir = Path(out_dir)
    (out_dir / "audio").mkdir(parents=True, exist_ok=True)
    records = read_manifest(in_manifest)
    pool = ScenePool(chat_client, cfg, template)
    config_id = cfg.fingerprint()

    previous: dict[str, ManifestEntry] = {}
    manifest_path = out_dir / MANIFEST_NAME
    if manifest_path.exists():
        for item in read_manifest_entries(manifest_path):
            previous[item.utterance_id] = item

    def process(index: int, record: dict[str, Any]) -> ManifestEntry:
        utt_id = str(record["utterance_id"])
        src = Path(record["path"])
        if not src.is_absolute():
            src = in_manifest.parent / src
        entry = ManifestEntry(
            utterance_id=utt_id,
            input_path=str(record["path"]),
            output_path=f"audio/{utt_id}.wav",
            seed_used=utterance_seed(cfg.seed, index),
            transcript=record.get("transcript"),
            config_id=config_id,
        )
        if "/" in utt_id or "\\" in utt_id or utt_id in ("", ".", ".."):
            entry.error = f"invalid utterance_id {utt_id!r}"
            return entry
        out_path = out_dir / entry.output_path

        prior = previous.get(utt_id)
        if (prior is not None and prior.error is None and prior.seed_used == entry.seed_used
                and prior.config_id == config_id and out_path.exists()):
            return prior

        try:
            if not should_augment(index, cfg):
                shutil.copyfile(src, out_path)
                return entry
            speech = read_wav(src)
            entry.original_sample_rate = speech.sample_rate
            if speech.sample_rate != cfg.sample_rate:
                speech = resample_linear(speech, cfg.sample_rate)
            prompt_index, slot = pool.choose(index)
            entry.scene_prompt = render_query(cfg.scene_prompts[prompt_index])
            scene = pool.get(prompt_index, slot)
            audio, mixed = augment_utterance(speech, scene, bank, cfg, index)
            write_wav(out_path, audio)
        except Exception as exc:  # recorded per entry; the run continues
            log.warning("utterance %s failed: %s", utt_id, exc)
            entry.error = f"{type(exc).__name__}: {exc}"
            return entry
        entry.augmented = True
        entry.scene = mixed.scene
        entry.volume_levels = mixed.volume_levels
        entry.normalization_gain = mixed.normalization_gain
        return entry

    if cfg.jobs == 1:
        entries = [process(i, r) for i, r in enumerate(records)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as workers:
            entries = list(workers.map(process, range(len(records)), records))

    write_manifest(manifest_path, entries)
    return DatasetResult(entries, manifest_path)


def read_manifest_entries(path: str | Path) -> list[ManifestEntry]:
    return [
        ManifestEntry.from_dict(json.loads(line))
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
