"""Scene-based noise augmentation for speech datasets."""

from .acoustics import (
    ImageSource,
    KernelConfig,
    Rir,
    RoomModel,
    RoomParams,
    absorption_from_rt60,
    compute_rir,
    convolve,
    enumerate_image_sources,
    kernel,
    simulate_scene,
)
from .audio import AudioClip, read_wav, write_wav
from .augment import AugmentConfig, ManifestEntry, augment_dataset, augment_utterance, pick_volume, should_augment
from .chat import ChatBackend, ChatClient, ExhaustedRetries, FixtureCorpus, fixture_lookup, generate_scene_info
from .prompt import BetTemplate, ChatTurn, FewShotExample, ScenePrompt, build_dual, build_single, render_query
from .scene import (
    CorpusMetrics,
    FilterConfig,
    FilterReport,
    NoiseSource,
    ParseError,
    SceneInfo,
    Vec3,
    corpus_metrics,
    parse_scene_info,
    render_scene_info,
    validate,
)
from .tta import NoiseBank, TtaBackend, TtaRequest, VolumeLevel, synthesize_noise, volume_variants

__version__ = "0.1.0"
