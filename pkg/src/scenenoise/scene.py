"""Scene information: data model, response parsing, and filter metrics.

A chat-model response is parsed into a :class:`SceneInfo`. Two textual
forms are accepted:

Line-oriented key/value form::

    dimensions: (4, 2.5, 4)
    scene: balcony
    microphone: (3.5, 0.5, 1.2)
    speaker: (2, 1.5, 1.6)
    noise: type=the sound of footsteps location=(0.5, 0.5, 1.2)

Structured (JSON) form, optionally inside a fenced code block::

    {"dimensions": [4, 2.5, 4], "scene": "balcony",
     "microphone": [3.5, 0.5, 1.2], "speaker": [2, 1.5, 1.6],
     "noises": [{"type": "the sound of footsteps", "location": [0.5, 0.5, 1.2]}]}

Lines that do not start with a known key (translations, commentary) are
ignored by the line parser.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence


class ParseError(ValueError):
    """The response does not follow the scene-information format."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class EmptyCorpus(ValueError):
    pass


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def of(cls, values: Sequence[float]) -> "Vec3":
        if len(values) != 3:
            raise ValueError(f"expected 3 components, got {len(values)}")
        return cls(*values)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def distance(self, other: "Vec3") -> float:
        return math.dist(self.as_tuple(), other.as_tuple())

    def __iter__(self):
        return iter(self.as_tuple())


@dataclass(frozen=True)
class NoiseSource:
    noise_type: str
    location: Vec3

    def __post_init__(self):
        text = self.noise_type.strip()
        if not text:
            raise ValueError("noise_type must be non-empty")
        if len(text.splitlines()) != 1:
            raise ValueError("noise_type must be a single line")
        if "location=" in text.lower():
            raise ValueError("noise_type must not contain 'location='")
        object.__setattr__(self, "noise_type", text)


@dataclass(frozen=True)
class SceneInfo:
    dimensions: Vec3
    mic_location: Vec3
    speaker_location: Vec3
    noise_sources: tuple[NoiseSource, ...] = ()
    scene_type: str = ""
    raw_text: str = field(default="", compare=False, repr=False)

    def __post_init__(self):
        if min(self.dimensions) <= 0:
            raise ValueError(f"dimensions must be strictly positive: {self.dimensions}")
        object.__setattr__(self, "noise_sources", tuple(self.noise_sources))
        scene_type = self.scene_type.strip()
        if len(scene_type.splitlines()) > 1:
            raise ValueError("scene_type must be a single line")
        object.__setattr__(self, "scene_type", scene_type)

    @property
    def num_noise_types(self) -> int:
        return len(self.noise_sources)

    def to_dict(self) -> dict[str, Any]:
        return {
            "dimensions": list(self.dimensions),
            "scene": self.scene_type,
            "microphone": list(self.mic_location),
            "speaker": list(self.speaker_location),
            "noises": [
                {"type": n.noise_type, "location": list(n.location)}
                for n in self.noise_sources
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any], raw_text: str = "") -> "SceneInfo":
        return _scene_from_mapping(data, raw_text)


@dataclass(frozen=True)
class FilterConfig:
    overlap_epsilon: float = 0.1
    min_noise_types: int = 2
    bounds_inclusive: bool = False

    def __post_init__(self):
        if not self.overlap_epsilon > 0:
            raise ValueError("overlap_epsilon must be > 0")
        if self.min_noise_types < 0:
            raise ValueError("min_noise_types must be >= 0")


@dataclass(frozen=True)
class FilterReport:
    response_error: bool = False
    mic_overlaps_source: bool = False
    location_exceeds_dimensions: bool = False
    types_less_than_target: bool = False

    @property
    def passed(self) -> bool:
        return not (
            self.response_error
            or self.mic_overlaps_source
            or self.location_exceeds_dimensions
            or self.types_less_than_target
        )

    def to_dict(self) -> dict[str, bool]:
        return {
            "response_error": self.response_error,
            "mic_overlaps_source": self.mic_overlaps_source,
            "location_exceeds_dimensions": self.location_exceeds_dimensions,
            "types_less_than_target": self.types_less_than_target,
            "passed": self.passed,
        }


METRIC_NAMES = (
    "response_error",
    "mic_overlaps_source",
    "location_exceeds_dimensions",
    "types_less_than_target",
)


@dataclass(frozen=True)
class CorpusMetrics:
    total: int
    counts: dict[str, int]

    def percentage(self, metric: str) -> float:
        return round(100.0 * self.counts[metric] / self.total, 1)

    @property
    def percentages(self) -> dict[str, float]:
        return {name: self.percentage(name) for name in METRIC_NAMES}

    def to_dict(self) -> dict[str, Any]:
        return {"total": self.total, "counts": dict(self.counts), "percentages": self.percentages}

    def table(self) -> str:
        """Render as a four-column metric table (percent failing)."""
        header = f"{'responses':>9}  {'#1':>6}  {'#2':>6}  {'#3':>6}  {'#4':>6}"
        row = f"{self.total:>9}  " + "  ".join(
            f"{self.percentage(name):>6.1f}" for name in METRIC_NAMES
        )
        return header + "\n" + row


# --- parsing ---------------------------------------------------------------

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_TUPLE = re.compile(r"^\(\s*(" + _NUM + r")\s*,\s*(" + _NUM + r")\s*,\s*(" + _NUM + r")\s*\)$")
_KEY_LINE = re.compile(
    r"^\s*(?:[-*]\s*)?(dimensions|scene|microphone|speaker|noise)\s*:\s*(.*?)\s*$",
    re.IGNORECASE,
)
_NOISE_BODY = re.compile(r"^type\s*=\s*(.+?)\s+location\s*=\s*(\(.*\))$", re.IGNORECASE)
_FENCE = re.compile(r"```(?:json)?\s*\n?(.*?)\n?\s*```", re.DOTALL)


def _parse_tuple(text: str, what: str) -> Vec3:
    match = _TUPLE.match(text.strip())
    if not match:
        raise ParseError(f"malformed {what} tuple: {text!r}")
    try:
        return Vec3(*(float(g) for g in match.groups()))
    except ValueError as exc:
        raise ParseError(f"invalid {what} tuple: {exc}") from None


def _parse_lines(text: str) -> SceneInfo:
    single: dict[str, str] = {}
    noises: list[NoiseSource] = []
    for line in text.splitlines():
        match = _KEY_LINE.match(line)
        if not match:
            continue
        key, value = match.group(1).lower(), match.group(2)
        if key == "noise":
            body = _NOISE_BODY.match(value)
            if not body:
                raise ParseError(f"malformed noise line: {line.strip()!r}")
            noises.append(NoiseSource(body.group(1), _parse_tuple(body.group(2), "noise location")))
            continue
        if key in single:
            raise ParseError(f"duplicate {key!r} entry")
        single[key] = value

    if not single and not noises:
        raise ParseError("no recognizable response structure")
    for required in ("dimensions", "microphone", "speaker"):
        if required not in single:
            raise ParseError(f"missing {required}")
    dims = _parse_tuple(single["dimensions"], "dimensions")
    if min(dims) <= 0:
        raise ParseError(f"dimensions must be strictly positive: {single['dimensions']}")
    return SceneInfo(
        dimensions=dims,
        scene_type=single.get("scene", ""),
        mic_location=_parse_tuple(single["microphone"], "microphone"),
        speaker_location=_parse_tuple(single["speaker"], "speaker"),
        noise_sources=tuple(noises),
        raw_text=text,
    )


def _vec_from_json(value: Any, what: str) -> Vec3:
    if isinstance(value, dict):
        value = [value.get(k) for k in ("x", "y", "z")]
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ParseError(f"malformed {what} tuple: {value!r}")
    if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
        raise ParseError(f"non-numeric {what} tuple: {value!r}")
    try:
        return Vec3(*value)
    except ValueError as exc:
        raise ParseError(f"invalid {what} tuple: {exc}") from None


def _scene_from_mapping(data: Any, raw_text: str) -> SceneInfo:
    if not isinstance(data, dict):
        raise ParseError("structured response is not an object")
    for required in ("dimensions", "microphone", "speaker"):
        if required not in data:
            raise ParseError(f"missing {required}")
    dims = _vec_from_json(data["dimensions"], "dimensions")
    if min(dims) <= 0:
        raise ParseError("dimensions must be strictly positive")
    noises = []
    raw_noises = data.get("noises", [])
    if not isinstance(raw_noises, list):
        raise ParseError("noises must be a list")
    for item in raw_noises:
        if not isinstance(item, dict) or not isinstance(item.get("type"), str):
            raise ParseError(f"malformed noise entry: {item!r}")
        try:
            noises.append(NoiseSource(item["type"], _vec_from_json(item.get("location"), "noise location")))
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc)) from None
    scene_type = data.get("scene", "")
    if not isinstance(scene_type, str):
        raise ParseError("scene must be text")
    return SceneInfo(
        dimensions=dims,
        scene_type=scene_type,
        mic_location=_vec_from_json(data["microphone"], "microphone"),
        speaker_location=_vec_from_json(data["speaker"], "speaker"),
        noise_sources=tuple(noises),
        raw_text=raw_text,
    )


def _try_json(text: str) -> Any:
    stripped = text.strip()
    candidates = [stripped]
    candidates += [m.group(1) for m in _FENCE.finditer(stripped)]
    for candidate in candidates:
        if not candidate.startswith("{"):
            continue
        try:
            return json.loads(candidate)
        except json.JSONDecodeError:
            continue
    return None


def parse_scene_info(text: str) -> SceneInfo:
    """Parse a chat-model response into a :class:`SceneInfo`.

    Raises :class:`ParseError` when the response is empty, lacks the
    dimensions or microphone/speaker coordinates, or contains malformed
    tuples. This is exactly the condition flagged as a response error.
    """
    if not text or not text.strip():
        raise ParseError("empty response")
    data = _try_json(text)
    if data is not None:
        return _scene_from_mapping(data, text)
    try:
        return _parse_lines(text)
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc)) from None


def _fmt(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _fmt_vec(v: Vec3) -> str:
    return "(" + ", ".join(_fmt(c) for c in v) + ")"


def render_scene_info(scene: SceneInfo) -> str:
    """Serialize in the canonical line-oriented form (inverse of parsing)."""
    lines = [
        f"dimensions: {_fmt_vec(scene.dimensions)}",
        f"scene: {scene.scene_type}",
        f"microphone: {_fmt_vec(scene.mic_location)}",
        f"speaker: {_fmt_vec(scene.speaker_location)}",
    ]
    for noise in scene.noise_sources:
        lines.append(f"noise: type={noise.noise_type} location={_fmt_vec(noise.location)}")
    return "\n".join(lines) + "\n"


# --- filter metrics --------------------------------------------------------


def check_response_error(text: str) -> bool:
    try:
        parse_scene_info(text)
    except ParseError:
        return True
    return False


def _sources(scene: SceneInfo) -> list[Vec3]:
    return [scene.speaker_location] + [n.location for n in scene.noise_sources]


def check_mic_overlap(scene: SceneInfo, cfg: FilterConfig = FilterConfig()) -> bool:
    """True if the microphone sits within ``overlap_epsilon`` of any source."""
    return any(scene.mic_location.distance(s) < cfg.overlap_epsilon for s in _sources(scene))


def _outside(point: Vec3, dims: Vec3, inclusive: bool) -> bool:
    for c, d in zip(point, dims):
        if inclusive:
            if c < 0 or c > d:
                return True
        elif c <= 0 or c >= d:
            return True
    return False


def check_location_bounds(scene: SceneInfo, cfg: FilterConfig = FilterConfig()) -> bool:
    """True if any location leaves the room (open interval by default)."""
    points = [scene.mic_location] + _sources(scene)
    return any(_outside(p, scene.dimensions, cfg.bounds_inclusive) for p in points)


def check_type_count(scene: SceneInfo, cfg: FilterConfig = FilterConfig()) -> bool:
    return scene.num_noise_types < cfg.min_noise_types


def evaluate(text: str, cfg: FilterConfig = FilterConfig()) -> tuple[FilterReport, SceneInfo | None]:
    """Run all four metrics; return the report and the parsed scene (if any)."""
    try:
        scene = parse_scene_info(text)
    except ParseError:
        return FilterReport(response_error=True), None
    report = FilterReport(
        mic_overlaps_source=check_mic_overlap(scene, cfg),
        location_exceeds_dimensions=check_location_bounds(scene, cfg),
        types_less_than_target=check_type_count(scene, cfg),
    )
    return report, scene


def validate(text: str, cfg: FilterConfig = FilterConfig()) -> FilterReport:
    return evaluate(text, cfg)[0]


def corpus_metrics(responses: Iterable[str], cfg: FilterConfig = FilterConfig()) -> CorpusMetrics:
    counts = dict.fromkeys(METRIC_NAMES, 0)
    total = 0
    for text in responses:
        total += 1
        report = validate(text, cfg)
        for name in METRIC_NAMES:
            counts[name] += int(getattr(report, name))
    if total == 0:
        raise EmptyCorpus("corpus contains no responses")
    return CorpusMetrics(total=total, counts=counts)
