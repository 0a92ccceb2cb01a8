"""Chat-model client for scene-information generation.

Backends:

* ``http-single``: POST ``{"model", "prompt", "options"}``
* ``http-dual``: POST ``{"model", "prompt", "history": [{"role", "content"}], "options"}``
* ``fixture``: canned responses from a JSONL corpus of ``{"key", "response"}``
  records, with a seeded synthesizer for unknown keys.

Replies from HTTP endpoints must be JSON objects with a ``content`` field.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import httpx

from .prompt import BetTemplate, ChatTurn, ScenePrompt, build_dual, build_single, render_query
from .scene import FilterConfig, FilterReport, NoiseSource, SceneInfo, Vec3, evaluate, render_scene_info
from .seeding import rng_for
from .tta import API_KEY_ENV, TransportError

log = logging.getLogger(__name__)


class ExhaustedRetries(RuntimeError):
    def __init__(self, rejected: list[tuple[str, FilterReport]]):
        super().__init__(f"no valid scene after {len(rejected)} attempts")
        self.rejected = rejected


@dataclass(frozen=True)
class ChatBackend:
    kind: Literal["http-single", "http-dual", "fixture"] = "fixture"
    endpoint: str | None = None
    model_name: str = ""
    timeout: float = 60.0
    max_retries: int = 3
    max_concurrency: int = 4
    options: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in ("http-single", "http-dual", "fixture"):
            raise ValueError(f"unknown chat backend kind {self.kind!r}")
        if self.kind != "fixture" and not self.endpoint:
            raise ValueError(f"{self.kind} backend needs an endpoint")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")

    @property
    def dual(self) -> bool:
        return self.kind == "http-dual"


@dataclass
class GenerationOutcome:
    scene: SceneInfo
    attempts: int
    rejected: list[tuple[str, FilterReport]]


# --- fixture backend -------------------------------------------------------

_NOISE_VOCAB = (
    "the sound of footsteps",
    "crowd chatter",
    "a car horn honking",
    "traffic passing by",
    "birds chirping",
    "wind blowing through trees",
    "a dog barking",
    "an air conditioner humming",
    "keyboard typing",
    "a phone ringing",
    "dishes clattering",
    "rain falling on a roof",
    "a door slamming",
    "children playing",
    "a vacuum cleaner running",
    "music playing from a speaker",
)


def synthesize_response(key: str, seed: int) -> str:
    """A valid scene response derived from a hash of ``(key, seed)``.

    Every location keeps a 0.2 m margin from the walls and at least 0.5 m
    from the microphone, so the result passes the default filter metrics.
    """
    rng = rng_for("chat-fixture", key, int(seed))
    dims = [round(float(v), 2) for v in (rng.uniform(3, 15), rng.uniform(3, 12), rng.uniform(2.4, 4))]

    def point() -> list[float]:
        return [round(float(rng.uniform(0.2, d - 0.2)), 2) for d in dims]

    mic = point()
    placed = []
    n_sources = 1 + int(rng.integers(2, 5))
    while len(placed) < n_sources:
        p = point()
        if sum((a - b) ** 2 for a, b in zip(p, mic)) >= 0.25:
            placed.append(p)
    types = rng.choice(len(_NOISE_VOCAB), size=n_sources - 1, replace=False)
    scene = SceneInfo(
        dimensions=Vec3.of(dims),
        scene_type=key.split(maxsplit=1)[-1].lower() if key.strip() else "room",
        mic_location=Vec3.of(mic),
        speaker_location=Vec3.of(placed[0]),
        noise_sources=tuple(
            NoiseSource(_NOISE_VOCAB[t], Vec3.of(p)) for t, p in zip(types, placed[1:])
        ),
    )
    return render_scene_info(scene)


class FixtureCorpus:
    """Canned responses by task key; repeated keys form a scripted sequence."""

    def __init__(self, records: dict[str, list[str]] | None = None):
        self.records: dict[str, list[str]] = {k: list(v) for k, v in (records or {}).items()}

    @classmethod
    def load(cls, path: str | Path) -> "FixtureCorpus":
        records: dict[str, list[str]] = defaultdict(list)
        for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                item = json.loads(line)
                records[item["key"]].append(item["response"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{n}: bad fixture record ({exc})") from None
        return cls(records)

    def lookup(self, task_key: str, seed: int, attempt: int = 0) -> str:
        scripted = self.records.get(task_key)
        if scripted:
            return scripted[min(attempt, len(scripted) - 1)]
        return synthesize_response(task_key, seed)


def fixture_lookup(task_key: str, seed: int, corpus: FixtureCorpus | None = None, attempt: int = 0) -> str:
    return (corpus or FixtureCorpus()).lookup(task_key, seed, attempt)


# --- client ----------------------------------------------------------------


class ChatClient:
    """Sends BET prompts to a backend; safe for concurrent use."""

    def __init__(self, backend: ChatBackend, corpus: FixtureCorpus | None = None,
                 http_client: httpx.Client | None = None):
        self.backend = backend
        self.corpus = corpus or FixtureCorpus()
        self._http = http_client
        self._slots = threading.BoundedSemaphore(backend.max_concurrency)

    def request_body(self, prompt: str, history: list[ChatTurn] | None) -> dict[str, Any]:
        body: dict[str, Any] = {"model": self.backend.model_name, "prompt": prompt}
        if history is not None:
            body["history"] = [turn.to_dict() for turn in history]
        if self.backend.options:
            body["options"] = dict(self.backend.options)
        return body

    def _post(self, body: dict[str, Any]) -> str:
        headers = {}
        if os.environ.get(API_KEY_ENV):
            headers["Authorization"] = f"Bearer {os.environ[API_KEY_ENV]}"
        client = self._http or httpx.Client()
        try:
            with self._slots:
                resp = client.post(self.backend.endpoint, json=body, headers=headers,
                                   timeout=self.backend.timeout)
        except httpx.HTTPError as exc:
            raise TransportError(f"chat request failed: {exc}") from exc
        finally:
            if self._http is None:
                client.close()
        if resp.status_code != 200:
            raise TransportError(f"chat endpoint returned HTTP {resp.status_code}")
        try:
            content = resp.json()["content"]
        except (ValueError, KeyError, TypeError) as exc:
            raise TransportError(f"chat reply lacks a 'content' field: {exc}") from None
        if not isinstance(content, str):
            raise TransportError("chat reply 'content' is not text")
        return content

    def complete(self, template: BetTemplate, seed: int = 0, attempt: int = 0) -> str:
        if self.backend.kind == "fixture":
            return self.corpus.lookup(render_query(template._task()), seed, attempt)
        if self.backend.dual:
            history, prompt = build_dual(template)
            return self._post(self.request_body(prompt, history))
        return self._post(self.request_body(build_single(template), None))


def generate_scene_info(task: ScenePrompt, template: BetTemplate, client: ChatClient,
                        cfg: FilterConfig = FilterConfig(), seed: int = 0) -> GenerationOutcome:
    """Ask for scene information until a response passes all filter metrics.

    Each retry resends the identical prompt. Raises :class:`ExhaustedRetries`
    after ``max_retries + 1`` rejected responses; transport failures raise
    :class:`TransportError` immediately.
    """
    template = template.with_task(task)
    rejected: list[tuple[str, FilterReport]] = []
    for attempt in range(client.backend.max_retries + 1):
        text = client.complete(template, seed=seed, attempt=attempt)
        report, scene = evaluate(text, cfg)
        if report.passed:
            return GenerationOutcome(scene, attempt + 1, rejected)
        log.debug("rejected response for %r: %s", render_query(task), report.to_dict())
        rejected.append((text, report))
    raise ExhaustedRetries(rejected)
