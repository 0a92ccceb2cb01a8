"""BET prompts: Background, few-shot Examples, and Task.

Two renderings exist because chat models take their context in one of two
shapes. Single-parameter models receive one consolidated text; dual-parameter
models receive a chat history plus a short prompt holding only the task.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal

import yaml

from .scene import parse_scene_info

BACKGROUND_HEADER = "### Background"
EXAMPLE_HEADER = "### Example {n}"
TASK_HEADER = "### Task"
QUERY_PREFIX = "Query: "
RESPONSE_LABEL = "Response:"

_HEADER_LINE = re.compile(r"^### (Background|Example \d+|Task)$", re.MULTILINE)

# Our own wording; asks for the line-oriented scene grammar parsed by scene.py.
DEFAULT_BACKGROUND = """\
You design acoustic scenes for speech data augmentation. Given a short scene
description (an adjective and a scene type), describe a plausible shoebox-shaped
room for that scene. Answer using exactly the format of the examples:
one line "dimensions: (x, y, z)" with the room size in meters,
one line "scene: <scene type>",
one line "microphone: (x, y, z)" and one line "speaker: (x, y, z)",
and one line "noise: type=<description of the sound> location=(x, y, z)"
for every noise source. Include at least 2 different noise types.
All coordinates are in meters, strictly inside the room, and the microphone
must not coincide with the speaker or any noise source."""


@dataclass(frozen=True)
class ScenePrompt:
    adjective: str
    scene_type: str

    def __post_init__(self):
        for name in ("adjective", "scene_type"):
            value = getattr(self, name).strip()
            if not value:
                raise ValueError(f"{name} must be non-empty")
            if len(value.splitlines()) != 1:
                raise ValueError(f"{name} must be a single line")
            object.__setattr__(self, name, value)
        if len(self.adjective.split()) != 1:
            raise ValueError(f"adjective must be one word, got {self.adjective!r}")

    @classmethod
    def parse(cls, text: str) -> "ScenePrompt":
        """Split ``"Noisy pedestrian street"`` into adjective and scene type."""
        parts = text.strip().split(maxsplit=1)
        if len(parts) != 2:
            raise ValueError(f"expected '<adjective> <scene type>', got {text!r}")
        return cls(parts[0], parts[1])


def render_query(p: ScenePrompt) -> str:
    return f"{p.adjective} {p.scene_type}"


@dataclass(frozen=True)
class FewShotExample:
    query: ScenePrompt
    response: str

    def __post_init__(self):
        parse_scene_info(self.response)
        object.__setattr__(self, "response", self.response.strip("\n"))


@dataclass(frozen=True)
class ChatTurn:
    role: Literal["user", "assistant"]
    content: str

    def __post_init__(self):
        if self.role not in ("user", "assistant"):
            raise ValueError(f"unknown role {self.role!r}")
        if not self.content:
            raise ValueError("content must be non-empty")

    def to_dict(self) -> dict[str, str]:
        return {"role": self.role, "content": self.content}


def _check_no_headers(text: str, what: str) -> None:
    if _HEADER_LINE.search(text):
        raise ValueError(f"{what} contains a reserved section header line")


@dataclass(frozen=True)
class BetTemplate:
    background: str = DEFAULT_BACKGROUND
    examples: tuple[FewShotExample, ...] = field(default_factory=tuple)
    task: ScenePrompt | None = None

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        object.__setattr__(self, "background", self.background.strip("\n"))
        if not self.background:
            raise ValueError("background must be non-empty")
        _check_no_headers(self.background, "background")
        for ex in self.examples:
            _check_no_headers(ex.response, "example response")

    def with_task(self, task: ScenePrompt) -> "BetTemplate":
        return replace(self, task=task)

    def _task(self) -> ScenePrompt:
        if self.task is None:
            raise ValueError("template has no task")
        return self.task


def build_single(template: BetTemplate) -> str:
    """Concatenate Background, each example's query and response, then the task."""
    task = template._task()
    parts = [BACKGROUND_HEADER, template.background, ""]
    for n, ex in enumerate(template.examples, start=1):
        parts += [
            EXAMPLE_HEADER.format(n=n),
            QUERY_PREFIX + render_query(ex.query),
            RESPONSE_LABEL,
            ex.response,
            "",
        ]
    parts += [TASK_HEADER, QUERY_PREFIX + render_query(task), RESPONSE_LABEL]
    return "\n".join(parts) + "\n"


def build_dual(template: BetTemplate) -> tuple[list[ChatTurn], str]:
    task = template._task()
    history = [ChatTurn("user", template.background)]
    for ex in template.examples:
        history.append(ChatTurn("user", render_query(ex.query)))
        history.append(ChatTurn("assistant", ex.response))
    return history, render_query(task)


def split_single(text: str) -> BetTemplate:
    """Recover the template from :func:`build_single` output."""
    sections = _HEADER_LINE.split(text)
    # sections: [prefix, name1, body1, name2, body2, ...]
    if sections[0] != "" or len(sections) < 5:
        raise ValueError("not a single-parameter BET prompt")
    names = sections[1::2]
    bodies = sections[2::2]
    if names[0] != "Background" or names[-1] != "Task":
        raise ValueError("sections out of order")
    background = bodies[0].strip("\n")
    examples = []
    for n, (name, body) in enumerate(zip(names[1:-1], bodies[1:-1]), start=1):
        if name != f"Example {n}":
            raise ValueError(f"unexpected section {name!r}")
        lines = body.strip("\n").split("\n")
        if not lines[0].startswith(QUERY_PREFIX) or lines[1] != RESPONSE_LABEL:
            raise ValueError(f"malformed example {n}")
        query = ScenePrompt.parse(lines[0][len(QUERY_PREFIX):])
        examples.append(FewShotExample(query, "\n".join(lines[2:])))
    task_lines = bodies[-1].strip("\n").split("\n")
    task = ScenePrompt.parse(task_lines[0][len(QUERY_PREFIX):])
    return BetTemplate(background=background, examples=tuple(examples), task=task)


# --- built-in examples and template files ----------------------------------

DEFAULT_EXAMPLES = (
    FewShotExample(
        ScenePrompt("Noisy", "pedestrian street"),
        "dimensions: (20, 8, 10)\n"
        "scene: pedestrian street\n"
        "microphone: (10, 4, 1.5)\n"
        "speaker: (11, 5, 1.6)\n"
        "noise: type=the chatter of a passing crowd location=(6, 3, 1.6)\n"
        "noise: type=the sound of footsteps on pavement location=(14, 2, 0.2)\n"
        "noise: type=a street musician playing guitar location=(3, 6.5, 1.2)",
    ),
    FewShotExample(
        ScenePrompt("Busy", "cafe"),
        "dimensions: (8, 6, 3)\n"
        "scene: cafe\n"
        "microphone: (4, 3, 1.2)\n"
        "speaker: (4.8, 3.4, 1.3)\n"
        "noise: type=an espresso machine hissing location=(7.2, 1, 1.1)\n"
        "noise: type=cups and plates clinking location=(2, 5, 0.9)",
    ),
    FewShotExample(
        ScenePrompt("Noisy", "balcony"),
        "dimensions: (4, 2.5, 4)\n"
        "scene: balcony\n"
        "microphone: (3.5, 0.5, 1.2)\n"
        "speaker: (2, 1.5, 1.6)\n"
        "noise: type=the sound of footsteps location=(0.5, 0.5, 1.2)\n"
        "noise: type=traffic passing in the street below location=(2, 2.2, 3.6)",
    ),
)


def default_template() -> BetTemplate:
    return BetTemplate(background=DEFAULT_BACKGROUND, examples=DEFAULT_EXAMPLES)


def load_template(path: str | Path) -> BetTemplate:
    """Load a YAML (or JSON) template file.

    Expected keys: ``background`` (optional, defaults to the built-in text),
    ``examples`` (list of ``{query, response}``) and optional ``task``.
    """
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: template must be a mapping")
    examples = tuple(
        FewShotExample(ScenePrompt.parse(item["query"]), item["response"])
        for item in data.get("examples", [])
    )
    task = ScenePrompt.parse(data["task"]) if data.get("task") else None
    return BetTemplate(
        background=data.get("background", DEFAULT_BACKGROUND),
        examples=examples,
        task=task,
    )


def dump_template(template: BetTemplate) -> str:
    data: dict = {
        "background": template.background,
        "examples": [
            {"query": render_query(ex.query), "response": ex.response}
            for ex in template.examples
        ],
    }
    if template.task is not None:
        data["task"] = render_query(template.task)
    return yaml.safe_dump(data, sort_keys=False, allow_unicode=True, width=100)
