import json
import threading
import time

import httpx
import pytest

from conftest import FIG3_RESPONSE, PROSE_RESPONSE
from scenenoise.chat import (
    ChatBackend,
    ChatClient,
    ExhaustedRetries,
    FixtureCorpus,
    fixture_lookup,
    generate_scene_info,
    synthesize_response,
)
from scenenoise.prompt import ScenePrompt, build_single, default_template
from scenenoise.scene import FilterConfig, parse_scene_info, validate
from scenenoise.tta import TransportError

STREET = ScenePrompt("Noisy", "pedestrian street")


def fixture_client(records=None, max_retries=3):
    return ChatClient(ChatBackend(kind="fixture", max_retries=max_retries), FixtureCorpus(records))


def test_fixture_success_first_try():
    client = fixture_client({"Noisy pedestrian street": [FIG3_RESPONSE]})
    outcome = generate_scene_info(STREET, default_template(), client)
    assert outcome.attempts == 1
    assert outcome.rejected == []
    assert outcome.scene == parse_scene_info(FIG3_RESPONSE)


def test_scripted_retry():
    client = fixture_client({"Noisy pedestrian street": [PROSE_RESPONSE, FIG3_RESPONSE]})
    outcome = generate_scene_info(STREET, default_template(), client)
    assert outcome.attempts == 2
    assert len(outcome.rejected) == 1
    assert outcome.rejected[0][0] == PROSE_RESPONSE
    assert outcome.rejected[0][1].response_error


def test_exhausted():
    client = fixture_client({"Noisy pedestrian street": [PROSE_RESPONSE]}, max_retries=3)
    with pytest.raises(ExhaustedRetries) as info:
        generate_scene_info(STREET, default_template(), client)
    assert len(info.value.rejected) == 4


def test_exhausted_by_filter_config():
    # a valid response still fails when the type target is raised
    client = fixture_client({"Noisy pedestrian street": [FIG3_RESPONSE]}, max_retries=0)
    with pytest.raises(ExhaustedRetries) as info:
        generate_scene_info(STREET, default_template(), client, FilterConfig(min_noise_types=5))
    assert len(info.value.rejected) == 1
    assert info.value.rejected[0][1].types_less_than_target


def test_fixture_lookup_deterministic():
    assert fixture_lookup("Noisy cafe", 11) == fixture_lookup("Noisy cafe", 11)
    assert fixture_lookup("Noisy cafe", 11) != fixture_lookup("Noisy cafe", 12)


def test_fixture_lookup_corpus_verbatim():
    corpus = FixtureCorpus({"Noisy balcony": [FIG3_RESPONSE]})
    assert fixture_lookup("Noisy balcony", 0, corpus) == FIG3_RESPONSE


@pytest.mark.parametrize("seed", range(50))
def test_synthetic_response_passes(seed):
    key = ["Noisy balcony", "Busy cafe", "Quiet office", "x y"][seed % 4]
    assert validate(synthesize_response(key, seed)).passed


def test_corpus_file(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(
        json.dumps({"key": "Noisy balcony", "response": PROSE_RESPONSE}) + "\n"
        + json.dumps({"key": "Noisy balcony", "response": FIG3_RESPONSE}) + "\n",
        encoding="utf-8",
    )
    corpus = FixtureCorpus.load(path)
    assert corpus.lookup("Noisy balcony", 0, attempt=0) == PROSE_RESPONSE
    assert corpus.lookup("Noisy balcony", 0, attempt=5) == FIG3_RESPONSE


def test_corpus_file_bad_record(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text('{"key": "a"}\n', encoding="utf-8")
    with pytest.raises(ValueError, match="corpus.jsonl:1"):
        FixtureCorpus.load(path)


def test_pure_function_of_inputs():
    a = generate_scene_info(STREET, default_template(), fixture_client(), seed=9)
    b = generate_scene_info(STREET, default_template(), fixture_client(), seed=9)
    assert a.scene == b.scene and a.scene.raw_text == b.scene.raw_text


# --- HTTP wire format ------------------------------------------------------


class Recorder:
    def __init__(self, replies):
        self.replies = list(replies)
        self.bodies = []
        self.headers = []

    def __call__(self, request: httpx.Request) -> httpx.Response:
        self.bodies.append(json.loads(request.content))
        self.headers.append(request.headers)
        reply = self.replies[min(len(self.bodies) - 1, len(self.replies) - 1)]
        if isinstance(reply, httpx.Response):
            return reply
        return httpx.Response(200, json={"content": reply})


def http_client(kind, recorder, **kw):
    backend = ChatBackend(kind=kind, endpoint="http://chat.test/v1/generate", model_name="m", **kw)
    return ChatClient(backend, http_client=httpx.Client(transport=httpx.MockTransport(recorder)))


def test_http_single_body():
    rec = Recorder([FIG3_RESPONSE])
    client = http_client("http-single", rec, options={"temperature": 0.7})
    outcome = generate_scene_info(STREET, default_template(), client)
    assert outcome.attempts == 1
    assert rec.bodies == [{
        "model": "m",
        "prompt": build_single(default_template().with_task(STREET)),
        "options": {"temperature": 0.7},
    }]


def test_http_dual_body():
    rec = Recorder([FIG3_RESPONSE])
    generate_scene_info(STREET, default_template(), http_client("http-dual", rec))
    body = rec.bodies[0]
    assert body["prompt"] == "Noisy pedestrian street"
    assert len(body["history"]) == 7
    assert body["history"][0] == {"role": "user", "content": default_template().background}
    assert body["history"][2]["role"] == "assistant"


def test_http_retries_same_prompt():
    rec = Recorder([PROSE_RESPONSE, PROSE_RESPONSE, FIG3_RESPONSE])
    outcome = generate_scene_info(STREET, default_template(), http_client("http-single", rec))
    assert outcome.attempts == 3
    assert rec.bodies[0] == rec.bodies[1] == rec.bodies[2]


def test_http_credentials(monkeypatch):
    monkeypatch.setenv("SCENENOISE_API_KEY", "secret")
    rec = Recorder([FIG3_RESPONSE])
    generate_scene_info(STREET, default_template(), http_client("http-single", rec))
    assert rec.headers[0]["authorization"] == "Bearer secret"


@pytest.mark.parametrize(
    "reply",
    [httpx.Response(500, text="boom"), httpx.Response(200, json={"text": "x"}),
     httpx.Response(200, text="not json"), httpx.Response(200, json={"content": 3})],
)
def test_http_bad_replies(reply):
    with pytest.raises(TransportError):
        generate_scene_info(STREET, default_template(), http_client("http-single", Recorder([reply])))


def test_http_network_error():
    def fail(request):
        raise httpx.ConnectTimeout("timed out", request=request)

    with pytest.raises(TransportError):
        generate_scene_info(STREET, default_template(), http_client("http-single", fail))


def test_transport_and_exhaustion_distinguishable():
    assert not issubclass(ExhaustedRetries, TransportError)
    assert not issubclass(TransportError, ExhaustedRetries)


def test_concurrency_bounded():
    active = 0
    peak = 0
    lock = threading.Lock()

    def handler(request):
        nonlocal active, peak
        with lock:
            active += 1
            peak = max(peak, active)
        time.sleep(0.02)
        with lock:
            active -= 1
        return httpx.Response(200, json={"content": FIG3_RESPONSE})

    client = http_client("http-single", handler, max_concurrency=2)
    threads = [threading.Thread(target=generate_scene_info, args=(STREET, default_template(), client))
               for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert 1 <= peak <= 2


@pytest.mark.parametrize("kw", [{"max_retries": -1}, {"timeout": 0}, {"kind": "http-single"}])
def test_backend_invariants(kw):
    with pytest.raises(ValueError):
        ChatBackend(**kw)
