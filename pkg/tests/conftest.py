import numpy as np
import pytest

from scenenoise.fixtures import write_fixture_dataset
from scenenoise.scene import NoiseSource, SceneInfo, Vec3, render_scene_info

# Balcony scene from the worked example: room, mic, speaker, footsteps; a
# second noise source is added so the scene meets the two-type target.
FIG3_RESPONSE = """\
dimensions: (4, 2.5, 4)
scene: balcony
（场景：阳台）
microphone: (3.5, 0.5, 1.2)
speaker: (2, 1.5, 1.6)
noise: type=the sound of footsteps location=(0.5, 0.5, 1.2)
（噪声：脚步声）
noise: type=traffic passing in the street below location=(2, 2.2, 3.6)
"""

FIG3_SINGLE_NOISE = """\
dimensions: (4, 2.5, 4)
scene: balcony
microphone: (3.5, 0.5, 1.2)
speaker: (2, 1.5, 1.6)
noise: type=the sound of footsteps location=(0.5, 0.5, 1.2)
"""

PROSE_RESPONSE = (
    "A noisy balcony is usually full of city sounds: cars, people talking and "
    "birds. The speaker might stand near the railing while someone walks by."
)


@pytest.fixture
def fig3_text():
    return FIG3_RESPONSE


@pytest.fixture
def fig3_scene():
    from scenenoise.scene import parse_scene_info

    return parse_scene_info(FIG3_RESPONSE)


def _scene(mic, speaker, noises, dims=(5, 4, 3)):
    return render_scene_info(
        SceneInfo(
            dimensions=Vec3.of(dims),
            scene_type="room",
            mic_location=Vec3.of(mic),
            speaker_location=Vec3.of(speaker),
            noise_sources=tuple(NoiseSource(t, Vec3.of(p)) for t, p in noises),
        )
    )


def engineered_corpus():
    """40 responses: 4 unparseable, 2 mic overlaps, 8 out of bounds, none under target."""
    two = [("fan hum", (1, 1, 1)), ("door knock", (4, 3, 2))]
    rng = np.random.default_rng(7)
    responses = []
    unparseable = [
        "",
        PROSE_RESPONSE,
        "dimensions: (5, 4, 3)\nspeaker: (1, 2, 1)\nnoise: type=fan location=(1, 1, 1)",  # no mic
        "dimensions: (5, 4)\nmicrophone: (2, 2, 1)\nspeaker: (1, 2, 1)",  # malformed tuple
    ]
    responses += unparseable
    responses.append(_scene((1, 1, 1), (3, 2, 1), two))  # mic on the fan
    responses.append(_scene((3.05, 2, 1), (3, 2, 1), two))  # 0.05 m from speaker
    out_of_bounds = [
        _scene((2, 2, 1), (6, 2, 1), two),
        _scene((2, 2, 1), (3, 2, 1), [("fan hum", (1, 5, 1)), ("door knock", (4, 3, 2))]),
        _scene((2, 2, 3.5), (3, 2, 1), two),
        _scene((2, 2, 1), (3, 2, 1), [("fan hum", (-1, 1, 1)), ("door knock", (4, 3, 2))]),
        _scene((5, 2, 1), (3, 2, 1), two),  # on the wall: strict bounds
        _scene((2, 2, 1), (3, 0, 1), two),
        _scene((2, 2, 1), (3, 2, 1), [("fan hum", (1, 1, 1)), ("door knock", (4, 3, 3))]),
        _scene((2, 2, 1), (3, 2, 9), two),
    ]
    responses += out_of_bounds
    while len(responses) < 40:
        mic = rng.uniform(1.5, 2.5, 3).round(2)
        responses.append(_scene(tuple(mic), (4, 1, 1), two))
    return responses



def make_dataset(root, n=5, seconds=0.5, sample_rate=16000, seed=0):
    return write_fixture_dataset(root, n, seconds, sample_rate, seed)
