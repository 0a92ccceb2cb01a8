"""Order-independent seed derivation.

Every random draw in the pipeline comes from a generator seeded by a stable
hash of its coordinates (parent seed, utterance index, purpose, ...), so
results do not depend on processing order or worker count.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np


def stable_seed(*parts) -> int:
    payload = json.dumps(parts, separators=(",", ":"), sort_keys=True, default=str)
    digest = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def rng_for(*parts) -> np.random.Generator:
    return np.random.default_rng(stable_seed(*parts))


def stable_key(*parts) -> str:
    payload = json.dumps(parts, separators=(",", ":"), sort_keys=True, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:20]
