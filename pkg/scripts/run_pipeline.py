"""End-to-end offline run: fixture dataset, fixture chat model, fixture text-to-audio.

Runs the augmentation twice into separate directories and reports whether
the outputs match byte for byte.

    python3 scripts/run_pipeline.py --work /tmp/scenenoise_demo --n 5 --seed 7
"""

import argparse
import hashlib
import shutil
import time
from pathlib import Path

from scenenoise.augment import AugmentConfig, augment_dataset
from scenenoise.chat import ChatBackend, ChatClient
from scenenoise.fixtures import write_fixture_dataset
from scenenoise.tta import NoiseBank


def digest(directory):
    return {str(p.relative_to(directory)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(directory.rglob("*")) if p.is_file()}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--work", required=True)
    ap.add_argument("--n", type=int, default=5)
    ap.add_argument("--seconds", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--anr", type=float, default=1.0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    work = Path(args.work)
    shutil.rmtree(work, ignore_errors=True)
    manifest = write_fixture_dataset(work / "data", args.n, args.seconds, seed=args.seed)
    cfg = AugmentConfig(anr=args.anr, seed=args.seed, jobs=args.jobs)
    digests = []
    for run in ("run1", "run2"):
        t0 = time.perf_counter()
        result = augment_dataset(manifest, work / run, cfg, ChatClient(ChatBackend(kind="fixture")),
                                 NoiseBank(work / f"bank_{run}"))
        print(f"{run}: {len(result.entries)} entries, {result.augmented_count} augmented, "
              f"{result.error_count} errors, {time.perf_counter() - t0:.2f} s")
        digests.append(digest(work / run))
    print("identical outputs:", digests[0] == digests[1])
    for entry in result.entries:
        scene = entry.scene
        print(f"  {entry.utterance_id}: {entry.scene_prompt or '-'}"
              + (f", {scene.num_noise_types} noises at levels {entry.volume_levels}" if scene else ""))


if __name__ == "__main__":
    main()
