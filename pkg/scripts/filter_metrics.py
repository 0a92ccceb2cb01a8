"""Generate scene responses for a list of prompts and tabulate filter-metric failures.

With the default fixture backend every response is well formed, so the
table is all zeros; point ``--fixture`` at a JSONL corpus of recorded model
outputs ({key, response} per line) or use ``--backend http`` to measure a
real model.

    python3 scripts/filter_metrics.py --per-prompt 20 --seed 0
"""

import argparse
import json

from scenenoise import cli
from scenenoise.augment import DEFAULT_PROMPTS
from scenenoise.prompt import render_query
from scenenoise.scene import corpus_metrics


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--per-prompt", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--backend", default="fixture", choices=["fixture", "http"])
    ap.add_argument("--mode", default="single", choices=["single", "dual"])
    ap.add_argument("--endpoint")
    ap.add_argument("--model", default="")
    ap.add_argument("--fixture")
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    opts = {**cli.DEFAULTS, "backend": args.backend, "mode": args.mode, "endpoint": args.endpoint,
            "model": args.model, "fixture": args.fixture}
    client = cli.chat_client(opts)
    base = cli.bet_template(opts)
    responses = []
    for task in DEFAULT_PROMPTS:
        template = base.with_task(task)
        for k in range(args.per_prompt):
            # one raw draw per request; no retries, so failures are counted
            responses.append(client.complete(template, seed=args.seed * 1_000_003 + k))
    metrics = corpus_metrics(responses)
    if args.json:
        print(json.dumps(metrics.to_dict(), indent=2))
    else:
        print("prompts:", ", ".join(render_query(p) for p in DEFAULT_PROMPTS))
        print(metrics.table())


if __name__ == "__main__":
    main()
