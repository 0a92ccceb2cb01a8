"""Command-line interface.

Every flag has a config-file key of the same name (dashes become
underscores). Precedence: command line, then ``--config`` file, then
built-in defaults. Exit status: 0 success, 1 per-entry failures, 2 usage
or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import yaml

from . import acoustics, augment, chat, prompt, scene, tta
from .audio import read_wav, write_float_wav, write_wav

log = logging.getLogger("scenenoise")

DEFAULTS: dict[str, Any] = {
    # chat
    "backend": "fixture",
    "mode": "single",
    "endpoint": None,
    "model": "",
    "timeout": 60.0,
    "max_retries": 3,
    "max_concurrency": 4,
    "fixture": None,
    "template": None,
    # filter
    "epsilon": 0.1,
    "min_noise_types": 2,
    "inclusive_bounds": False,
    # tta
    "tta_backend": "fixture",
    "tta_endpoint": None,
    "tta_timeout": 120.0,
    "resample": False,
    "bank": ".noise_bank",
    "duration": 5.0,
    "ddim_steps": 200,
    "guidance_scale": 2.5,
    # room
    "rt60": 0.5,
    "absorption": None,
    "max_order": 1,
    "sample_rate": 16000,
    "speed_of_sound": 343.0,
    "environment": "indoor",
    "kernel_taps": 81,
    "kernel_mode": "raised-cosine",
    # augment
    "anr": 0.2,
    "jobs": 1,
    "pool_size": 100,
    "prompts": None,
    "seed": None,
}


class UsageError(Exception):
    pass


# --- argument groups -------------------------------------------------------


def _vec(text: str) -> scene.Vec3:
    try:
        parts = [float(p) for p in text.strip("() ").split(",")]
        return scene.Vec3.of(parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected x,y,z: {exc}") from None


def _add_common(p: argparse.ArgumentParser, seed: bool = False) -> None:
    p.add_argument("--config", type=Path, help="YAML/JSON config file")
    p.add_argument("-v", "--verbose", action="store_true")
    if seed:
        p.add_argument("--seed", type=int, help="random seed (required here or in config)")


def _add_chat(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("chat model")
    g.add_argument("--backend", choices=["fixture", "http"])
    g.add_argument("--mode", choices=["single", "dual"], help="prompt shape for http backends")
    g.add_argument("--endpoint")
    g.add_argument("--model")
    g.add_argument("--timeout", type=float)
    g.add_argument("--max-retries", type=int)
    g.add_argument("--max-concurrency", type=int)
    g.add_argument("--fixture", type=Path, help="JSONL corpus of {key, response}")
    g.add_argument("--template", type=Path, help="BET template file (YAML)")


def _add_filter(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("filter metrics")
    g.add_argument("--epsilon", type=float, help="mic/source overlap distance (m)")
    g.add_argument("--min-noise-types", type=int)
    g.add_argument("--inclusive-bounds", action="store_true", default=None)


def _add_tta(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("text-to-audio")
    g.add_argument("--tta-backend", choices=["fixture", "http"])
    g.add_argument("--tta-endpoint")
    g.add_argument("--tta-timeout", type=float)
    g.add_argument("--resample", action="store_true", default=None)
    g.add_argument("--bank", type=Path, help="noise cache directory")
    g.add_argument("--duration", type=float)
    g.add_argument("--ddim-steps", type=int)
    g.add_argument("--guidance-scale", type=float)
    g.add_argument("--sample-rate", type=int)


def _add_room(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("room")
    g.add_argument("--rt60", type=float)
    g.add_argument("--absorption", type=float, help="overrides --rt60")
    g.add_argument("--max-order", type=int)
    g.add_argument("--speed-of-sound", type=float)
    g.add_argument("--environment", choices=["indoor", "outdoor"])
    g.add_argument("--kernel-taps", type=int)
    g.add_argument("--kernel-mode", choices=["raised-cosine", "windowed-sinc"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scenenoise", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("prompt-build", help="render a BET prompt")
    _add_common(p)
    p.add_argument("--task", required=True, help='e.g. "Noisy balcony"')
    p.add_argument("--template", type=Path)
    p.add_argument("--mode", choices=["single", "dual"])
    p.add_argument("--out", type=Path)

    p = sub.add_parser("scene-generate", help="ask a chat model for scene information")
    _add_common(p, seed=True)
    p.add_argument("--task", required=True)
    _add_chat(p)
    _add_filter(p)
    p.add_argument("--out", type=Path, help="write the canonical scene text here")

    p = sub.add_parser("scene-validate", help="run the four filter metrics on one response")
    _add_common(p)
    p.add_argument("--in", dest="input", required=True, help="response file, or - for stdin")
    _add_filter(p)

    p = sub.add_parser("corpus-metrics", help="filter-metric failure rates over many responses")
    _add_common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--dir", type=Path, help="directory of *.txt responses")
    src.add_argument("--in", dest="input", type=Path, help="JSONL with a 'response' field per line")
    p.add_argument("--format", choices=["table", "json"], default="table")
    _add_filter(p)

    p = sub.add_parser("noise-synthesize", help="obtain noise audio for one noise type")
    _add_common(p, seed=True)
    p.add_argument("--type", dest="noise_type", required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--variants-dir", type=Path, help="also write the five volume variants")
    p.add_argument("--no-cache", action="store_true", help="bypass the noise bank")
    _add_tta(p)

    p = sub.add_parser("rir-compute", help="room impulse response for one source and mic")
    _add_common(p)
    p.add_argument("--room", type=_vec, required=True, help="x,y,z in meters")
    p.add_argument("--source", type=_vec, required=True)
    p.add_argument("--mic", type=_vec, required=True)
    p.add_argument("--sample-rate", type=int)
    p.add_argument("--out", type=Path, help="RIR as 32-bit float WAV")
    p.add_argument("--listing", type=Path, help="text listing of image sources")
    _add_room(p)

    p = sub.add_parser("scene-simulate", help="place speech and noise in a scene")
    _add_common(p, seed=True)
    p.add_argument("--scene", type=Path, required=True, help="scene response file")
    p.add_argument("--speech", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--levels", help="comma-separated volume percents, one per noise source")
    p.add_argument("--geometry", type=Path, help="write scene geometry JSON")
    p.add_argument("--rir-dir", type=Path, help="dump each source's RIR and image listing")
    _add_tta(p)
    _add_room(p)
    _add_filter(p)

    p = sub.add_parser("augment", help="augment a dataset manifest")
    _add_common(p, seed=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--anr", type=float, help="add-noise rate in [0, 1]")
    p.add_argument("--jobs", type=int)
    p.add_argument("--pool-size", type=int)
    p.add_argument("--prompts", help='semicolon-separated, e.g. "Noisy balcony;Busy cafe"')
    _add_chat(p)
    _add_tta(p)
    _add_room(p)
    _add_filter(p)
    return parser


# --- option resolution -----------------------------------------------------


def resolve(args: argparse.Namespace) -> dict[str, Any]:
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = yaml.safe_load(Path(args.config).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError(f"config {args.config} must be a mapping")
        unknown = set(loaded) - set(DEFAULTS) - set(vars(args))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        opts.update(loaded)
    opts.update({k: v for k, v in vars(args).items() if v is not None and k != "config"})
    return opts


def _need_seed(opts: dict[str, Any]) -> int:
    if opts.get("seed") is None:
        raise UsageError("--seed is required (or set 'seed' in the config file)")
    return int(opts["seed"])


def filter_config(opts) -> scene.FilterConfig:
    return scene.FilterConfig(float(opts["epsilon"]), int(opts["min_noise_types"]),
                              bool(opts["inclusive_bounds"]))


def chat_client(opts) -> chat.ChatClient:
    kind = "fixture" if opts["backend"] == "fixture" else f"http-{opts['mode']}"
    backend = chat.ChatBackend(kind=kind, endpoint=opts["endpoint"], model_name=opts["model"],
                               timeout=float(opts["timeout"]), max_retries=int(opts["max_retries"]),
                               max_concurrency=int(opts["max_concurrency"]))
    corpus = chat.FixtureCorpus.load(opts["fixture"]) if opts.get("fixture") else None
    return chat.ChatClient(backend, corpus)


def bet_template(opts) -> prompt.BetTemplate:
    if opts.get("template"):
        return prompt.load_template(opts["template"])
    return prompt.default_template()


def tta_backend(opts) -> tta.TtaBackend:
    return tta.TtaBackend(kind=opts["tta_backend"], endpoint=opts["tta_endpoint"],
                          timeout=float(opts["tta_timeout"]), sample_rate=int(opts["sample_rate"]),
                          resample=bool(opts["resample"]))


def noise_bank(opts) -> tta.NoiseBank:
    return tta.NoiseBank(opts["bank"], tta_backend(opts), duration=float(opts["duration"]),
                         ddim_steps=int(opts["ddim_steps"]), guidance_scale=float(opts["guidance_scale"]))


def kernel_config(opts) -> acoustics.KernelConfig:
    return acoustics.KernelConfig(int(opts["kernel_taps"]), opts["kernel_mode"])


def room_params(opts, seed: int = 0) -> acoustics.RoomParams:
    absorption = opts.get("absorption")
    return acoustics.RoomParams(
        rt60=float(opts["rt60"]),
        absorption=None if absorption is None else float(absorption),
        max_order=int(opts["max_order"]),
        sample_rate=int(opts["sample_rate"]),
        speed_of_sound=float(opts["speed_of_sound"]),
        environment=opts["environment"],
        kernel=kernel_config(opts),
        seed=seed,
    )


def augment_config(opts) -> augment.AugmentConfig:
    prompts = opts.get("prompts")
    if isinstance(prompts, str):
        prompts = [p for p in prompts.split(";") if p.strip()]
    scene_prompts = (tuple(prompt.ScenePrompt.parse(p) for p in prompts)
                     if prompts else augment.DEFAULT_PROMPTS)
    return augment.AugmentConfig(
        anr=float(opts["anr"]), seed=_need_seed(opts), rt60=float(opts["rt60"]),
        absorption=None if opts.get("absorption") is None else float(opts["absorption"]),
        max_order=int(opts["max_order"]), sample_rate=int(opts["sample_rate"]),
        speed_of_sound=float(opts["speed_of_sound"]), environment=opts["environment"],
        scene_prompts=scene_prompts, filter=filter_config(opts), kernel=kernel_config(opts),
        pool_size=int(opts["pool_size"]), jobs=int(opts["jobs"]),
    )


def _emit(obj: Any) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


# --- commands --------------------------------------------------------------


def cmd_prompt_build(opts) -> int:
    template = bet_template(opts).with_task(prompt.ScenePrompt.parse(opts["task"]))
    if opts["mode"] == "dual":
        history, text = prompt.build_dual(template)
        out = json.dumps({"history": [t.to_dict() for t in history], "prompt": text},
                         indent=2, ensure_ascii=False) + "\n"
    else:
        out = prompt.build_single(template)
    if opts.get("out"):
        Path(opts["out"]).write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)
    return 0


def cmd_scene_generate(opts) -> int:
    seed = _need_seed(opts)
    task = prompt.ScenePrompt.parse(opts["task"])
    try:
        outcome = chat.generate_scene_info(task, bet_template(opts), chat_client(opts),
                                           filter_config(opts), seed=seed)
    except chat.ExhaustedRetries as exc:
        _emit({"error": str(exc),
               "rejected": [{"response": t, "report": r.to_dict()} for t, r in exc.rejected]})
        return 1
    if opts.get("out"):
        Path(opts["out"]).write_text(scene.render_scene_info(outcome.scene), encoding="utf-8")
    _emit({
        "scene": outcome.scene.to_dict(),
        "attempts": outcome.attempts,
        "rejected": [{"response": t, "report": r.to_dict()} for t, r in outcome.rejected],
    })
    return 0


def cmd_scene_validate(opts) -> int:
    source = opts["input"]
    text = sys.stdin.read() if source == "-" else Path(source).read_text(encoding="utf-8")
    report, parsed = scene.evaluate(text, filter_config(opts))
    _emit({"report": report.to_dict(), "scene": parsed.to_dict() if parsed else None})
    return 0 if report.passed else 1


def _load_corpus(opts) -> list[str]:
    if opts.get("dir"):
        directory = Path(opts["dir"])
        if not directory.is_dir():
            raise UsageError(f"{directory} is not a directory")
        return [p.read_text(encoding="utf-8") for p in sorted(directory.glob("*.txt"))]
    responses = []
    for line in Path(opts["input"]).read_text(encoding="utf-8").splitlines():
        if line.strip():
            item = json.loads(line)
            responses.append(item["response"] if isinstance(item, dict) else str(item))
    return responses


def corpus_report(responses: Sequence[str], cfg: scene.FilterConfig) -> str:
    return scene.corpus_metrics(responses, cfg).table()


def cmd_corpus_metrics(opts) -> int:
    responses = _load_corpus(opts)
    try:
        metrics = scene.corpus_metrics(responses, filter_config(opts))
    except scene.EmptyCorpus as exc:
        raise UsageError(str(exc)) from None
    if opts["format"] == "json":
        _emit(metrics.to_dict())
    else:
        sys.stdout.write(metrics.table() + "\n")
    return 0


def cmd_noise_synthesize(opts) -> int:
    seed = _need_seed(opts)
    if opts["no_cache"]:
        req = tta.TtaRequest(opts["noise_type"], int(opts["ddim_steps"]), float(opts["guidance_scale"]),
                             float(opts["duration"]), seed)
        clip = tta.synthesize_noise(req, tta_backend(opts))
    else:
        clip = noise_bank(opts).get(opts["noise_type"], seed)
    write_wav(opts["out"], clip)
    written = [str(opts["out"])]
    if opts.get("variants_dir"):
        stem = Path(opts["out"]).stem
        for level, variant in zip(tta.VOLUME_LEVELS, tta.volume_variants(clip)):
            path = Path(opts["variants_dir"]) / f"{stem}_{level:03d}.wav"
            write_wav(path, variant)
            written.append(str(path))
    _emit({"noise_type": opts["noise_type"], "seed": seed, "samples": len(clip),
           "sample_rate": clip.sample_rate, "files": written})
    return 0


def _write_listing(path: Path, rir: acoustics.Rir) -> None:
    lines = ["x\ty\tz\torder\tgain\tdelay_samples"]
    for c in rir.contributions:
        x, y, z = c.location
        lines.append(f"{x:.6g}\t{y:.6g}\t{z:.6g}\t{c.order}\t{c.gain:.9g}\t{c.delay:.6f}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_rir_compute(opts) -> int:
    params = room_params(opts)
    room = params.room_for(opts["room"])
    rir = acoustics.compute_rir(room, opts["source"], opts["mic"], params.kernel)
    if opts.get("out"):
        write_float_wav(opts["out"], rir.taps, rir.sample_rate)
    if opts.get("listing"):
        _write_listing(Path(opts["listing"]), rir)
    _emit({"absorption": room.absorption, "taps": len(rir), "sample_rate": rir.sample_rate,
           "images": rir.listing()})
    return 0


def cmd_scene_simulate(opts) -> int:
    seed = _need_seed(opts)
    report, parsed = scene.evaluate(Path(opts["scene"]).read_text(encoding="utf-8"), filter_config(opts))
    if not report.passed:
        raise UsageError(f"scene fails the filter metrics: {report.to_dict()}")
    speech = read_wav(opts["speech"])
    if speech.sample_rate != int(opts["sample_rate"]):
        raise UsageError(f"speech is {speech.sample_rate} Hz, expected {opts['sample_rate']} Hz")
    cfg = augment_config({**opts, "anr": 1.0})
    levels = None
    if opts.get("levels"):
        levels = [tta.VolumeLevel(int(v)) for v in str(opts["levels"]).split(",")]
    audio, entry = augment.augment_utterance(speech, parsed, noise_bank(opts), cfg, 0, levels)
    write_wav(opts["out"], audio)

    params = room_params(opts)
    if opts.get("geometry"):
        Path(opts["geometry"]).write_text(json.dumps(acoustics.scene_geometry(parsed, params), indent=2),
                                          encoding="utf-8")
    if opts.get("rir_dir"):
        room = params.room_for(parsed.dimensions)
        locations = [("speech", parsed.speaker_location)] + [
            (f"noise{i}", s.location) for i, s in enumerate(parsed.noise_sources)
        ]
        for name, loc in locations:
            rir = acoustics.compute_rir(room, loc, parsed.mic_location, params.kernel)
            write_float_wav(Path(opts["rir_dir"]) / f"{name}.wav", rir.taps, rir.sample_rate)
            _write_listing(Path(opts["rir_dir"]) / f"{name}.tsv", rir)
    _emit({"out": str(opts["out"]), "volume_levels": entry.volume_levels,
           "normalization_gain": entry.normalization_gain})
    return 0


def cmd_augment(opts) -> int:
    cfg = augment_config(opts)
    result = augment.augment_dataset(opts["manifest"], opts["out_dir"], cfg, chat_client(opts),
                                     noise_bank(opts), bet_template(opts))
    summary = {"entries": len(result.entries), "augmented": result.augmented_count,
               "errors": result.error_count, "manifest": str(result.manifest_path)}
    _emit(summary)
    if result.error_count:
        log.error("%d of %d utterances failed", result.error_count, len(result.entries))
        return 1
    return 0


COMMANDS = {
    "prompt-build": cmd_prompt_build,
    "scene-generate": cmd_scene_generate,
    "scene-validate": cmd_scene_validate,
    "corpus-metrics": cmd_corpus_metrics,
    "noise-synthesize": cmd_noise_synthesize,
    "rir-compute": cmd_rir_compute,
    "scene-simulate": cmd_scene_simulate,
    "augment": cmd_augment,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        opts = resolve(args)
        return COMMANDS[args.command](opts)
    except (UsageError, ValueError, OSError) as exc:
        print(f"scenenoise {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except tta.TransportError as exc:
        print(f"scenenoise {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
