"""Command-line entry point: ``judgekit <command> [options]``.

Exit codes: 0 success, 2 bad input, 3 judge-model provider or cache
failure, 4 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import __version__
from ._accel import backend_name
from .assembly import ABLATIONS, FeatureExtractor, FeatureMatrix, Layout
from .data import DatasetError, load_dataset, load_scale, write_dataset, write_scale
from .detection import (
    MetricsReport,
    RunResult,
    bias_report,
    calibrate_tau,
    evaluate_model,
    group_metrics,
    regroup_matrix,
    run_detection,
    score_groups,
)
from .experiments import SweepConfig, run_sweep, sweep_csv
from .linguistic import lexicon_hashes
from .llm import (
    CacheMiss,
    FeatureCache,
    LlmFeatureClient,
    PromptError,
    ProviderConfig,
    ProviderFailure,
    TransportError,
    export_cache,
    import_cache,
)
from .models import ModelFormatError, TrainConfig, TrainingError, dumps_model, fit_model, load_model
from .schema import SCHEMA_VERSION, Block, SchemaError
from .synth import SYNTH_JUDGE_ID, SynthConfig, synth_generate
from .theory import TheoryError

LOGGER = logging.getLogger("judgekit")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PROVIDER = 3
EXIT_INTERNAL = 4

INPUT_ERRORS = (
    DatasetError,
    SchemaError,
    ModelFormatError,
    TrainingError,
    TheoryError,
    PromptError,
    FileNotFoundError,
    IsADirectoryError,
    json.JSONDecodeError,
)
PROVIDER_ERRORS = (CacheMiss, ProviderFailure, TransportError)


class UsageError(ValueError):
    """Invalid combination of command-line options."""


# --------------------------------------------------------------------------
# helpers


def _sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _load_structured(path: str | Path) -> dict:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".yaml", ".yml"):
        import yaml

        return yaml.safe_load(text) or {}
    return json.loads(text)


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def _write(out: Path, name: str, text: str) -> Path:
    path = out / name
    path.write_text(text, encoding="utf-8", newline="")
    return path


def write_manifest(out: Path, args: argparse.Namespace, argv: Sequence[str], outputs: Sequence[Path], seeds=()) -> None:
    inputs = {}
    for flag in ("dataset", "scale", "matrix", "test_matrix", "train_matrix", "model", "config", "cache"):
        value = getattr(args, flag, None)
        if value and Path(value).is_file():
            inputs[flag] = {"path": str(value), "sha256": _sha256_file(value)}
    config_path = getattr(args, "config", None)
    manifest = {
        "tool": "judgekit",
        "version": __version__,
        "command": list(argv),
        "config_hash": _sha256_file(config_path) if config_path and Path(config_path).is_file() else None,
        "inputs": inputs,
        "outputs": {p.name: _sha256_file(p) for p in sorted(outputs)},
        "seeds": [int(s) for s in seeds],
        "schema_version": SCHEMA_VERSION,
        "lexicon_hashes": list(lexicon_hashes()),
        "backend": backend_name(),
        "timestamps": {"created": _timestamp()},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _out_dir(args) -> Path:
    if not args.out:
        raise UsageError("--out is required")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seeds(args, default_count: int = 1) -> list[int]:
    if args.seeds:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    else:
        n = args.repeats if args.repeats else default_count
        seeds = [args.seed + i for i in range(n)]
    if args.repeats and args.repeats != len(seeds):
        raise UsageError(f"--repeats {args.repeats} does not match {len(seeds)} seeds")
    return seeds


def _require(args, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if not getattr(args, n, None)]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join(missing)}")


def _llm_client(args, scale) -> LlmFeatureClient:
    cache = FeatureCache(args.cache) if args.cache else FeatureCache()
    offline = args.offline is not None
    strict = args.offline != "lenient"
    if args.provider_config:
        config = ProviderConfig.load(args.provider_config)
        if args.jobs:
            config = replace(config, max_concurrent=args.jobs)
        return LlmFeatureClient.from_config(config, cache, scale, offline=offline, strict=strict)
    if not offline:
        raise UsageError("judge-model features need --provider-config, or --offline with --cache")
    if not args.model_id:
        raise UsageError("offline replay needs --model-id or a --provider-config naming the model")
    return LlmFeatureClient(cache, scale, model_id=args.model_id, offline=True, strict=strict)


def _ablation_of(schema) -> str:
    blocks = tuple(b for b in (Block.BASE, Block.LLM, Block.LINGUISTIC) if b in schema.blocks)
    for name, layout in ABLATIONS.items():
        if layout == blocks:
            return name
    raise SchemaError("model schema does not correspond to a known ablation")


def _matrix_from_dataset(args, ablation: str) -> FeatureMatrix:
    _require(args, "dataset", "scale")
    scale = load_scale(args.scale)
    dataset = load_dataset(args.dataset, scale)
    if not dataset.groups:
        raise DatasetError(f"{args.dataset}: no groups")
    client = _llm_client(args, scale) if Block.LLM in ABLATIONS[ablation] else None
    return FeatureExtractor(Layout.of(dataset), ablation, client).matrix(dataset)


def _train_config(args) -> TrainConfig:
    raw = _load_structured(args.config) if args.config else {}
    if args.kind:
        raw["kind"] = args.kind
    if args.seed is not None:
        raw["seed"] = args.seed
    return TrainConfig.from_dict(raw)


# --------------------------------------------------------------------------
# commands


def cmd_extract(args, argv) -> int:
    out = _out_dir(args)
    matrix = _matrix_from_dataset(args, args.ablation)
    path = out / "features.csv"
    matrix.to_csv(path)
    write_manifest(out, args, argv, [path])
    print(f"wrote {len(matrix)} rows x {len(matrix.schema)} features to {path}")
    return EXIT_OK


def cmd_train(args, argv) -> int:
    _require(args, "matrix")
    out = _out_dir(args)
    matrix = FeatureMatrix.from_csv(args.matrix)
    cfg = _train_config(args)
    model = fit_model(matrix, cfg, n_jobs=args.jobs or 1)
    if args.tau is not None:
        model = model.with_tau(args.tau)
    elif args.calibrate:
        tau = calibrate_tau(score_groups(model.logits_for(matrix), matrix.group_ids, matrix.labels))
        model = model.with_tau(tau)
    path = _write(out, "model.json", dumps_model(model))
    write_manifest(out, args, argv, [path], [cfg.seed])
    print(f"trained {model.kind} model on {len(matrix)} rows; tau={model.tau:g}; wrote {path}")
    return EXIT_OK


def cmd_detect(args, argv) -> int:
    _require(args, "model")
    out = _out_dir(args)
    model = load_model(args.model)
    if args.matrix:
        matrix = FeatureMatrix.from_csv(args.matrix, model.schema)
    else:
        matrix = _matrix_from_dataset(args, _ablation_of(model.schema))
    if args.k:
        matrix = regroup_matrix(matrix, args.k, args.seed)
    tau = model.tau if args.tau is None else args.tau
    scores = score_groups(model.logits_for(matrix), matrix.group_ids, matrix.labels, tau)
    lines = "".join(json.dumps(s.to_dict(), sort_keys=True) + "\n" for s in scores)
    n_pos = sum(s.prediction for s in scores)
    summary = {"n_groups": len(scores), "predicted_llm": n_pos, "predicted_human": len(scores) - n_pos, "tau": tau}
    if all(s.true_label is not None for s in scores) and len({s.true_label for s in scores}) == 2:
        summary["f1"], summary["auroc"] = group_metrics(scores)
    outputs = [
        _write(out, "group_scores.jsonl", lines),
        _write(out, "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n"),
    ]
    write_manifest(out, args, argv, outputs, [args.seed])
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_evaluate(args, argv) -> int:
    _require(args, "matrix")
    out = _out_dir(args)
    seeds = _seeds(args, default_count=5)
    k = args.k or 4
    if args.train_matrix:
        train = FeatureMatrix.from_csv(args.train_matrix)
        test = FeatureMatrix.from_csv(args.matrix, train.schema)
        tau = args.tau if args.tau is not None else 0.0
        report = run_detection(train, test, _train_config(args), len(seeds), seeds, tau, k, n_jobs=args.jobs or 1)
    else:
        _require(args, "model")
        model = load_model(args.model)
        test = FeatureMatrix.from_csv(args.matrix, model.schema)
        tau = model.tau if args.tau is None else args.tau
        runs = []
        for seed in seeds:
            f1, auc, n = evaluate_model(model, regroup_matrix(test, k, seed), tau)
            runs.append(RunResult(seed, f1, auc, n))
        report = MetricsReport(tuple(runs), tau, k)
    outputs = [
        _write(out, "metrics.json", report.to_json()),
        _write(out, "metrics.csv", report.to_csv()),
        _write(out, "metrics.txt", report.to_text()),
    ]
    write_manifest(out, args, argv, outputs, seeds)
    sys.stdout.write(report.to_text())
    return EXIT_OK


def cmd_bias(args, argv) -> int:
    _require(args, "model")
    out = _out_dir(args)
    model = load_model(args.model)
    report = bias_report(model, args.top_n)
    outputs = [_write(out, "bias.csv", report.to_csv()), _write(out, "bias.txt", report.to_text())]
    write_manifest(out, args, argv, outputs)
    sys.stdout.write(report.to_text())
    return EXIT_OK


def cmd_theory(args, argv) -> int:
    out = _out_dir(args)
    raw = _load_structured(args.config) if args.config else {}
    if args.seeds:
        raw["seeds"] = [int(s) for s in args.seeds.split(",")]
    cfg = SweepConfig.from_dict(raw)
    rows = run_sweep(cfg, progress=LOGGER.info)
    path = _write(out, "sweep.csv", sweep_csv(rows))
    write_manifest(out, args, argv, [path], cfg.seeds)
    beta = rows[0].beta_hat if rows else float("nan")
    print(f"{len(rows)} sweep rows; beta_hat={beta:.6g}; wrote {path}")
    return EXIT_OK


def cmd_synth(args, argv) -> int:
    _require(args, "config")
    out = _out_dir(args)
    raw = _load_structured(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.k:
        raw["k"] = args.k
    cfg = SynthConfig.from_dict(raw)
    result = synth_generate(cfg)
    data_path, scale_path, cache_path = out / "dataset.jsonl", out / "scale.json", out / "cache.jsonl"
    judge_path = out / "judge.json"
    write_dataset(result.dataset, data_path)
    write_scale(result.dataset.scale, scale_path)
    export_cache(result.cache, cache_path)
    # provider config naming the simulated judge, for offline replay of cache.jsonl
    ProviderConfig(endpoint="offline:", model_id=SYNTH_JUDGE_ID).save(judge_path)
    write_manifest(out, args, argv, [data_path, scale_path, cache_path, judge_path], [cfg.seed])
    print(f"wrote {len(result.dataset)} groups ({cfg.n_instances} instances per label) to {data_path}")
    return EXIT_OK


def cmd_cache(args, argv) -> int:
    _require(args, "cache")
    if args.action == "stats":
        cache = FeatureCache(args.cache)
        print(json.dumps({"path": args.cache, "records": len(cache)}))
        return EXIT_OK
    if args.action == "export":
        _require(args, "file")
        n = export_cache(FeatureCache(args.cache), args.file)
        print(f"exported {n} records to {args.file}")
        return EXIT_OK
    _require(args, "file")
    cache = FeatureCache(args.cache)
    before = len(cache)
    import_cache(args.file, into=cache)
    cache.flush()
    print(f"imported {len(cache) - before} new records into {args.cache} ({len(cache)} total)")
    return EXIT_OK


COMMANDS = {
    "extract": cmd_extract,
    "train": cmd_train,
    "detect": cmd_detect,
    "evaluate": cmd_evaluate,
    "bias": cmd_bias,
    "theory": cmd_theory,
    "synth": cmd_synth,
    "cache": cmd_cache,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dataset", help="JSONL dataset of judgment groups")
    common.add_argument("--scale", help="scale file (JSON or YAML)")
    common.add_argument("--matrix", help="feature matrix CSV")
    common.add_argument("--model", help="model file")
    common.add_argument("--provider-config", help="judge-model provider config (JSON)")
    common.add_argument("--cache", help="judge-feature cache (JSONL)")
    common.add_argument("--model-id", help="judge model id for offline cache replay")
    common.add_argument("--offline", choices=("strict", "lenient"), help="never call the provider")
    common.add_argument("--ablation", choices=sorted(ABLATIONS), default="full")
    common.add_argument("--k", type=int, help="group size for regrouping")
    common.add_argument("--tau", type=float, help="logit-space decision threshold")
    common.add_argument("--repeats", type=int, help="number of runs")
    common.add_argument("--seeds", help="comma-separated run seeds")
    common.add_argument("--top-n", type=int, default=20, help="rows in the bias report")
    common.add_argument("--jobs", type=int, help="worker count")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="base seed")
    common.add_argument("--config", help="command config file (JSON or YAML)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="judgekit", description="Detect LLM-produced judgments from scores and text.")
    parser.add_argument("--version", action="version", version=f"judgekit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("extract", parents=[common], help="build a feature matrix from a dataset")
    p = sub.add_parser("train", parents=[common], help="train a classifier on a feature matrix")
    p.add_argument("--kind", choices=("logistic", "forest"))
    p.add_argument("--calibrate", action="store_true", help="pick tau maximizing F1 on the training groups")
    sub.add_parser("detect", parents=[common], help="score judgment groups with a trained model")
    p = sub.add_parser("evaluate", parents=[common], help="F1/AUROC over repeated runs")
    p.add_argument("--train-matrix", help="retrain per seed on this matrix instead of using --model")
    p.add_argument("--kind", choices=("logistic", "forest"))
    sub.add_parser("bias", parents=[common], help="top features of a trained model")
    sub.add_parser("theory", parents=[common], help="detectability sweep over synthetic corpora")
    sub.add_parser("synth", parents=[common], help="generate a synthetic labeled corpus")
    p = sub.add_parser("cache", parents=[common], help="inspect, export or import the judge-feature cache")
    p.add_argument("action", choices=("stats", "export", "import"))
    p.add_argument("file", nargs="?", help="JSONL file to export to or import from")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    if args.command not in ("synth", "train", "evaluate") and args.seed is None:
        args.seed = 0
    if args.command == "evaluate" and args.seed is None and not args.seeds:
        args.seed = 0
    try:
        return COMMANDS[args.command](args, argv)
    except PROVIDER_ERRORS as exc:
        print(f"judgekit: provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (UsageError, ValueError, OSError) + INPUT_ERRORS as exc:
        print(f"judgekit: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - last-resort classification
        LOGGER.debug("internal error", exc_info=True)
        print(f"judgekit: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
