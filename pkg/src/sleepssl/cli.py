"""Command-line front end.

Subcommands: ingest, synth, pretrain, linear-eval, finetune, limited,
export-embeddings. Exit codes: 0 success, 2 config error, 3 data error,
4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import checkpoint, dataset_cache, edf, hypnogram, training
from .config import RunConfig
from .epochs import EpochDataset, extract_epochs
from .errors import ConfigError, DataError, NumericError, SleepSslError
from .synth import make_synthetic_dataset

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _write_text_atomic(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def _load_run(args) -> tuple[RunConfig, Path]:
    overrides = {}
    if args.seed is not None:
        overrides["train.seed"] = args.seed
    cfg = RunConfig.load(args.config, overrides)
    out_dir = Path(args.out)
    cfg.write_resolved(out_dir)
    return cfg, out_dir


def _load_cache(cfg: RunConfig) -> EpochDataset:
    path = cfg["data.cache"]
    if path is None:
        raise ConfigError("data.cache is not set")
    if not Path(path).exists():
        raise DataError(f"dataset cache not found: {path}")
    return dataset_cache.load_dataset(path)


def cmd_ingest(args) -> int:
    if len(args.hypnogram) != len(args.edf):
        raise ConfigError(
            f"{len(args.edf)} EDF files but {len(args.hypnogram)} hypnograms"
        )
    merged: list = []
    provenance: list[str] = []
    for edf_path, hyp_path in zip(args.edf, args.hypnogram):
        for p in (edf_path, hyp_path):
            if not Path(p).exists():
                raise DataError(f"file not found: {p}")
        try:
            header, signals = edf.parse_edf(Path(edf_path).read_bytes())
            if hyp_path.lower().endswith((".edf", ".rec")):
                entries = hypnogram.parse_hypnogram(
                    edf.read_annotation_bytes(Path(hyp_path).read_bytes())
                )
            else:
                entries = hypnogram.parse_hypnogram(
                    Path(hyp_path).read_text(encoding="utf-8")
                )
            dataset = extract_epochs(
                header, signals, entries, args.channel,
                epoch_seconds=args.epoch_seconds, source_name=Path(edf_path).stem,
            )
        except DataError as exc:
            raise DataError(f"{edf_path}: {exc}") from exc
        merged.extend(dataset.epochs)
        provenance.extend(dataset.provenance)
    combined = EpochDataset(merged, provenance=provenance)
    dataset_cache.save_dataset(combined, args.out_cache)
    histogram = {label.name: n for label, n in combined.class_histogram.items()}
    print(f"wrote {len(combined)} epochs to {args.out_cache}")
    print(f"class histogram: {json.dumps(histogram)}")
    return 0


def cmd_synth(args) -> int:
    dataset = make_synthetic_dataset(
        classes=args.classes, per_class=args.per_class, seed=args.seed or 0,
        noise_sigma=args.noise_sigma,
    )
    dataset_cache.save_dataset(dataset, args.out_cache)
    histogram = {label.name: n for label, n in dataset.class_histogram.items()}
    print(f"wrote {len(dataset)} synthetic epochs to {args.out_cache}")
    print(f"class histogram: {json.dumps(histogram)}")
    return 0


def cmd_pretrain(args) -> int:
    cfg, out_dir = _load_run(args)
    dataset = _load_cache(cfg)
    log_lines: list[str] = []

    def log(line: str) -> None:
        log_lines.append(line)
        print(line)

    model, _ = training.pretrain(cfg.train_config(), dataset, cfg.model_config(), log=log)
    checkpoint.save_checkpoint(model, out_dir / "checkpoint.bin")
    _write_text_atomic(out_dir / "train.log", "\n".join(log_lines) + "\n")
    print(f"checkpoint written to {out_dir / 'checkpoint.bin'}")
    return 0


def _load_model_for_eval(cfg: RunConfig, args):
    path = Path(args.checkpoint)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    return checkpoint.load_checkpoint(path)


def cmd_linear_eval(args) -> int:
    return _eval_command(args, training.linear_eval, "metrics_linear_eval.json")


def cmd_finetune(args) -> int:
    return _eval_command(args, training.finetune, "metrics_finetune.json")


def _eval_command(args, protocol, out_name: str) -> int:
    cfg, out_dir = _load_run(args)
    dataset = _load_cache(cfg)
    model = _load_model_for_eval(cfg, args)
    log_lines: list[str] = []
    report = protocol(model, dataset, cfg.split_spec(), cfg.train_config(),
                      log=log_lines.append)
    _write_text_atomic(out_dir / "train.log", "\n".join(log_lines) + "\n")
    _write_text_atomic(out_dir / out_name, report.to_json() + "\n")
    print(report.to_json())
    return 0


def cmd_limited(args) -> int:
    cfg, out_dir = _load_run(args)
    dataset = _load_cache(cfg)
    model = _load_model_for_eval(cfg, args)
    results = {}
    for k in args.k:
        stats = training.limited_sample_experiment(
            model, dataset, k, args.reps, cfg.train_config(), cfg.split_spec(),
            log=print,
        )
        results[str(k)] = {
            arm: {
                "mean_accuracy": s.mean_accuracy,
                "std_accuracy": s.std_accuracy,
                "mean_macro_f1": s.mean_macro_f1,
                "std_macro_f1": s.std_macro_f1,
                "repetitions": len(s.accuracies),
            }
            for arm, s in stats.items()
        }
    text = json.dumps(results, indent=2)
    _write_text_atomic(out_dir / "limited_sample_stats.json", text + "\n")
    print(text)
    return 0


def cmd_export_embeddings(args) -> int:
    cfg, out_dir = _load_run(args)
    dataset = _load_cache(cfg)
    model = _load_model_for_eval(cfg, args)
    out_path = out_dir / "embeddings.tsv"
    training.export_embeddings(model, dataset, out_path)
    print(f"wrote embeddings for {len(dataset)} epochs to {out_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sleepssl",
        description="Self-supervised contrastive learning for EEG sleep staging",
    )
    parser.add_argument("--config", default=None, help="path to a key = value config file")
    parser.add_argument("--seed", type=int, default=None, help="override train.seed")
    parser.add_argument("--out", default="run", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse EDF recordings into an epoch cache")
    p.add_argument("--edf", nargs="+", required=True)
    p.add_argument("--hypnogram", nargs="+", required=True)
    p.add_argument("--channel", default="EEG Fpz-Cz")
    p.add_argument("--epoch-seconds", type=float, default=30.0)
    p.add_argument("--out-cache", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic labeled epoch cache")
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--per-class", type=int, default=200)
    p.add_argument("--noise-sigma", type=float, default=1.0)
    p.add_argument("--out-cache", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pretrain", help="contrastive pretraining on a cache")
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("linear-eval", help="frozen-backbone classifier evaluation")
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_linear_eval)

    p = sub.add_parser("finetune", help="supervised fine-tuning from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("limited", help="limited-labeled-sample two-arm experiment")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--k", type=int, nargs="+", required=True)
    p.add_argument("--reps", type=int, default=5)
    p.set_defaults(func=cmd_limited)

    p = sub.add_parser("export-embeddings", help="write eval-mode embeddings as TSV")
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_export_embeddings)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SleepSslError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
