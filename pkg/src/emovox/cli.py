"""Command-line entry points.

Verbs: decompose (signal modes to CSV and a figure), extract (corpus
directory to a feature CSV), train (feature CSVs to a model file plus
a split manifest), evaluate (model + features to a confusion matrix),
and pipeline (extract, split, train, and evaluate in one run).

Exit codes: 0 on success, 1 on runtime failures, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from emovox.classifiers import ModelFormatError, load_model, save_model
from emovox.config import ToolkitConfig, load_config
from emovox.dataset import (
    CorpusEntry, IngestError, LabeledCorpus, SplitSpec,
    ingest_crema, ingest_tess, merge_and_split,
)
from emovox.emd import decompose, imf_stats
from emovox.evaluation import (
    MODEL_KINDS, FeatureTable, evaluate, extract_corpus, format_confusion,
    read_feature_csv, train_model, write_confusion_csv, write_feature_csv,
)
from emovox.signal_io import CANONICAL_RATE, WavError, load_wav, resample
from emovox.viz import save_confusion_figure, save_decomposition_figure

logger = logging.getLogger(__name__)


def _load_toolkit_config(args) -> ToolkitConfig:
    """Config file first, then explicit CLI flags on top."""
    cfg = load_config(getattr(args, "config", None))
    source = getattr(args, "source", None)
    if source is not None:
        cfg = replace(cfg, features=replace(cfg.features, source_mode=source))
    split = getattr(args, "split", None)
    if split is not None:
        cfg = replace(cfg, split=replace(cfg.split, train_fraction=split))
    return cfg


def _cmd_decompose(args) -> int:
    cfg = _load_toolkit_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for wav_path in args.files:
        buffer = resample(load_wav(wav_path), CANONICAL_RATE)
        decomp = decompose(buffer, cfg.sift)
        stem = Path(wav_path).stem

        imfs_path = out_dir / f"{stem}_imfs.csv"
        names = [f"imf_{i + 1}" for i in range(decomp.num_imfs)] + ["residual"]
        columns = list(decomp.imfs) + [decomp.residual]
        with open(imfs_path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(names)
            for row in zip(*columns):
                writer.writerow([repr(float(v)) for v in row])

        stats = imf_stats(decomp)
        stats_path = out_dir / f"{stem}_stats.csv"
        with open(stats_path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["component", "rms", "extrema", "zero_crossings"])
            for name, rms, extrema, crossings in stats:
                writer.writerow([name, repr(float(rms)), extrema, crossings])

        figure_path = out_dir / f"{stem}_imfs.png"
        save_decomposition_figure(buffer.samples, decomp,
                                  buffer.sample_rate, figure_path)

        print(f"{wav_path}: {decomp.num_imfs} modes over"
              f" {len(buffer.samples)} samples")
        print(f"{'component':>12} {'rms':>12} {'extrema':>8} {'zero_cross':>10}")
        for name, rms, extrema, crossings in stats:
            print(f"{name:>12} {rms:>12.6g} {extrema:>8d} {crossings:>10d}")
        print(f"wrote {imfs_path}, {stats_path}, {figure_path}")
    return 0


def _ingest(args) -> list:
    corpora = []
    for root in getattr(args, "crema", None) or []:
        corpora.append(ingest_crema(root))
    for root in getattr(args, "tess", None) or []:
        corpora.append(ingest_tess(root))
    return corpora


def _cmd_extract(args) -> int:
    cfg = _load_toolkit_config(args)
    if args.format == "crema":
        corpus = ingest_crema(args.directory)
    else:
        corpus = ingest_tess(args.directory)
    for path, reason in corpus.skipped:
        logger.warning("not ingested %s: %s", path, reason)
    table, skipped = extract_corpus(corpus, cfg.features, cfg.sift,
                                    workers=args.workers)
    write_feature_csv(args.out, table)
    print(f"extracted {len(table)} utterances"
          f" ({len(skipped) + len(corpus.skipped)} skipped) -> {args.out}")
    return 0


def _merge_tables(paths) -> FeatureTable:
    tables = [read_feature_csv(p) for p in paths]
    merged_paths, labels, blocks = [], [], []
    for table in tables:
        merged_paths.extend(table.paths)
        labels.extend(table.labels)
        blocks.append(table.rows)
    if len(set(merged_paths)) != len(merged_paths):
        raise ValueError("duplicate utterance paths across feature files")
    rows = np.vstack(blocks) if blocks else np.zeros((0, 0))
    order = sorted(range(len(merged_paths)), key=lambda i: merged_paths[i])
    return FeatureTable([merged_paths[i] for i in order],
                        [labels[i] for i in order], rows[order])


def _split_table(table: FeatureTable, cfg: ToolkitConfig, seed: int):
    """Seeded per-class split of a feature table; returns (train, test)."""
    corpus = LabeledCorpus([CorpusEntry(p, l, "features")
                            for p, l in zip(table.paths, table.labels)])
    spec = SplitSpec(cfg.split.train_fraction, seed, cfg.split.stratified)
    train_c, test_c = merge_and_split([corpus], spec)
    return (table.restrict_to([e.path for e in train_c.entries]),
            table.restrict_to([e.path for e in test_c.entries]))


def _write_manifest(path, train: FeatureTable, test: FeatureTable) -> None:
    with open(path, "w") as handle:
        for p in train.paths:
            handle.write(f"train\t{p}\n")
        for p in test.paths:
            handle.write(f"test\t{p}\n")


def _read_manifest(path):
    train, test = [], []
    with open(path) as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            part, _, entry_path = line.partition("\t")
            if part not in ("train", "test") or not entry_path:
                raise ValueError(
                    f"{path}: line {line_no}: expected 'train<TAB>path' or"
                    " 'test<TAB>path'")
            (train if part == "train" else test).append(entry_path)
    return train, test


def _cmd_train(args) -> int:
    cfg = _load_toolkit_config(args)
    table = _merge_tables(args.features)
    train_table, test_table = _split_table(table, cfg, args.seed)
    bundle = train_model(args.model, train_table, cfg, args.seed)
    save_model(args.out, bundle)
    manifest_path = f"{args.out}.manifest"
    _write_manifest(manifest_path, train_table, test_table)
    cm = evaluate(bundle, train_table)
    print(f"trained {args.model} on {len(train_table)} rows"
          f" ({len(test_table)} held out)")
    print(f"training accuracy {cm.accuracy:.4f}")
    print(f"wrote {args.out} and {manifest_path}")
    return 0


def _cmd_evaluate(args) -> int:
    bundle = load_model(args.model)
    table = read_feature_csv(args.features)
    if args.manifest:
        train_paths, test_paths = _read_manifest(args.manifest)
        wanted = train_paths if args.subset == "train" else test_paths
        table = table.restrict_to(wanted)
        if len(table) == 0:
            raise ValueError(
                f"no feature rows match the {args.subset} half of"
                f" {args.manifest}")
    cm = evaluate(bundle, table)
    write_confusion_csv(args.out, cm)
    figure_path = Path(args.out).with_suffix(".png")
    save_confusion_figure(cm, figure_path)
    print(f"accuracy {cm.accuracy:.4f}"
          f" ({int(np.trace(cm.counts))}/{cm.total})")
    print(format_confusion(cm))
    print(f"wrote {args.out} and {figure_path}")
    return 0


def _cmd_pipeline(args) -> int:
    cfg = _load_toolkit_config(args)
    corpora = _ingest(args)
    if not corpora:
        raise ValueError("pipeline needs at least one --crema or --tess"
                         " directory")
    merged = LabeledCorpus()
    for corpus in corpora:
        merged.entries.extend(corpus.entries)
        merged.skipped.extend(corpus.skipped)
    for path, reason in merged.skipped:
        logger.warning("not ingested %s: %s", path, reason)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    table, skipped = extract_corpus(merged, cfg.features, cfg.sift,
                                    workers=args.workers)
    if len(table) == 0:
        raise ValueError("no utterances survived feature extraction")
    features_path = out_dir / "features.csv"
    write_feature_csv(features_path, table)

    train_table, test_table = _split_table(table, cfg, args.seed)
    manifest_path = out_dir / "split.manifest"
    _write_manifest(manifest_path, train_table, test_table)

    bundle = train_model(args.model, train_table, cfg, args.seed)
    model_path = out_dir / "model.emvx"
    save_model(model_path, bundle)

    results = []
    for name, part in (("train", train_table), ("test", test_table)):
        if len(part) == 0:
            logger.warning("%s split is empty; skipping its report", name)
            continue
        cm = evaluate(bundle, part)
        write_confusion_csv(out_dir / f"confusion_{name}.csv", cm)
        save_confusion_figure(cm, out_dir / f"confusion_{name}.png")
        results.append((name, cm))

    print(f"extracted {len(table)} utterances"
          f" ({len(skipped) + len(merged.skipped)} skipped)")
    print(f"split {len(train_table)} train / {len(test_table)} test"
          f" (seed {args.seed})")
    for name, cm in results:
        print(f"{name} accuracy {cm.accuracy:.4f}"
              f" ({int(np.trace(cm.counts))}/{cm.total})")
    print(f"outputs in {out_dir}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emovox",
        description="Speech emotion recognition toolkit: adaptive mode"
                    " decomposition, cepstral features, and classical"
                    " classifiers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose",
                       help="split wav files into oscillatory modes")
    p.add_argument("files", nargs="+", help="input wav files")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--config", default=None, help="JSON config file")
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("extract",
                       help="extract a feature CSV from a corpus directory")
    p.add_argument("directory", help="corpus root directory")
    p.add_argument("--format", required=True, choices=("crema", "tess"),
                   help="file naming convention used for labels")
    p.add_argument("--out", required=True, help="output feature CSV")
    p.add_argument("--source", default=None,
                   help="signal source mode: raw, emd_detrend, or imf_sum:N")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel extraction processes")
    p.add_argument("--config", default=None, help="JSON config file")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("train",
                       help="train a classifier from feature CSVs")
    p.add_argument("--features", nargs="+", required=True,
                   help="feature CSV files")
    p.add_argument("--model", required=True, choices=MODEL_KINDS)
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", type=float, default=None,
                   help="training fraction, overrides config")
    p.add_argument("--config", default=None, help="JSON config file")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate",
                       help="score a trained model against feature rows")
    p.add_argument("--model", required=True, help="trained model file")
    p.add_argument("--features", required=True, help="feature CSV")
    p.add_argument("--manifest", default=None,
                   help="split manifest; restricts scoring to one subset")
    p.add_argument("--subset", choices=("train", "test"), default="test",
                   help="manifest subset to score (default test)")
    p.add_argument("--out", default="confusion.csv",
                   help="confusion matrix CSV (figure written alongside)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("pipeline",
                       help="extract, split, train, and evaluate in one run")
    p.add_argument("--crema", action="append", default=[],
                   help="corpus directory with 4-field underscore names")
    p.add_argument("--tess", action="append", default=[],
                   help="corpus directory with word-keyed names")
    p.add_argument("--model", required=True, choices=MODEL_KINDS)
    p.add_argument("--out", default="emovox-run", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", type=float, default=None,
                   help="training fraction, overrides config")
    p.add_argument("--source", default=None,
                   help="signal source mode: raw, emd_detrend, or imf_sum:N")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel extraction processes")
    p.add_argument("--config", default=None, help="JSON config file")
    p.set_defaults(func=_cmd_pipeline)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (WavError, IngestError, ModelFormatError, ValueError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
