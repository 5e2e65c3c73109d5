"""Feature tables, corpus-level extraction, training, and scoring.

The feature CSV is the interchange format between pipeline stages:
one row per utterance, columns path,label,f000..f131, floats written
as shortest round-trip decimals, rows ordered by path.
"""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from emovox.classifiers import (
    Kernel, TrainedModel,
    forest_train, knn_train, mlp_train, normalize_apply, normalize_fit,
    predict_rows, svm_train_multiclass,
)
from emovox.config import ToolkitConfig
from emovox.dataset import LabeledCorpus
from emovox.emd import SiftConfig
from emovox.features import (
    UTTERANCE_FEATURE_SIZE, FeatureConfig, extract_utterance,
)
from emovox.labels import sorted_labels
from emovox.signal_io import CANONICAL_RATE, load_wav, resample

logger = logging.getLogger(__name__)

MODEL_KINDS = ("svm", "mlp", "knn", "forest")


@dataclass
class FeatureTable:
    """Utterance feature rows; kept sorted by path."""

    paths: list
    labels: list
    rows: np.ndarray   # (n, 132)

    def __len__(self) -> int:
        return len(self.paths)

    def select(self, indices) -> "FeatureTable":
        indices = list(indices)
        return FeatureTable([self.paths[i] for i in indices],
                            [self.labels[i] for i in indices],
                            self.rows[indices])

    def restrict_to(self, paths) -> "FeatureTable":
        wanted = set(paths)
        return self.select(i for i, p in enumerate(self.paths) if p in wanted)


@dataclass
class ConfusionMatrix:
    """Row = true class, column = predicted class, canonical order."""

    labels: tuple
    counts: np.ndarray   # (L, L) int64

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        total = self.total
        return float(np.trace(self.counts)) / total if total else 0.0


def _extract_one(args):
    path, label, feature_cfg, sift_cfg = args
    buffer = resample(load_wav(path), CANONICAL_RATE)
    feats = extract_utterance(buffer, feature_cfg, sift_cfg)
    return path, label, feats.vector


def extract_corpus(corpus: LabeledCorpus,
                   feature_cfg: FeatureConfig = FeatureConfig(),
                   sift_cfg: SiftConfig = SiftConfig(),
                   workers: int = 1):
    """Feature rows for every corpus entry, sorted by path.

    Files that fail to decode or are too short are skipped and
    reported. Returns (FeatureTable, skipped) where skipped is a list
    of (path, reason). workers > 1 fans file extraction out to a
    process pool; results are re-sorted so the output is identical.
    """
    jobs = [(e.path, e.label, feature_cfg, sift_cfg)
            for e in sorted(corpus.entries, key=lambda e: e.path)]
    done = []
    skipped = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_extract_one_guarded, jobs, chunksize=4)
            for job, (row, reason) in zip(jobs, results):
                if row is None:
                    skipped.append((job[0], reason))
                else:
                    done.append(row)
    else:
        for job in jobs:
            row, reason = _extract_one_guarded(job)
            if row is None:
                skipped.append((job[0], reason))
            else:
                done.append(row)
    done.sort(key=lambda item: item[0])
    for path, reason in skipped:
        logger.warning("skipped %s: %s", path, reason)
    if done:
        matrix = np.vstack([vec for _, _, vec in done])
    else:
        matrix = np.zeros((0, UTTERANCE_FEATURE_SIZE))
    table = FeatureTable([p for p, _, _ in done],
                         [l for _, l, _ in done], matrix)
    return table, skipped


def _extract_one_guarded(args):
    try:
        return _extract_one(args), None
    except Exception as exc:   # per-file isolation: one bad file never
        return None, f"{type(exc).__name__}: {exc}"   # kills the run


def write_feature_csv(path, table: FeatureTable) -> None:
    """path,label,f000..f131 with shortest round-trip float text."""
    dim = table.rows.shape[1] if len(table) else UTTERANCE_FEATURE_SIZE
    header = ["path", "label"] + [f"f{i:03d}" for i in range(dim)]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for i in range(len(table)):
            writer.writerow([table.paths[i], table.labels[i]]
                            + [repr(float(v)) for v in table.rows[i]])


def read_feature_csv(path) -> FeatureTable:
    """Inverse of write_feature_csv; malformed content is reported with
    its line number."""
    paths, labels, rows = [], [], []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if header[:2] != ["path", "label"]:
            raise ValueError(f"{path}: line 1: expected path,label,f000,... header")
        dim = len(header) - 2
        for line_no, record in enumerate(reader, start=2):
            if len(record) != dim + 2:
                raise ValueError(
                    f"{path}: line {line_no}: expected {dim + 2} fields,"
                    f" got {len(record)}")
            try:
                rows.append([float(v) for v in record[2:]])
            except ValueError:
                raise ValueError(
                    f"{path}: line {line_no}: non-numeric feature value"
                ) from None
            paths.append(record[0])
            labels.append(record[1])
    matrix = np.array(rows) if rows else np.zeros((0, dim))
    return FeatureTable(paths, labels, matrix)


def table_from_corpus_labels(corpus: LabeledCorpus, table: FeatureTable):
    """Restrict a table to the paths of a corpus partition."""
    return table.restrict_to([e.path for e in corpus.entries])


def train_model(kind: str, table: FeatureTable,
                cfg: ToolkitConfig = ToolkitConfig(),
                seed: int = 0) -> TrainedModel:
    """Fit the normalizer and one classifier family on a feature table."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; pick from {MODEL_KINDS}")
    if len(table) == 0:
        raise ValueError("cannot train on an empty feature table")
    labels = sorted_labels(table.labels)
    index = {label: i for i, label in enumerate(labels)}
    y = np.array([index[l] for l in table.labels], dtype=np.int64)
    norm = normalize_fit(table.rows)
    x = normalize_apply(norm, table.rows)

    if kind == "svm":
        model = svm_train_multiclass(
            x, y, len(labels),
            Kernel(cfg.svm.kernel, cfg.svm.sigma), cfg.svm.c, seed)
    elif kind == "mlp":
        model = mlp_train(
            x, y, len(labels), hidden=cfg.mlp.hidden, lr=cfg.mlp.lr,
            max_epochs=cfg.mlp.max_epochs, patience=cfg.mlp.patience,
            batch_size=cfg.mlp.batch_size, seed=seed)
    elif kind == "knn":
        model = knn_train(x, y, cfg.knn.k)
    else:
        model = forest_train(x, y, len(labels), n_trees=cfg.forest.n_trees,
                             max_depth=cfg.forest.max_depth, seed=seed)
    return TrainedModel(kind, labels, norm, model)


def evaluate(bundle: TrainedModel, table: FeatureTable) -> ConfusionMatrix:
    """Score a table against a bundle; labels delivered by the table
    must all be classes the bundle knows."""
    if len(table) == 0:
        raise ValueError("cannot evaluate an empty feature table")
    if table.rows.shape[1] != bundle.dim:
        raise ValueError(
            f"table has {table.rows.shape[1]} feature columns, model expects"
            f" {bundle.dim}")
    unknown = set(table.labels) - set(bundle.labels)
    if unknown:
        raise ValueError(f"table contains labels the model never saw:"
                         f" {sorted(unknown)}")
    predicted = predict_rows(bundle, table.rows)
    index = {label: i for i, label in enumerate(bundle.labels)}
    counts = np.zeros((len(bundle.labels), len(bundle.labels)), dtype=np.int64)
    for truth, guess in zip(table.labels, predicted):
        counts[index[truth], index[guess]] += 1
    return ConfusionMatrix(tuple(bundle.labels), counts)


def format_confusion(cm: ConfusionMatrix) -> str:
    """Aligned text table, true classes down, predictions across."""
    width = max(5, max(len(l) for l in cm.labels),
                len(str(int(cm.counts.max(initial=0)))))
    head = "true\\pred".rjust(9)
    lines = [head + "".join(l.rjust(width + 1) for l in cm.labels)]
    for i, label in enumerate(cm.labels):
        cells = "".join(str(int(v)).rjust(width + 1) for v in cm.counts[i])
        lines.append(label.rjust(9) + cells)
    return "\n".join(lines)


def write_confusion_csv(path, cm: ConfusionMatrix) -> None:
    """label,<predicted...> header then one row of counts per true class."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["label"] + list(cm.labels))
        for i, label in enumerate(cm.labels):
            writer.writerow([label] + [int(v) for v in cm.counts[i]])
