"""Corpus ingestion and the stratified train/test split.

Both supported corpora encode the emotion in the file name. The split
is deterministic given a seed regardless of filesystem enumeration
order: entries are sorted by path, then shuffled per class by a seeded
generator.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import ceil
from pathlib import Path

import numpy as np

from emovox.labels import label_sort_key

logger = logging.getLogger(__name__)

# ActorID_SentenceID_EmotionCode_Level.wav; this corpus has no PS class
CREMA_CODES = {
    "ANG": "ANG", "DIS": "DIS", "FEA": "FEA",
    "HAP": "HAP", "NEU": "NEU", "SAD": "SAD",
}

# Speaker_Word_emotion.wav, emotion word is case-insensitive
TESS_WORDS = {
    "angry": "ANG",
    "disgust": "DIS",
    "fear": "FEA",
    "happy": "HAP",
    "neutral": "NEU",
    "ps": "PS",
    "pleasant_surprise": "PS",
    "pleasant_surprised": "PS",
    "sad": "SAD",
}


class IngestError(Exception):
    """Corpus directory is unusable (no WAV files, or none parseable)."""


@dataclass
class CorpusEntry:
    path: str
    label: str
    corpus: str


@dataclass
class LabeledCorpus:
    entries: list = field(default_factory=list)
    skipped: list = field(default_factory=list)   # (path, reason)

    @property
    def counts(self) -> dict:
        out = {}
        for entry in self.entries:
            out[entry.label] = out.get(entry.label, 0) + 1
        return out

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError("train_fraction must be in (0, 1)")


def _wav_files(root) -> list:
    root = Path(root)
    if not root.is_dir():
        raise IngestError(f"{root}: not a directory")
    files = sorted(p for p in root.rglob("*.wav") if p.is_file())
    if not files:
        raise IngestError(f"{root}: no .wav files found")
    return files


def ingest_crema(root) -> LabeledCorpus:
    """Scan a directory of ActorID_SentenceID_EmotionCode_Level.wav
    files; unparseable names are reported in `skipped`, not fatal."""
    corpus = LabeledCorpus()
    for path in _wav_files(root):
        parts = path.stem.split("_")
        if len(parts) != 4:
            corpus.skipped.append((str(path), "expected 4 underscore fields"))
            continue
        code = parts[2]
        if code not in CREMA_CODES:
            corpus.skipped.append((str(path), f"unknown emotion code {code!r}"))
            continue
        corpus.entries.append(CorpusEntry(str(path), CREMA_CODES[code], "crema"))
    if not corpus.entries:
        raise IngestError(f"{root}: no parseable corpus files")
    return corpus


def ingest_tess(root) -> LabeledCorpus:
    """Scan a directory tree of Speaker_Word_emotion.wav files; the
    emotion word may itself contain underscores (pleasant_surprise)."""
    corpus = LabeledCorpus()
    for path in _wav_files(root):
        parts = path.stem.split("_", 2)
        if len(parts) != 3:
            corpus.skipped.append((str(path), "expected 3 underscore fields"))
            continue
        word = parts[2].lower()
        if word not in TESS_WORDS:
            corpus.skipped.append((str(path), f"unknown emotion word {word!r}"))
            continue
        corpus.entries.append(CorpusEntry(str(path), TESS_WORDS[word], "tess"))
    if not corpus.entries:
        raise IngestError(f"{root}: no parseable corpus files")
    return corpus


def merge_and_split(corpora, spec: SplitSpec = SplitSpec()):
    """Merge corpora and split per class into train/test.

    Entries are sorted by path, shuffled within each class by one
    seeded generator (classes visited in canonical label order), and
    the first ceil(train_fraction * n) of each class go to training.
    Single-entry classes go entirely to training with a warning.
    Duplicate paths across corpora are an error.

    Returns (train, test) as LabeledCorpus objects.
    """
    entries = []
    for corpus in corpora:
        entries.extend(corpus.entries)
    seen = set()
    for entry in entries:
        if entry.path in seen:
            raise ValueError(f"duplicate corpus path {entry.path}")
        seen.add(entry.path)
    entries.sort(key=lambda e: e.path)

    rng = np.random.default_rng(spec.seed)
    train, test = LabeledCorpus(), LabeledCorpus()

    if not spec.stratified:
        order = rng.permutation(len(entries))
        k = ceil(spec.train_fraction * len(entries))
        for rank, idx in enumerate(order):
            (train if rank < k else test).entries.append(entries[idx])
        return train, test

    by_label = {}
    for entry in entries:
        by_label.setdefault(entry.label, []).append(entry)
    for label in sorted(by_label, key=label_sort_key):
        group = by_label[label]
        if len(group) == 1:
            logger.warning("class %s has a single file; assigning it to "
                           "training", label)
            train.entries.append(group[0])
            continue
        order = rng.permutation(len(group))
        k = ceil(spec.train_fraction * len(group))
        for rank, idx in enumerate(order):
            (train if rank < k else test).entries.append(group[idx])
    return train, test
