"""Hyperparameter bundle with JSON overrides.

Every default in the toolkit can be overridden from a JSON config file;
command-line flags override the file in turn. Unknown keys are rejected
so typos fail loudly.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from emovox.emd import SiftConfig
from emovox.features import FeatureConfig


@dataclass
class SvmConfig:
    kernel: str = "rbf"
    c: float = 1.0
    sigma: float | None = None   # None: median-distance heuristic at fit


@dataclass
class MlpConfig:
    hidden: int = 64
    lr: float = 0.05
    max_epochs: int = 200
    patience: int = 10
    batch_size: int = 32


@dataclass
class KnnConfig:
    k: int = 5


@dataclass
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = 12


@dataclass
class SplitConfig:
    train_fraction: float = 0.8
    stratified: bool = True


@dataclass
class ToolkitConfig:
    sift: SiftConfig = field(default_factory=SiftConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    mlp: MlpConfig = field(default_factory=MlpConfig)
    knn: KnnConfig = field(default_factory=KnnConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    split: SplitConfig = field(default_factory=SplitConfig)


_SECTIONS = ("sift", "features", "svm", "mlp", "knn", "forest", "split")


def _merge_section(base, values: dict, section: str):
    known = {f.name for f in dataclasses.fields(base)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(
            f"unknown key(s) {sorted(unknown)} in config section {section!r}"
        )
    return dataclasses.replace(base, **values)


def load_config(path=None) -> ToolkitConfig:
    """Defaults, optionally overridden section by section from JSON."""
    cfg = ToolkitConfig()
    if path is None:
        return cfg
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config root must be a JSON object")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ValueError(f"{path}: unknown config section(s) {sorted(unknown)}")
    for section in _SECTIONS:
        if section in data:
            merged = _merge_section(getattr(cfg, section), data[section],
                                    section)
            setattr(cfg, section, merged)
    return cfg
