"""Per-dimension z-scoring fitted on training rows only."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Normalizer:
    mean: np.ndarray
    std: np.ndarray   # zero-variance dimensions carry std 1

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def normalize_fit(rows: np.ndarray) -> Normalizer:
    """Population mean and standard deviation per dimension; a
    zero-variance dimension gets std 1 so it passes through centered."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError("need a non-empty 2-D matrix of rows")
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return Normalizer(mean, std)


def normalize_apply(norm: Normalizer, rows: np.ndarray) -> np.ndarray:
    """(rows - mean) / std; accepts a single row or a matrix."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape[-1] != norm.dim:
        raise ValueError(
            f"feature dimension {rows.shape[-1]} does not match "
            f"normalizer dimension {norm.dim}"
        )
    return (rows - norm.mean) / norm.std
