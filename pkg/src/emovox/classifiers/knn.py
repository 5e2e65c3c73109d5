"""Distance-weighted k-nearest-neighbor classification."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class KnnModel:
    points: np.ndarray   # (n, dim) normalized training rows
    labels: np.ndarray   # (n,) class indices
    k: int

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.points.shape[0] != self.labels.shape[0]:
            raise ValueError("points and labels must align")
        if not (1 <= self.k <= self.points.shape[0]):
            raise ValueError("need 1 <= k <= number of stored points")


def knn_train(x: np.ndarray, y: np.ndarray, k: int = 5) -> KnnModel:
    return KnnModel(np.asarray(x, dtype=np.float64).copy(),
                    np.asarray(y, dtype=np.int64).copy(), k)


def _vote(counts_or_scores: np.ndarray) -> int:
    # np.argmax keeps the first maximum: lowest class index wins ties
    return int(np.argmax(counts_or_scores))


def knn_predict(model: KnnModel, rows: np.ndarray,
                weighted: bool = True) -> np.ndarray:
    """Classify rows by their k nearest stored points.

    Euclidean distance; ties on distance keep the lower stored-row
    index. Scores are 1/d per neighbor, except that any zero-distance
    neighbor switches the rule to an unweighted majority among the
    zero-distance neighbors only. `weighted=False` uses a plain
    majority over the k neighbors throughout.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    n_classes = int(model.labels.max()) + 1 if model.labels.size else 1
    out = np.empty(rows.shape[0], dtype=np.int64)
    for r in range(rows.shape[0]):
        d = np.sqrt(np.square(model.points - rows[r]).sum(axis=1))
        # stable sort keeps lower row index first on equal distance
        nearest = np.argsort(d, kind="stable")[:model.k]
        nd = d[nearest]
        nl = model.labels[nearest]
        scores = np.zeros(n_classes)
        if not weighted:
            np.add.at(scores, nl, 1.0)
        elif np.any(nd == 0.0):
            np.add.at(scores, nl[nd == 0.0], 1.0)
        else:
            np.add.at(scores, nl, 1.0 / nd)
        out[r] = _vote(scores)
    return out
