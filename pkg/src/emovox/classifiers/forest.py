"""Bootstrap-aggregated decision trees with random feature subspaces.

Each tree is grown greedily on a seeded bootstrap sample: at every node
ceil(sqrt(dim)) candidate dimensions are drawn and the split with the
largest Gini impurity decrease over midpoint thresholds wins. The
forest predicts by majority vote over the trees.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil, sqrt

import numpy as np

_LEAF = -1


@dataclass
class Tree:
    """Flat node arrays; node 0 is the root. feature[i] == -1 marks a
    leaf. counts[i] holds the training class histogram at node i."""

    feature: np.ndarray     # (nodes,) int
    threshold: np.ndarray   # (nodes,) float
    left: np.ndarray        # (nodes,) int child ids, -1 at leaves
    right: np.ndarray
    counts: np.ndarray      # (nodes, n_classes) int


@dataclass
class ForestModel:
    trees: list
    n_classes: int


def _gini_best_split(values: np.ndarray, y: np.ndarray, n_classes: int):
    """Best (threshold, gini_decrease) along one feature, or None when
    every value is identical or no split improves impurity."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    cuts = np.flatnonzero(v[:-1] < v[1:])
    if cuts.size == 0:
        return None
    n = len(y)
    one_hot = np.zeros((n, n_classes))
    one_hot[np.arange(n), y[order]] = 1.0
    prefix = np.cumsum(one_hot, axis=0)
    total = prefix[-1]

    n_left = (cuts + 1).astype(np.float64)
    n_right = n - n_left
    left_counts = prefix[cuts]
    right_counts = total[None, :] - left_counts
    gini_left = 1.0 - np.square(left_counts / n_left[:, None]).sum(axis=1)
    gini_right = 1.0 - np.square(right_counts / n_right[:, None]).sum(axis=1)
    parent = 1.0 - np.square(total / n).sum()
    decrease = parent - (n_left * gini_left + n_right * gini_right) / n

    best = int(np.argmax(decrease))
    if decrease[best] <= 1e-15:
        return None
    cut = cuts[best]
    return 0.5 * (v[cut] + v[cut + 1]), float(decrease[best])


def _grow_tree(x: np.ndarray, y: np.ndarray, n_classes: int,
               max_depth: int | None, rng) -> Tree:
    dim = x.shape[1]
    n_candidates = ceil(sqrt(dim))
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node():
        feature.append(_LEAF)
        threshold.append(0.0)
        left.append(_LEAF)
        right.append(_LEAF)
        counts.append(None)
        return len(feature) - 1

    # stack of (node_id, row_indices, depth); explicit to survive deep trees
    stack = [(new_node(), np.arange(len(y)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        hist = np.bincount(y[rows], minlength=n_classes)
        counts[node] = hist
        pure = np.count_nonzero(hist) <= 1
        depth_capped = max_depth is not None and depth >= max_depth
        if pure or depth_capped or len(rows) < 2:
            continue
        cand = np.sort(rng.choice(dim, size=min(n_candidates, dim),
                                  replace=False))
        best = None
        for feat in cand:
            found = _gini_best_split(x[rows, feat], y[rows], n_classes)
            if found is not None and (best is None or found[1] > best[2]):
                best = (feat, found[0], found[1])
        if best is None:
            continue
        feat, thr, _ = best
        go_left = x[rows, feat] <= thr
        feature[node] = int(feat)
        threshold[node] = float(thr)
        left[node] = new_node()
        right[node] = new_node()
        stack.append((left[node], rows[go_left], depth + 1))
        stack.append((right[node], rows[~go_left], depth + 1))

    return Tree(np.array(feature, dtype=np.int64),
                np.array(threshold, dtype=np.float64),
                np.array(left, dtype=np.int64),
                np.array(right, dtype=np.int64),
                np.vstack(counts).astype(np.int64))


def forest_train(x: np.ndarray, y: np.ndarray, n_classes: int,
                 n_trees: int = 100, max_depth: int | None = 12,
                 seed: int = 0, bootstrap: bool = True) -> ForestModel:
    """Grow a seeded ensemble; tree t uses generator seeded (seed, t).

    max_depth None lifts the depth cap. bootstrap=False fits each tree
    on the rows as-is (diagnostic hook; trees then differ only through
    feature sampling).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.shape[0] == 0 or x.shape[0] != y.shape[0]:
        raise ValueError("rows and labels must align and be non-empty")
    if n_trees < 1:
        raise ValueError("need at least one tree")
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng([seed, t])
        if bootstrap:
            rows = rng.integers(0, len(y), size=len(y))
        else:
            rows = np.arange(len(y))
        trees.append(_grow_tree(x[rows], y[rows], n_classes, max_depth, rng))
    return ForestModel(trees, n_classes)


def _tree_vote(tree: Tree, row: np.ndarray) -> int:
    node = 0
    while tree.feature[node] != _LEAF:
        if row[tree.feature[node]] <= tree.threshold[node]:
            node = tree.left[node]
        else:
            node = tree.right[node]
    # first maximum: lowest class index wins ties
    return int(np.argmax(tree.counts[node]))


def forest_predict(model: ForestModel, rows: np.ndarray) -> np.ndarray:
    """Majority vote over trees; ties go to the lowest class index."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    out = np.empty(rows.shape[0], dtype=np.int64)
    for r in range(rows.shape[0]):
        votes = np.zeros(model.n_classes, dtype=np.int64)
        for tree in model.trees:
            votes[_tree_vote(tree, rows[r])] += 1
        out[r] = int(np.argmax(votes))
    return out
