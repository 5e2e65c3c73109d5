"""Support vector machines trained by sequential minimal optimization.

Binary soft-margin machines with linear or Gaussian kernels, combined
one-vs-one with majority voting for the multiclass case. Training is
fully deterministic: the second working variable is picked by the
largest error gap rather than at random.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

_KKT_TOL = 1e-3
_MIN_STEP = 1e-8
_SV_EPS = 1e-10


@dataclass
class Kernel:
    """linear: <x, y>. rbf: exp(-|x - y|^2 / (2 sigma^2)); sigma None
    means "pick by the median pairwise distance heuristic at fit time"."""

    kind: str = "rbf"
    sigma: float | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be positive")


def kernel_matrix(kernel: Kernel, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gram matrix K[i, j] = k(a_i, b_j)."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if kernel.kind == "linear":
        return a @ b.T
    if kernel.sigma is None:
        raise ValueError("rbf kernel used before sigma was resolved")
    sq = (np.square(a).sum(axis=1)[:, None]
          + np.square(b).sum(axis=1)[None, :]
          - 2.0 * (a @ b.T))
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * kernel.sigma ** 2))


def median_pairwise_distance(rows: np.ndarray, seed: int = 0,
                             cap: int = 1000) -> float:
    """Median Euclidean distance over a seeded subsample of rows;
    falls back to 1.0 when the median degenerates to zero."""
    rows = np.asarray(rows, dtype=np.float64)
    n = rows.shape[0]
    if n > cap:
        idx = np.random.default_rng(seed).choice(n, size=cap, replace=False)
        rows = rows[np.sort(idx)]
    sq = (np.square(rows).sum(axis=1)[:, None]
          + np.square(rows).sum(axis=1)[None, :]
          - 2.0 * (rows @ rows.T))
    np.maximum(sq, 0.0, out=sq)
    dists = np.sqrt(sq[np.triu_indices(rows.shape[0], k=1)])
    if dists.size == 0:
        return 1.0
    med = float(np.median(dists))
    return med if med > 0.0 else 1.0


@dataclass
class BinarySvm:
    """Trained binary machine; decision f(x) = sum alpha_y K(sv, x) + b."""

    support_vectors: np.ndarray   # (m, dim)
    alpha_y: np.ndarray           # (m,) dual variables times labels
    bias: float
    kernel: Kernel
    c: float


def svm_decision(model: BinarySvm, rows: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if model.support_vectors.shape[0] == 0:
        return np.full(rows.shape[0], model.bias)
    k = kernel_matrix(model.kernel, model.support_vectors, rows)
    return model.alpha_y @ k + model.bias


def svm_train_binary(x: np.ndarray, y: np.ndarray, kernel: Kernel,
                     c: float = 1.0, tol: float = _KKT_TOL,
                     max_passes: int | None = None) -> BinarySvm:
    """Train a soft-margin binary SVM with simplified SMO.

    y must be -1/+1 with both classes present. Full sweeps examine each
    example; a Karush-Kuhn-Tucker violator is paired first with the
    example of largest error gap, then with the remaining examples in
    index order until some pair takes an analytic step. Training stops
    when a sweep changes nothing, which leaves every point within the
    KKT tolerance, or after max_passes sweeps (default 10 n).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    if n < 2 or set(np.unique(y)) != {-1.0, 1.0}:
        raise ValueError("need both -1 and +1 labels")
    if c <= 0:
        raise ValueError("C must be positive")
    if max_passes is None:
        max_passes = 10 * n

    k = kernel_matrix(kernel, x, x)
    diag = np.diag(k).copy()
    alpha = np.zeros(n)
    b = 0.0
    f = np.zeros(n)   # f_i = sum_j alpha_j y_j K_ij + b

    def take_step(i: int, j: int) -> bool:
        nonlocal b, f
        e_i = f[i] - y[i]
        e_j = f[j] - y[j]
        eta = 2.0 * k[i, j] - diag[i] - diag[j]
        if eta >= 0.0:
            return False
        if y[i] == y[j]:
            lo = max(0.0, alpha[i] + alpha[j] - c)
            hi = min(c, alpha[i] + alpha[j])
        else:
            lo = max(0.0, alpha[j] - alpha[i])
            hi = min(c, c + alpha[j] - alpha[i])
        if lo >= hi:
            return False

        aj_new = float(np.clip(alpha[j] - y[j] * (e_i - e_j) / eta, lo, hi))
        d_j = aj_new - alpha[j]
        if abs(d_j) < _MIN_STEP:
            return False
        ai_new = alpha[i] - y[i] * y[j] * d_j
        d_i = ai_new - alpha[i]

        b1 = b - e_i - y[i] * d_i * diag[i] - y[j] * d_j * k[i, j]
        b2 = b - e_j - y[i] * d_i * k[i, j] - y[j] * d_j * diag[j]
        if 0.0 < ai_new < c:
            b_new = b1
        elif 0.0 < aj_new < c:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)

        f += y[i] * d_i * k[:, i] + y[j] * d_j * k[:, j] + (b_new - b)
        alpha[i], alpha[j], b = ai_new, aj_new, b_new
        return True

    for _ in range(max_passes):
        changed = 0
        for i in range(n):
            r = y[i] * (f[i] - y[i])
            if not ((r < -tol and alpha[i] < c) or (r > tol and alpha[i] > 0)):
                continue
            gaps = np.abs((f[i] - y[i]) - (f - y))
            gaps[i] = -1.0
            first = int(np.argmax(gaps))
            if take_step(i, first):
                changed += 1
                continue
            for j in range(n):
                if j != i and j != first and take_step(i, j):
                    changed += 1
                    break
        if changed == 0:
            break

    keep = alpha > _SV_EPS
    return BinarySvm(x[keep].copy(), (alpha * y)[keep], float(b), kernel, c)


def dual_objective(model: BinarySvm) -> float:
    """W(alpha) = sum alpha - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij,
    evaluated over the stored support vectors."""
    ay = model.alpha_y
    if ay.size == 0:
        return 0.0
    k = kernel_matrix(model.kernel, model.support_vectors,
                      model.support_vectors)
    return float(np.abs(ay).sum() - 0.5 * ay @ k @ ay)


@dataclass
class MulticlassSvm:
    """One-vs-one ensemble: one binary machine per class pair."""

    machines: list            # [(class_lo, class_hi, BinarySvm), ...]
    n_classes: int
    kernel: Kernel
    c: float


def svm_train_multiclass(x: np.ndarray, y: np.ndarray, n_classes: int,
                         kernel: Kernel = Kernel(), c: float = 1.0,
                         seed: int = 0) -> MulticlassSvm:
    """Train one binary machine per ordered class pair.

    y holds class indices 0..n_classes-1 (index order is the canonical
    label order). An absent class is logged and skipped; it can never
    be predicted. An unresolved rbf sigma is set once from the median
    pairwise distance over all training rows and shared by every pair.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if kernel.kind == "rbf" and kernel.sigma is None:
        kernel = Kernel("rbf", median_pairwise_distance(x, seed))
    present = set(np.unique(y).tolist())
    for missing in sorted(set(range(n_classes)) - present):
        logger.warning("class %d absent from training data; it will never "
                       "be predicted", missing)
    machines = []
    for lo in range(n_classes):
        for hi in range(lo + 1, n_classes):
            if lo not in present or hi not in present:
                continue
            mask = (y == lo) | (y == hi)
            y_bin = np.where(y[mask] == hi, 1.0, -1.0)
            machines.append(
                (lo, hi, svm_train_binary(x[mask], y_bin, kernel, c)))
    if not machines:
        raise ValueError("need at least two classes with training rows")
    return MulticlassSvm(machines, n_classes, kernel, c)


def svm_predict(model: MulticlassSvm, rows: np.ndarray) -> np.ndarray:
    """Majority vote over the pair machines.

    Vote ties go to the larger summed |decision value| across the
    machines the class won; remaining ties to the lowest class index.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    n = rows.shape[0]
    votes = np.zeros((n, model.n_classes), dtype=np.int64)
    conf = np.zeros((n, model.n_classes))
    for lo, hi, machine in model.machines:
        values = svm_decision(machine, rows)
        winner = np.where(values > 0.0, hi, lo)
        for cls in (lo, hi):
            hit = winner == cls
            votes[hit, cls] += 1
            conf[hit, cls] += np.abs(values[hit])
    out = np.empty(n, dtype=np.int64)
    for r in range(n):
        cand = np.flatnonzero(votes[r] == votes[r].max())
        # np.argmax keeps the first maximum, i.e. the lowest class index
        out[r] = cand[np.argmax(conf[r, cand])]
    return out
