"""Single-hidden-layer network with ReLU and softmax output.

Trained by mini-batch gradient descent on the summed cross-entropy,
with a stratified validation holdout and early stopping; the returned
parameters are the snapshot with the best validation loss.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

_LOG_FLOOR = 1e-12


@dataclass
class MlpModel:
    w1: np.ndarray   # (dim, hidden)
    b1: np.ndarray   # (hidden,)
    w2: np.ndarray   # (hidden, n_classes)
    b2: np.ndarray   # (n_classes,)

    @property
    def dim(self) -> int:
        return self.w1.shape[0]

    @property
    def n_classes(self) -> int:
        return self.w2.shape[1]

    def copy(self) -> "MlpModel":
        return MlpModel(self.w1.copy(), self.b1.copy(),
                        self.w2.copy(), self.b2.copy())


def mlp_init(dim: int, hidden: int, n_classes: int, rng) -> MlpModel:
    """Uniform init in +-sqrt(6 / (fan_in + fan_out)); zero biases."""
    lim1 = np.sqrt(6.0 / (dim + hidden))
    lim2 = np.sqrt(6.0 / (hidden + n_classes))
    return MlpModel(
        rng.uniform(-lim1, lim1, size=(dim, hidden)),
        np.zeros(hidden),
        rng.uniform(-lim2, lim2, size=(hidden, n_classes)),
        np.zeros(n_classes),
    )


def mlp_forward(model: MlpModel, rows: np.ndarray) -> np.ndarray:
    """Class probabilities, one row per input row."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    hidden = np.maximum(0.0, rows @ model.w1 + model.b1)
    logits = hidden @ model.w2 + model.b2
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=1, keepdims=True)


def mlp_loss(model: MlpModel, rows: np.ndarray, targets: np.ndarray) -> float:
    """Cross-entropy summed over the batch, with probabilities floored
    at 1e-12 inside the log."""
    probs = mlp_forward(model, rows)
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    return float(-(targets * np.log(np.maximum(probs, _LOG_FLOOR))).sum())


def mlp_loss_and_grad(model: MlpModel, rows: np.ndarray,
                      targets: np.ndarray):
    """Batch loss plus analytic gradients (d_w1, d_b1, d_w2, d_b2)."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    hidden = np.maximum(0.0, rows @ model.w1 + model.b1)
    logits = hidden @ model.w2 + model.b2
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    probs = e / e.sum(axis=1, keepdims=True)
    loss = float(-(targets * np.log(np.maximum(probs, _LOG_FLOOR))).sum())

    d_logits = probs - targets
    d_w2 = hidden.T @ d_logits
    d_b2 = d_logits.sum(axis=0)
    d_hidden = (d_logits @ model.w2.T) * (hidden > 0.0)
    d_w1 = rows.T @ d_hidden
    d_b1 = d_hidden.sum(axis=0)
    return loss, (d_w1, d_b1, d_w2, d_b2)


def _one_hot(y: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((len(y), n_classes))
    out[np.arange(len(y)), y] = 1.0
    return out


def _stratified_holdout(y: np.ndarray, fraction: float, rng):
    """Per class, hold out max(1, round(fraction * count)) rows; classes
    with fewer than 2 rows stay in training entirely."""
    train_idx, val_idx = [], []
    for cls in np.unique(y):
        rows = np.flatnonzero(y == cls)
        if len(rows) < 2:
            logger.warning("class %d has %d row(s); kept out of the "
                           "validation holdout", int(cls), len(rows))
            train_idx.append(rows)
            continue
        rows = rows[rng.permutation(len(rows))]
        k = max(1, int(round(fraction * len(rows))))
        val_idx.append(rows[:k])
        train_idx.append(rows[k:])
    train = np.sort(np.concatenate(train_idx)) if train_idx else np.array([], dtype=np.int64)
    val = np.sort(np.concatenate(val_idx)) if val_idx else np.array([], dtype=np.int64)
    return train, val


def mlp_train(x: np.ndarray, y: np.ndarray, n_classes: int,
              hidden: int = 64, lr: float = 0.05, max_epochs: int = 200,
              patience: int = 10, batch_size: int = 32, seed: int = 0,
              val_fraction: float = 0.1) -> MlpModel:
    """Train with mini-batch gradient descent and early stopping.

    Updates use the batch-mean gradient of the summed cross-entropy.
    Validation loss is checked each epoch; after `patience` epochs
    without strict improvement training stops and the best-validation
    snapshot is returned. With no validation rows available the final
    parameters are returned instead.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.shape[0] != y.shape[0] or x.shape[0] == 0:
        raise ValueError("rows and labels must align and be non-empty")
    rng = np.random.default_rng(seed)
    model = mlp_init(x.shape[1], hidden, n_classes, rng)
    if lr == 0.0 or max_epochs == 0:
        return model

    train_idx, val_idx = _stratified_holdout(y, val_fraction, rng)
    x_tr, y_tr = x[train_idx], _one_hot(y[train_idx], n_classes)
    x_val, y_val = x[val_idx], _one_hot(y[val_idx], n_classes)

    best = model.copy()
    best_loss = np.inf
    stale = 0
    for _ in range(max_epochs):
        order = rng.permutation(len(x_tr))
        for start in range(0, len(order), batch_size):
            batch = order[start:start + batch_size]
            _, (d_w1, d_b1, d_w2, d_b2) = mlp_loss_and_grad(
                model, x_tr[batch], y_tr[batch])
            scale = lr / len(batch)
            model.w1 -= scale * d_w1
            model.b1 -= scale * d_b1
            model.w2 -= scale * d_w2
            model.b2 -= scale * d_b2
        if len(x_val) == 0:
            best = model.copy()
            continue
        val_loss = mlp_loss(model, x_val, y_val)
        if val_loss < best_loss:
            best_loss = val_loss
            best = model.copy()
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break
    return best


def mlp_predict(model: MlpModel, rows: np.ndarray) -> np.ndarray:
    """Most probable class per row; ties go to the lowest class index."""
    return np.argmax(mlp_forward(model, rows), axis=1)
