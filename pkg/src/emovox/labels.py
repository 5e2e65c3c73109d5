"""Canonical emotion labels and ordering.

The seven-class label set and its fixed order are used for confusion
matrix axes and for every deterministic tie-break in the classifiers.
"""
from __future__ import annotations

EMOTIONS = ("ANG", "DIS", "FEA", "HAP", "NEU", "PS", "SAD")

_RANK = {label: i for i, label in enumerate(EMOTIONS)}


def label_sort_key(label: str):
    """Canonical emotion order first, anything else lexicographic after."""
    return (0, _RANK[label], "") if label in _RANK else (1, 0, label)


def sorted_labels(labels) -> list:
    return sorted(set(labels), key=label_sort_key)
