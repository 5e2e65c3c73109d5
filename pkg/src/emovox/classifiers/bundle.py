"""Trained model bundles and their on-disk container.

A bundle couples a classifier with the normalizer fitted on its
training rows and the label set it predicts. The container format is
binary: magic "EMVX", a little-endian u16 version, a model-kind tag, a
JSON structure header, then raw little-endian array blobs. Writing is
canonical (sorted JSON keys, fixed array order), so save -> load ->
save reproduces the file byte for byte.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from emovox.classifiers.forest import ForestModel, Tree, forest_predict
from emovox.classifiers.knn import KnnModel, knn_predict
from emovox.classifiers.mlp import MlpModel, mlp_predict
from emovox.classifiers.normalize import Normalizer, normalize_apply
from emovox.classifiers.svm import (
    BinarySvm, Kernel, MulticlassSvm, svm_predict,
)

MAGIC = b"EMVX"
VERSION = 1

_KIND_TAGS = {"svm": 1, "mlp": 2, "knn": 3, "forest": 4}
_TAG_KINDS = {tag: kind for kind, tag in _KIND_TAGS.items()}
_DTYPES = {"<f8", "<i8"}


class ModelFormatError(Exception):
    """Container bytes are not a readable model file."""


@dataclass
class TrainedModel:
    """Classifier plus the normalization fitted on its training rows."""

    kind: str                  # svm | mlp | knn | forest
    labels: list               # prediction classes, canonical order
    normalizer: Normalizer
    model: object

    @property
    def dim(self) -> int:
        return self.normalizer.dim


def predict_rows(bundle: TrainedModel, rows: np.ndarray) -> list:
    """Normalized prediction for raw feature rows, as label strings."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    normed = normalize_apply(bundle.normalizer, rows)
    if bundle.kind == "svm":
        idx = svm_predict(bundle.model, normed)
    elif bundle.kind == "mlp":
        idx = mlp_predict(bundle.model, normed)
    elif bundle.kind == "knn":
        idx = knn_predict(bundle.model, normed)
    elif bundle.kind == "forest":
        idx = forest_predict(bundle.model, normed)
    else:
        raise ValueError(f"unknown model kind {bundle.kind!r}")
    return [bundle.labels[i] for i in idx]


def _collect(bundle: TrainedModel):
    """(params dict, ordered [(name, array)] list) for serialization."""
    arrays = [("norm/mean", bundle.normalizer.mean),
              ("norm/std", bundle.normalizer.std)]
    m = bundle.model
    if bundle.kind == "svm":
        params = {
            "kernel": m.kernel.kind,
            "sigma": m.kernel.sigma,
            "c": m.c,
            "n_classes": m.n_classes,
            "pairs": [[lo, hi] for lo, hi, _ in m.machines],
        }
        arrays.append(("bias", np.array([b.bias for _, _, b in m.machines])))
        for i, (_, _, machine) in enumerate(m.machines):
            arrays.append((f"m{i}/sv", machine.support_vectors))
            arrays.append((f"m{i}/alpha_y", machine.alpha_y))
    elif bundle.kind == "mlp":
        params = {}
        arrays += [("w1", m.w1), ("b1", m.b1), ("w2", m.w2), ("b2", m.b2)]
    elif bundle.kind == "knn":
        params = {"k": m.k}
        arrays += [("points", m.points),
                   ("labels", m.labels.astype(np.int64))]
    elif bundle.kind == "forest":
        params = {"n_classes": m.n_classes}
        for i, tree in enumerate(m.trees):
            arrays += [
                (f"t{i}/feature", tree.feature),
                (f"t{i}/threshold", tree.threshold),
                (f"t{i}/left", tree.left),
                (f"t{i}/right", tree.right),
                (f"t{i}/counts", tree.counts),
            ]
    else:
        raise ValueError(f"unknown model kind {bundle.kind!r}")
    return params, arrays


def save_model(path, bundle: TrainedModel) -> None:
    """Write the bundle in the EMVX container format."""
    params, arrays = _collect(bundle)
    manifest = []
    blobs = []
    for name, arr in arrays:
        arr = np.asarray(arr)
        dtype = "<i8" if arr.dtype.kind in "iu" else "<f8"
        data = np.ascontiguousarray(arr.astype(dtype))
        manifest.append({"name": name, "dtype": dtype,
                         "shape": list(arr.shape)})
        blobs.append(data.tobytes())
    header = json.dumps(
        {"labels": list(bundle.labels), "params": params, "arrays": manifest},
        sort_keys=True, separators=(",", ":"),
    ).encode("utf-8")
    out = bytearray()
    out += MAGIC
    out += struct.pack("<HBB", VERSION, _KIND_TAGS[bundle.kind], 0)
    out += struct.pack("<I", len(header))
    out += header
    for blob in blobs:
        out += blob
    Path(path).write_bytes(bytes(out))


def load_model(path) -> TrainedModel:
    """Read an EMVX container back into a TrainedModel."""
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise ModelFormatError(f"{path}: not an EMVX model file")
    version, tag, _ = struct.unpack_from("<HBB", raw, 4)
    if version != VERSION:
        raise ModelFormatError(f"{path}: unsupported version {version}")
    if tag not in _TAG_KINDS:
        raise ModelFormatError(f"{path}: unknown model kind tag {tag}")
    kind = _TAG_KINDS[tag]
    (header_len,) = struct.unpack_from("<I", raw, 8)
    try:
        header = json.loads(raw[12:12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: corrupt header ({exc})") from exc

    arrays = {}
    pos = 12 + header_len
    for spec in header["arrays"]:
        if spec["dtype"] not in _DTYPES:
            raise ModelFormatError(f"{path}: bad dtype {spec['dtype']!r}")
        count = int(np.prod(spec["shape"])) if spec["shape"] else 1
        nbytes = count * 8
        if pos + nbytes > len(raw):
            raise ModelFormatError(f"{path}: truncated array data")
        arr = np.frombuffer(raw[pos:pos + nbytes], dtype=spec["dtype"])
        arrays[spec["name"]] = arr.reshape(spec["shape"]).copy()
        pos += nbytes

    params = header["params"]
    norm = Normalizer(arrays["norm/mean"], arrays["norm/std"])
    if kind == "svm":
        kernel = Kernel(params["kernel"], params["sigma"])
        machines = []
        for i, (lo, hi) in enumerate(params["pairs"]):
            machines.append((lo, hi, BinarySvm(
                arrays[f"m{i}/sv"], arrays[f"m{i}/alpha_y"],
                float(arrays["bias"][i]), kernel, params["c"])))
        model = MulticlassSvm(machines, params["n_classes"], kernel,
                              params["c"])
    elif kind == "mlp":
        model = MlpModel(arrays["w1"], arrays["b1"],
                         arrays["w2"], arrays["b2"])
    elif kind == "knn":
        model = KnnModel(arrays["points"], arrays["labels"], params["k"])
    else:
        trees = []
        i = 0
        while f"t{i}/feature" in arrays:
            trees.append(Tree(arrays[f"t{i}/feature"],
                              arrays[f"t{i}/threshold"],
                              arrays[f"t{i}/left"],
                              arrays[f"t{i}/right"],
                              arrays[f"t{i}/counts"]))
            i += 1
        model = ForestModel(trees, params["n_classes"])
    return TrainedModel(kind, list(header["labels"]), norm, model)
