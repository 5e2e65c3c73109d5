"""Classifier families sharing one normalization and persistence layer."""

from emovox.classifiers.normalize import Normalizer, normalize_apply, normalize_fit
from emovox.classifiers.svm import (
    BinarySvm, Kernel, MulticlassSvm,
    kernel_matrix, median_pairwise_distance,
    svm_decision, svm_predict, svm_train_binary, svm_train_multiclass,
)
from emovox.classifiers.mlp import (
    MlpModel, mlp_forward, mlp_init, mlp_loss, mlp_loss_and_grad,
    mlp_predict, mlp_train,
)
from emovox.classifiers.knn import KnnModel, knn_predict, knn_train
from emovox.classifiers.forest import (
    ForestModel, Tree, forest_predict, forest_train,
)
from emovox.classifiers.bundle import (
    ModelFormatError, TrainedModel, load_model, predict_rows, save_model,
)

__all__ = [
    "Normalizer", "normalize_apply", "normalize_fit",
    "BinarySvm", "Kernel", "MulticlassSvm", "kernel_matrix",
    "median_pairwise_distance", "svm_decision", "svm_predict",
    "svm_train_binary", "svm_train_multiclass",
    "MlpModel", "mlp_forward", "mlp_init", "mlp_loss", "mlp_loss_and_grad",
    "mlp_predict", "mlp_train",
    "KnnModel", "knn_predict", "knn_train",
    "ForestModel", "Tree", "forest_predict", "forest_train",
    "ModelFormatError", "TrainedModel", "load_model", "predict_rows",
    "save_model",
]
