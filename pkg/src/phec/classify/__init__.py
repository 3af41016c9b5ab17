"""From-scratch probabilistic classifiers: KNN, random forest, weighted
logistic regression, and MLP."""

from .forest import ForestModel, Tree, rf_fit, rf_predict_proba
from .knn import KnnModel, knn_fit, knn_predict_proba
from .losses import logistic_loss, sample_weights, softplus, weighted_ce_loss
from .nets import (
    LinearModel,
    MlpModel,
    TrainConfig,
    init_mlp,
    linear_as_mlp,
    linear_predict_proba,
    logreg_fit,
    loss_and_grads,
    mean_loss,
    mlp_fit,
    mlp_predict_proba,
    mlp_raw_score,
    sigmoid,
    train_epochs,
)

__all__ = [
    "ForestModel",
    "Tree",
    "rf_fit",
    "rf_predict_proba",
    "KnnModel",
    "knn_fit",
    "knn_predict_proba",
    "logistic_loss",
    "sample_weights",
    "softplus",
    "weighted_ce_loss",
    "LinearModel",
    "MlpModel",
    "TrainConfig",
    "init_mlp",
    "linear_as_mlp",
    "linear_predict_proba",
    "logreg_fit",
    "loss_and_grads",
    "mean_loss",
    "mlp_fit",
    "mlp_predict_proba",
    "mlp_raw_score",
    "sigmoid",
    "train_epochs",
]
