"""Pipeline orchestration: the four training variants and the bundled
model artifact they produce.

A bundle holds everything needed to score new traffic: the optional PCA
projection, the fitted members (KNN + forest, or KNN + weighted logistic
regression), or the stacked federated columns, plus the tuned threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._rng import subseed
from .classify import (
    KnnModel,
    TrainConfig,
    knn_fit,
    knn_predict_proba,
    linear_predict_proba,
    logreg_fit,
    rf_fit,
    rf_predict_proba,
)
from .config import Config, NetConfig
from .data import Dataset, GroupingTable, NoiseSpec, inject_sln_noise, partition_federated, split
from .ensemble import AlphaSearchResult, ThresholdSearchResult, tune_alpha, tune_gamma
from .errors import DataError
from .federated import FedTrainState, StackedModel, federated_train
from .reduce import PcaModel, pca_fit, pca_fit_ratio, pca_transform
from .serialize import MODEL_VERSION, decode_model, encode_model

BUNDLE_FORMAT = "phec-bundle"

_MEMBER_PROBA = {
    "knn": knn_predict_proba,
    "forest": rf_predict_proba,
    "linear": linear_predict_proba,
}


@dataclass
class PhecModel:
    """Deployable artifact of a training run."""

    pipeline: str
    aggregator: str
    gamma_star: float
    alpha_star: float | None = None
    pca: PcaModel | None = None
    members: list[tuple[str, object]] = field(default_factory=list)
    stacked: StackedModel | None = None
    config_echo: dict = field(default_factory=dict)

    @property
    def input_dim(self) -> int:
        if self.stacked is not None:
            return self.stacked.input_dim
        if self.pca is not None:
            return self.pca.input_dim
        first = self.members[0][1]
        return first.features.shape[1] if isinstance(first, KnnModel) else first.weights.shape[0]

    def _project(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.input_dim:
            raise DataError(
                f"model expects {self.input_dim} features, got {X.shape[1]}"
            )
        return pca_transform(self.pca, X) if self.pca is not None else X

    def member_scores(self, X) -> np.ndarray:
        """(n_samples, n_members) probability matrix."""
        if self.stacked is not None:
            X = np.atleast_2d(np.asarray(X, dtype=np.float64))
            return self.stacked.scores_matrix(X)
        Z = self._project(X)
        return np.column_stack([_MEMBER_PROBA[kind](model, Z) for kind, model in self.members])

    def aggregate_scores(self, X) -> np.ndarray:
        matrix = self.member_scores(X)
        return matrix.max(axis=1) if self.aggregator == "max" else matrix.mean(axis=1)

    def predict(self, X) -> np.ndarray:
        return (self.aggregate_scores(X) >= self.gamma_star).astype(np.uint8)

    def single_predictor(self):
        """Per-instance callable x -> 0/1 on the low-latency path."""
        gamma = self.gamma_star
        if self.stacked is not None:
            stacked = self.stacked
            return lambda x: 1 if stacked.score_one(x).max() >= gamma else 0

        members = self.members
        pca = self.pca
        k = len(members)

        def predict_one(x):
            z = pca_transform(pca, x)[0] if pca is not None else np.asarray(x, dtype=np.float64)
            total = 0.0
            for kind, model in members:
                total += _MEMBER_PROBA[kind](model, z)
            return 1 if total / k >= gamma else 0

        return predict_one


@dataclass
class TrainOutcome:
    bundle: PhecModel
    threshold: ThresholdSearchResult
    train_data: Dataset
    val_data: Dataset
    alpha_search: AlphaSearchResult | None = None
    fed_state: FedTrainState | None = None
    flipped_count: int | None = None
    warnings: list[str] = field(default_factory=list)


def _fit_pca(cfg: Config, X) -> PcaModel | None:
    if not cfg.pca.enabled:
        return None
    if cfg.pca.m is not None:
        return pca_fit(X, min(cfg.pca.m, X.shape[1]))
    return pca_fit_ratio(X, cfg.pca.variance_ratio or 0.95)


def _train_config(net: NetConfig, seed: int) -> TrainConfig:
    return TrainConfig(eta=net.eta, epochs=net.epochs, batch_size=net.batch_size, seed=seed)


def train_pipeline(
    cfg: Config, dataset: Dataset, grouping: GroupingTable | None = None
) -> TrainOutcome:
    """Run the configured variant end to end on ``dataset``."""
    warnings = list(dataset.warnings)
    flipped_count = None
    if cfg.noise is not None and cfg.noise.rho > 0:
        dataset, flipped = inject_sln_noise(dataset, NoiseSpec(cfg.noise.rho, cfg.noise.seed))
        flipped_count = int(flipped.size)
        warnings.append(f"injected label noise rho={cfg.noise.rho} ({flipped_count} flips)")
    train, val = split(
        dataset, 1.0 - cfg.val_fraction, stratified=True, seed=subseed(cfg.seed, "split")
    )
    if cfg.pipeline == "phec-centralized":
        outcome = _train_phec_centralized(cfg, train, val)
    elif cfg.pipeline == "nt-phec-centralized":
        outcome = _train_nt_centralized(cfg, train, val)
    elif cfg.pipeline == "phec-federated":
        outcome = _train_federated(cfg, train, val, grouping, alpha_grid=None)
    elif cfg.pipeline == "nt-phec-federated":
        outcome = _train_federated(cfg, train, val, grouping, alpha_grid=cfg.resolved_alpha_grid())
    else:
        raise DataError(f"unknown pipeline '{cfg.pipeline}'")
    outcome.flipped_count = flipped_count
    outcome.warnings = warnings + outcome.warnings
    if not outcome.threshold.feasible:
        outcome.warnings.append(
            f"no threshold satisfies FPR <= {cfg.u}; returned minimum-FPR point"
        )
    outcome.bundle.config_echo = cfg.echo()
    return outcome


def _train_phec_centralized(cfg: Config, train: Dataset, val: Dataset) -> TrainOutcome:
    pca = _fit_pca(cfg, train.features)
    z_train = pca_transform(pca, train.features) if pca else train.features
    z_val = pca_transform(pca, val.features) if pca else val.features
    y = train.binary_label
    knn = knn_fit(z_train, y, min(cfg.knn.k, z_train.shape[0]))
    forest = rf_fit(
        z_train,
        y,
        trees=cfg.forest.trees,
        max_depth=cfg.forest.max_depth,
        features_per_split=cfg.forest.features_per_split,
        bootstrap=cfg.forest.bootstrap,
        seed=subseed(cfg.seed, "forest"),
    )
    scores = (knn_predict_proba(knn, z_val) + rf_predict_proba(forest, z_val)) / 2.0
    result = tune_gamma(scores, val.binary_label, cfg.u, cfg.grid_size)
    bundle = PhecModel(
        pipeline=cfg.pipeline,
        aggregator="mean",
        gamma_star=result.gamma_star,
        pca=pca,
        members=[("knn", knn), ("forest", forest)],
    )
    return TrainOutcome(bundle, result, train, val)


def _train_nt_centralized(cfg: Config, train: Dataset, val: Dataset) -> TrainOutcome:
    pca = _fit_pca(cfg, train.features)
    z_train = pca_transform(pca, train.features) if pca else train.features
    z_val = pca_transform(pca, val.features) if pca else val.features
    y = train.binary_label
    knn = knn_fit(z_train, y, min(cfg.knn.k, z_train.shape[0]))
    knn_val = knn_predict_proba(knn, z_val)
    lin_config = _train_config(cfg.linear, subseed(cfg.seed, "linear"))

    def fit_scores(_train_ds, _val_ds, alpha):
        model = logreg_fit(z_train, y, alpha, lin_config)
        scores = (knn_val + linear_predict_proba(model, z_val)) / 2.0
        return scores, model

    search = tune_alpha(
        train, val, cfg.u, cfg.resolved_alpha_grid(), fit_scores, cfg.grid_size
    )
    bundle = PhecModel(
        pipeline=cfg.pipeline,
        aggregator="mean",
        gamma_star=search.threshold.gamma_star,
        alpha_star=search.alpha_star,
        pca=pca,
        members=[("knn", knn), ("linear", search.artifact)],
    )
    return TrainOutcome(bundle, search.threshold, train, val, alpha_search=search)


def _train_federated(
    cfg: Config,
    train: Dataset,
    val: Dataset,
    grouping: GroupingTable | None,
    alpha_grid: list[float] | None,
) -> TrainOutcome:
    fed = cfg.federated
    partition = partition_federated(
        train, fed.nodes, table=grouping, seed=subseed(cfg.seed, "partition")
    )
    warnings = []
    if partition.replacement_used:
        warnings.append("normal pool exhausted during partitioning; sampled with replacement")
    base_config = _train_config(cfg.mlp, cfg.seed)

    def run(alpha):
        return federated_train(
            partition,
            val,
            cfg.u,
            cfg.grid_size,
            base_config,
            hidden=cfg.mlp.hidden,
            alpha=alpha,
            t_max=fed.t_max,
            patience=fed.patience,
            min_delta=fed.min_delta,
            epochs_per_round=fed.epochs_per_round,
            aggregation=fed.aggregation,
        )

    if alpha_grid is None:
        stacked, state = run(None)
        result = tune_gamma(
            stacked.scores_matrix(val.features).max(axis=1),
            val.binary_label,
            cfg.u,
            cfg.grid_size,
        )
        alpha_search = None
        alpha_star = None
    else:

        def fit_scores(_train_ds, val_ds, alpha):
            stacked_a, state_a = run(alpha)
            scores = stacked_a.scores_matrix(val_ds.features).max(axis=1)
            return scores, (stacked_a, state_a)

        alpha_search = tune_alpha(train, val, cfg.u, alpha_grid, fit_scores, cfg.grid_size)
        stacked, state = alpha_search.artifact
        result = alpha_search.threshold
        alpha_star = alpha_search.alpha_star

    stacked.gamma_star = result.gamma_star
    bundle = PhecModel(
        pipeline=cfg.pipeline,
        aggregator="max",
        gamma_star=result.gamma_star,
        alpha_star=alpha_star,
        stacked=stacked,
    )
    outcome = TrainOutcome(
        bundle, result, train, val, alpha_search=alpha_search, fed_state=state
    )
    outcome.warnings = warnings
    return outcome


def save_bundle(bundle: PhecModel, path):
    payload = {
        "format": BUNDLE_FORMAT,
        "version": MODEL_VERSION,
        "pipeline": bundle.pipeline,
        "aggregator": bundle.aggregator,
        "gamma_star": bundle.gamma_star,
        "alpha_star": bundle.alpha_star,
        "config": bundle.config_echo,
        "pca": None if bundle.pca is None else encode_model(bundle.pca),
        "members": [encode_model(model) for _, model in bundle.members],
        "stacked": None if bundle.stacked is None else encode_model(bundle.stacked),
    }
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_bundle(path) -> PhecModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: corrupt model file ({exc})")
    if payload.get("format") != BUNDLE_FORMAT:
        raise DataError(f"{path}: not a {BUNDLE_FORMAT} file")
    if "version" not in payload:
        raise DataError(f"{path}: missing format version")
    if payload["version"] != MODEL_VERSION:
        raise DataError(f"{path}: unsupported bundle version {payload['version']}")
    members = [(m["kind"], decode_model(m)) for m in payload["members"]]
    return PhecModel(
        pipeline=payload["pipeline"],
        aggregator=payload["aggregator"],
        gamma_star=payload["gamma_star"],
        alpha_star=payload["alpha_star"],
        pca=None if payload["pca"] is None else decode_model(payload["pca"]),
        members=members,
        stacked=None if payload["stacked"] is None else decode_model(payload["stacked"]),
        config_echo=payload.get("config", {}),
    )
