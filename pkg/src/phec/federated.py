"""Simulated federated training: local MLP rounds, FedStacking / FedAvg
aggregation, per-round threshold tuning, and TPR-saturation stopping.

Nodes are isolated training contexts; the aggregation API only ever sees
parameter sets, never samples, so the privacy boundary is enforced by
shape. Per-node randomness derives from (seed, node_id) plus the global
epoch index, which makes results independent of execution schedule and
makes an n=1 federation bit-identical to ordinary centralized training
with the node's seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import subseed
from .classify.nets import MlpModel, TrainConfig, init_mlp, sigmoid, train_epochs
from .data import Dataset, Partition
from .ensemble import ThresholdSearchResult, tune_gamma
from .errors import DataError, NumericError

FEDSTACK = "fedstack"
FEDAVG = "fedavg"


@dataclass
class NodeState:
    node_id: int
    model: MlpModel
    data: Dataset
    config: TrainConfig

    @property
    def local_size(self) -> int:
        return self.data.n


@dataclass
class StackedModel:
    """Ordered node parameter sets kept side by side; scored by max."""

    columns: list[MlpModel]
    gamma_star: float | None = None
    aggregator: str = "max"

    def __post_init__(self):
        _check_homogeneous(self.columns)
        self._stacked_cache = None

    @property
    def n(self) -> int:
        return len(self.columns)

    @property
    def input_dim(self) -> int:
        return self.columns[0].weights[0].shape[0]

    def scores_matrix(self, X) -> np.ndarray:
        """(n_samples, n_nodes) matrix of per-node threat probabilities."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.input_dim:
            raise DataError(
                f"stacked: input has {X.shape[1]} features, model expects {self.input_dim}"
            )
        out = np.empty((X.shape[0], self.n))
        for j, column in enumerate(self.columns):
            h = X
            last = len(column.weights) - 1
            for l, (W, b) in enumerate(zip(column.weights, column.biases)):
                h = h @ W + b
                if l < last:
                    h = np.maximum(h, 0.0)
            out[:, j] = sigmoid(h[:, 0])
        return out

    def score_one(self, x) -> np.ndarray:
        """Per-node probabilities for a single sample via layer-stacked
        tensors (few numpy calls; used on the per-instance latency path)."""
        if self._stacked_cache is None:
            self._stacked_cache = [
                (
                    np.stack([c.weights[l] for c in self.columns]),
                    np.stack([c.biases[l] for c in self.columns]),
                )
                for l in range(len(self.columns[0].weights))
            ]
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.input_dim:
            raise DataError(
                f"stacked: input has {x.shape[-1]} features, model expects {self.input_dim}"
            )
        W0, b0 = self._stacked_cache[0]
        h = x @ W0 + b0
        last = len(self._stacked_cache) - 1
        if last > 0:
            h = np.maximum(h, 0.0)
        for l in range(1, last + 1):
            W, b = self._stacked_cache[l]
            h = np.einsum("nij,ni->nj", W, h) + b
            if l < last:
                h = np.maximum(h, 0.0)
        return sigmoid(h[:, 0])


@dataclass
class FedTrainState:
    rounds: int = 0
    tpr_history: list[float] = field(default_factory=list)
    fpr_history: list[float] = field(default_factory=list)
    gamma_history: list[float] = field(default_factory=list)
    feasible_history: list[bool] = field(default_factory=list)
    best_round: int = 0
    stop_reason: str = ""
    bytes_uploaded_per_round: int = 0
    t_max: int = 0


def _check_homogeneous(columns: list[MlpModel]):
    if not columns:
        raise DataError("stack: no parameter sets")
    shape0 = [w.shape for w in columns[0].weights]
    for c in columns[1:]:
        if [w.shape for w in c.weights] != shape0:
            raise DataError("stack: heterogeneous architectures")


def make_node(
    node_id: int, data: Dataset, hidden: list[int], alpha: float | None, config: TrainConfig
) -> NodeState:
    if data.n < 1:
        raise DataError(f"node {node_id}: empty local dataset")
    node_config = replace(config, seed=subseed(config.seed, "node", node_id))
    architecture = [data.dim] + list(hidden) + [1]
    model = init_mlp(architecture, alpha, node_config.seed)
    return NodeState(node_id, model, data, node_config)


def local_train_round(state: NodeState, epochs_this_round: int) -> NodeState:
    """Run the node's gradient-descent updates on its local data only."""
    try:
        model = train_epochs(
            state.model, state.data.features, state.data.binary_label, state.config,
            epochs_this_round,
        )
    except NumericError as exc:
        raise NumericError(f"node {state.node_id}: {exc}") from exc
    return NodeState(state.node_id, model, state.data, state.config)


def fed_stack(models: list[MlpModel]) -> StackedModel:
    """Concatenate node parameter sets; no arithmetic, order preserved."""
    return StackedModel([m.copy() for m in models])


def fed_avg(models: list[MlpModel], sizes) -> MlpModel:
    """Data-size-weighted elementwise average of node parameters."""
    sizes = np.asarray(sizes, dtype=np.float64)
    if len(models) != sizes.size:
        raise DataError(f"fed_avg: {len(models)} parameter sets but {sizes.size} sizes")
    if np.any(sizes <= 0):
        raise DataError("fed_avg: sizes must be positive")
    _check_homogeneous(models)
    weights = sizes / sizes.sum()
    out = models[0].copy()
    for l in range(len(out.weights)):
        out.weights[l] = sum(w * m.weights[l] for w, m in zip(weights, models))
        out.biases[l] = sum(w * m.biases[l] for w, m in zip(weights, models))
    out.loss_history = []
    return out


def stacked_scores(model: StackedModel, x) -> np.ndarray:
    """Probability vector (p_1 ... p_n) for one sample, column order."""
    return model.scores_matrix(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0]


def evaluate_stacked(
    model: StackedModel, val: Dataset, u: float, grid_size: int
) -> ThresholdSearchResult:
    """Max-aggregate the per-node scores on validation data and tune gamma."""
    matrix = model.scores_matrix(val.features)
    return tune_gamma(matrix.max(axis=1), val.binary_label, u, grid_size)


def federated_train(
    partition: Partition,
    val: Dataset,
    u: float,
    grid_size: int,
    config: TrainConfig,
    hidden: list[int] | None = None,
    alpha: float | None = None,
    t_max: int = 50,
    patience: int = 5,
    min_delta: float = 1e-3,
    epochs_per_round: int = 5,
    aggregation: str = FEDSTACK,
) -> tuple[StackedModel, FedTrainState]:
    """Round-based federated training with restore-best stopping.

    Each round: local training on every node, central aggregation,
    validation scoring, and a threshold search giving that round's gamma
    and TPR. Training stops once TPR fails to improve by more than
    min_delta for ``patience`` consecutive rounds, drops strictly for 3
    consecutive rounds, or hits t_max; the best round's parameters and
    gamma are returned.
    """
    if partition.n < 1:
        raise DataError("federated_train: empty partition")
    if val.n < 1 or len(set(val.binary_label.tolist())) < 2:
        raise DataError("federated_train: validation data must contain both classes")
    if aggregation not in (FEDSTACK, FEDAVG):
        raise DataError(f"federated_train: unknown aggregation '{aggregation}'")
    hidden = [32, 16] if hidden is None else list(hidden)

    nodes = [
        make_node(i, ds, hidden, alpha, config) for i, ds in enumerate(partition.node_datasets)
    ]
    sizes = [node.local_size for node in nodes]
    param_bytes = sum(node.model.n_parameters for node in nodes) * 8

    state = FedTrainState(t_max=t_max, bytes_uploaded_per_round=param_bytes)
    best_key = None  # restoration target: strictly best (feasible, tpr)
    signif_key = None  # plateau reference: last improvement beyond min_delta
    best_model: StackedModel | None = None
    stale_rounds = 0
    drop_streak = 0

    for t in range(1, t_max + 1):
        nodes = [local_train_round(node, epochs_per_round) for node in nodes]
        if aggregation == FEDSTACK:
            current = fed_stack([node.model for node in nodes])
        else:
            merged = fed_avg([node.model for node in nodes], sizes)
            # nodes resume next round from the downloaded global model
            for node in nodes:
                downloaded = merged.copy()
                downloaded.epochs_trained = node.model.epochs_trained
                node.model = downloaded
            current = StackedModel([merged.copy()])

        result = evaluate_stacked(current, val, u, grid_size)
        state.rounds = t
        state.tpr_history.append(result.tpr)
        state.fpr_history.append(result.fpr)
        state.gamma_history.append(result.gamma_star)
        state.feasible_history.append(result.feasible)

        key = (result.feasible, result.tpr)
        if best_key is None or key > best_key:
            best_key = key
            current.gamma_star = result.gamma_star
            best_model = current
            state.best_round = t
        significant = signif_key is None or key[0] > signif_key[0] or (
            key[0] == signif_key[0] and key[1] > signif_key[1] + min_delta
        )
        if significant:
            signif_key = key
            stale_rounds = 0
        else:
            stale_rounds += 1

        if t >= 2 and state.tpr_history[-1] < state.tpr_history[-2]:
            drop_streak += 1
        else:
            drop_streak = 0

        if stale_rounds >= patience:
            state.stop_reason = "tpr_plateau"
            break
        if drop_streak >= 3:
            state.stop_reason = "tpr_drop"
            break
    else:
        state.stop_reason = "t_max"

    return best_model, state
