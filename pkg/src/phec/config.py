"""Run configuration: JSON key-value text, fail-closed.

Unknown keys anywhere in the tree abort before any training starts, as do
out-of-range values. Defaults are filled in and echoed into reports so a
run can be reproduced from its own report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ConfigError

PIPELINES = (
    "phec-centralized",
    "phec-federated",
    "nt-phec-centralized",
    "nt-phec-federated",
)

_DEFAULT_ALPHA_GRID = [0.2, 0.35, 0.5, 0.65, 0.8]


@dataclass
class PcaConfig:
    enabled: bool = True
    m: int | None = None
    variance_ratio: float | None = 0.95


@dataclass
class KnnConfig:
    k: int = 5


@dataclass
class ForestConfig:
    trees: int = 100
    max_depth: int | None = 12
    features_per_split: int | None = None
    bootstrap: bool = True


@dataclass
class NetConfig:
    hidden: list[int] = field(default_factory=lambda: [32, 16])
    eta: float = 0.05
    epochs: int = 200
    batch_size: int = 64


@dataclass
class FederatedConfig:
    nodes: int = 4
    t_max: int = 50
    patience: int = 5
    min_delta: float = 1e-3
    epochs_per_round: int = 5
    aggregation: str = "fedstack"


@dataclass
class NoiseConfig:
    rho: float = 0.0
    seed: int = 0


@dataclass
class Config:
    pipeline: str
    data: str
    model_out: str = "model.json"
    report_out: str = "report.json"
    seed: int = 0
    u: float = 0.05
    grid_size: int = 201
    val_fraction: float = 0.2
    include_curve: bool = False
    alpha: float | None = None
    alpha_grid: list[float] | None = None
    pca: PcaConfig = field(default_factory=PcaConfig)
    knn: KnnConfig = field(default_factory=KnnConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    linear: NetConfig = field(default_factory=lambda: NetConfig(hidden=[]))
    mlp: NetConfig = field(default_factory=NetConfig)
    federated: FederatedConfig = field(default_factory=FederatedConfig)
    noise: NoiseConfig | None = None
    grouping: str | None = None

    def resolved_alpha_grid(self) -> list[float]:
        if self.alpha_grid is not None:
            return list(self.alpha_grid)
        if self.alpha is not None:
            return [self.alpha]
        return list(_DEFAULT_ALPHA_GRID)

    def echo(self) -> dict:
        """Fixed-order dict reproducing this configuration."""
        out = {
            "pipeline": self.pipeline,
            "data": self.data,
            "model_out": self.model_out,
            "report_out": self.report_out,
            "seed": self.seed,
            "u": self.u,
            "grid_size": self.grid_size,
            "val_fraction": self.val_fraction,
            "include_curve": self.include_curve,
            "alpha": self.alpha,
            "alpha_grid": self.alpha_grid,
            "pca": {
                "enabled": self.pca.enabled,
                "m": self.pca.m,
                "variance_ratio": self.pca.variance_ratio,
            },
            "knn": {"k": self.knn.k},
            "forest": {
                "trees": self.forest.trees,
                "max_depth": self.forest.max_depth,
                "features_per_split": self.forest.features_per_split,
                "bootstrap": self.forest.bootstrap,
            },
            "linear": {
                "eta": self.linear.eta,
                "epochs": self.linear.epochs,
                "batch_size": self.linear.batch_size,
            },
            "mlp": {
                "hidden": self.mlp.hidden,
                "eta": self.mlp.eta,
                "epochs": self.mlp.epochs,
                "batch_size": self.mlp.batch_size,
            },
            "federated": {
                "nodes": self.federated.nodes,
                "t_max": self.federated.t_max,
                "patience": self.federated.patience,
                "min_delta": self.federated.min_delta,
                "epochs_per_round": self.federated.epochs_per_round,
                "aggregation": self.federated.aggregation,
            },
            "noise": None
            if self.noise is None
            else {"rho": self.noise.rho, "seed": self.noise.seed},
            "grouping": self.grouping,
        }
        return out


def _take(section: dict, context: str, known: dict) -> dict:
    unknown = sorted(set(section) - set(known))
    if unknown:
        raise ConfigError(f"unknown {context} keys: {unknown}")
    return {k: section[k] for k in section}


def _require(payload: dict, key: str):
    if key not in payload or payload[key] is None:
        raise ConfigError(f"missing required key '{key}'")
    return payload[key]


def parse_config(text: str) -> Config:
    """Parse and validate a JSON configuration document."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(payload, dict):
        raise ConfigError("config must be a JSON object")

    known = {
        "pipeline", "data", "model_out", "report_out", "seed", "u", "grid_size",
        "val_fraction", "include_curve", "alpha", "alpha_grid", "pca", "knn",
        "forest", "linear", "mlp", "federated", "noise", "grouping",
    }
    unknown = sorted(set(payload) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")

    pipeline = _require(payload, "pipeline")
    if pipeline not in PIPELINES:
        raise ConfigError(f"unknown pipeline '{pipeline}'; choose from {PIPELINES}")
    data = _require(payload, "data")

    cfg = Config(pipeline=pipeline, data=str(data))
    cfg.model_out = str(payload.get("model_out", cfg.model_out))
    cfg.report_out = str(payload.get("report_out", cfg.report_out))
    cfg.seed = _int(payload.get("seed", cfg.seed), "seed", minimum=0)
    cfg.u = _real(payload.get("u", cfg.u), "u", 0.0, 1.0)
    cfg.grid_size = _int(payload.get("grid_size", cfg.grid_size), "grid_size", minimum=2)
    cfg.val_fraction = _real(payload.get("val_fraction", cfg.val_fraction), "val_fraction")
    if not 0 < cfg.val_fraction < 1:
        raise ConfigError(f"val_fraction must be in (0, 1), got {cfg.val_fraction}")
    cfg.include_curve = _bool(payload.get("include_curve", cfg.include_curve), "include_curve")

    if payload.get("alpha") is not None:
        cfg.alpha = _real(payload["alpha"], "alpha", 0.0, 1.0)
    if payload.get("alpha_grid") is not None:
        grid = payload["alpha_grid"]
        if not isinstance(grid, list) or not grid:
            raise ConfigError("alpha_grid must be a non-empty list")
        cfg.alpha_grid = [_real(a, "alpha_grid entry", 0.0, 1.0) for a in grid]

    if "pca" in payload:
        section = _take(payload["pca"], "pca", {"enabled", "m", "variance_ratio"})
        if "enabled" in section:
            cfg.pca.enabled = _bool(section["enabled"], "pca.enabled")
        if section.get("m") is not None:
            cfg.pca.m = _int(section["m"], "pca.m", minimum=1)
            cfg.pca.variance_ratio = None
        if section.get("variance_ratio") is not None:
            cfg.pca.variance_ratio = _real(section["variance_ratio"], "pca.variance_ratio")
            if not 0 < cfg.pca.variance_ratio <= 1:
                raise ConfigError("pca.variance_ratio must be in (0, 1]")
    if "knn" in payload:
        section = _take(payload["knn"], "knn", {"k"})
        if "k" in section:
            cfg.knn.k = _int(section["k"], "knn.k", minimum=1)
    if "forest" in payload:
        section = _take(
            payload["forest"], "forest",
            {"trees", "max_depth", "features_per_split", "bootstrap"},
        )
        if "trees" in section:
            cfg.forest.trees = _int(section["trees"], "forest.trees", minimum=1)
        if "max_depth" in section:
            cfg.forest.max_depth = (
                None if section["max_depth"] is None
                else _int(section["max_depth"], "forest.max_depth", minimum=1)
            )
        if "features_per_split" in section:
            cfg.forest.features_per_split = (
                None if section["features_per_split"] is None
                else _int(section["features_per_split"], "forest.features_per_split", minimum=1)
            )
        if "bootstrap" in section:
            cfg.forest.bootstrap = _bool(section["bootstrap"], "forest.bootstrap")
    if "linear" in payload:
        section = _take(payload["linear"], "linear", {"eta", "epochs", "batch_size"})
        _fill_net(cfg.linear, section, "linear")
    if "mlp" in payload:
        section = _take(payload["mlp"], "mlp", {"hidden", "eta", "epochs", "batch_size"})
        if "hidden" in section:
            hidden = section["hidden"]
            if not isinstance(hidden, list):
                raise ConfigError("mlp.hidden must be a list of layer sizes")
            cfg.mlp.hidden = [_int(h, "mlp.hidden entry", minimum=1) for h in hidden]
        _fill_net(cfg.mlp, section, "mlp")
    if "federated" in payload:
        section = _take(
            payload["federated"], "federated",
            {"nodes", "t_max", "patience", "min_delta", "epochs_per_round", "aggregation"},
        )
        fed = cfg.federated
        if "nodes" in section:
            fed.nodes = _int(section["nodes"], "federated.nodes", minimum=1)
        if "t_max" in section:
            fed.t_max = _int(section["t_max"], "federated.t_max", minimum=1)
        if "patience" in section:
            fed.patience = _int(section["patience"], "federated.patience", minimum=1)
        if "min_delta" in section:
            fed.min_delta = _real(section["min_delta"], "federated.min_delta", 0.0, 1.0)
        if "epochs_per_round" in section:
            fed.epochs_per_round = _int(
                section["epochs_per_round"], "federated.epochs_per_round", minimum=1
            )
        if "aggregation" in section:
            if section["aggregation"] not in ("fedstack", "fedavg"):
                raise ConfigError(
                    f"federated.aggregation must be fedstack or fedavg, "
                    f"got {section['aggregation']!r}"
                )
            fed.aggregation = section["aggregation"]
    if payload.get("noise") is not None:
        section = _take(payload["noise"], "noise", {"rho", "seed"})
        rho = _real(section.get("rho", 0.0), "noise.rho")
        if not 0 <= rho < 50:
            raise ConfigError(f"noise.rho must be < 50 (and >= 0), got {rho}")
        cfg.noise = NoiseConfig(rho=rho, seed=_int(section.get("seed", 0), "noise.seed", minimum=0))
    if payload.get("grouping") is not None:
        cfg.grouping = str(payload["grouping"])

    hidden_explicit = isinstance(payload.get("mlp"), dict) and "hidden" in payload["mlp"]
    _validate_pipeline_rules(cfg, hidden_explicit)
    return cfg


def _fill_net(net: NetConfig, section: dict, context: str):
    if "eta" in section:
        net.eta = _real(section["eta"], f"{context}.eta")
        if net.eta <= 0:
            raise ConfigError(f"{context}.eta must be > 0")
    if "epochs" in section:
        net.epochs = _int(section["epochs"], f"{context}.epochs", minimum=1)
    if "batch_size" in section:
        net.batch_size = _int(section["batch_size"], f"{context}.batch_size", minimum=1)


def _validate_pipeline_rules(cfg: Config, hidden_explicit: bool):
    if cfg.pipeline.startswith("nt-") and cfg.knn.k < 5:
        raise ConfigError(
            f"noise-tolerant pipelines require knn.k >= 5, got {cfg.knn.k}"
        )
    if cfg.pipeline == "nt-phec-federated":
        if hidden_explicit and cfg.mlp.hidden != []:
            raise ConfigError(
                "nt-phec-federated uses a single sigmoid unit; mlp.hidden must be []"
            )
        cfg.mlp.hidden = []


def _int(value, name: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def _real(value, name: str, low: float | None = None, high: float | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if low is not None and value < low:
        raise ConfigError(f"{name} must be >= {low}, got {value}")
    if high is not None and value > high:
        raise ConfigError(f"{name} must be <= {high}, got {value}")
    return value


def _bool(value, name: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{name} must be true or false, got {value!r}")
    return value
