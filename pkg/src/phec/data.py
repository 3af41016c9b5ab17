"""Dataset handling: ingestion, encoding, grouping, splits, noise, synthesis.

The on-disk dataset artifact is JSON (floats round-trip exactly via repr)
so prepared data, noisy variants, and synthetic sets diff cleanly.

Conventions
-----------
* ``binary_label`` is 1 for threat, 0 for normal traffic.
* ``category`` is a broad attack class string; ``"Normal"`` is reserved
  for non-malicious samples. Freshly ingested attacks carry the
  placeholder ``"Ungrouped"`` until :func:`group_attacks` maps them.
* Every operation that takes a seed is bit-reproducible for that seed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._rng import subseed
from .errors import DataError

NORMAL = "Normal"
UNGROUPED = "Ungrouped"

DATASET_FORMAT = "phec-dataset"
DATASET_VERSION = 1

_COLUMN_KINDS = {"numeric", "categorical", "label", "ignore"}


@dataclass
class ColumnSpec:
    """Per-column schema for CSV ingestion.

    kinds: one of numeric/categorical/label/ignore per CSV column.
    normal_token: literal label value that marks non-malicious traffic.
    """

    kinds: list[str]
    normal_token: str

    def __post_init__(self):
        bad = [k for k in self.kinds if k not in _COLUMN_KINDS]
        if bad:
            raise DataError(f"schema: unknown column kinds {sorted(set(bad))}")
        if sum(k == "label" for k in self.kinds) != 1:
            raise DataError("schema: exactly one label column required")

    @property
    def n_columns(self) -> int:
        return len(self.kinds)


@dataclass
class RawDataset:
    """Parsed CSV rows before encoding/normalization.

    rows holds feature fields only (numerics already parsed to float,
    categoricals kept as strings); labels holds the raw label token.
    """

    rows: list[list]
    labels: list[str]
    feature_kinds: list[str]
    normal_token: str


@dataclass
class LabelEncoder:
    """Per-column category -> integer code maps.

    Codes are assigned in sorted order over the training values, so the
    mapping is deterministic. Values unseen at fit time map to the
    reserved code ``len(map)``.
    """

    maps: dict[int, dict[str, int]]

    @classmethod
    def fit(cls, rows: list[list], feature_kinds: list[str]) -> "LabelEncoder":
        maps: dict[int, dict[str, int]] = {}
        for pos, kind in enumerate(feature_kinds):
            if kind != "categorical":
                continue
            values = sorted({row[pos] for row in rows})
            maps[pos] = {v: i for i, v in enumerate(values)}
        return cls(maps)

    def encode(self, pos: int, value: str) -> int:
        table = self.maps[pos]
        return table.get(value, len(table))


@dataclass
class GroupingTable:
    """Total map from raw attack name to broad category."""

    mapping: dict[str, str]

    @classmethod
    def from_file(cls, path) -> "GroupingTable":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataError(f"grouping table {path}: invalid JSON ({exc})")
        if not isinstance(payload, dict):
            raise DataError(f"grouping table {path}: expected an object of category -> [names]")
        mapping: dict[str, str] = {}
        for category, names in payload.items():
            if category == NORMAL:
                raise DataError(f"grouping table {path}: '{NORMAL}' is reserved")
            for name in names:
                if name in mapping:
                    raise DataError(f"grouping table {path}: attack name '{name}' listed twice")
                mapping[name] = category
        return cls(mapping)

    @property
    def categories(self) -> list[str]:
        return sorted(set(self.mapping.values()))


@dataclass
class NoiseSpec:
    """Symmetric label-noise parameters: flip rate rho (percent) and seed."""

    rho: float
    seed: int

    def __post_init__(self):
        if not 0 <= self.rho < 50:
            raise DataError(f"rho must be in [0, 50), got {self.rho}")


@dataclass
class Dataset:
    """Feature matrix plus per-sample labels, names, and categories."""

    features: np.ndarray
    binary_label: np.ndarray
    attack_name: np.ndarray
    category: np.ndarray
    noisy_labels: bool = False
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.binary_label = np.asarray(self.binary_label, dtype=np.uint8)
        self.attack_name = np.asarray(self.attack_name, dtype=object)
        self.category = np.asarray(self.category, dtype=object)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def validate(self):
        if self.n < 1:
            raise DataError("dataset is empty")
        if not np.all(np.isfinite(self.features)):
            raise DataError("dataset contains non-finite feature values")
        lengths = {len(self.binary_label), len(self.attack_name), len(self.category), self.n}
        if len(lengths) != 1:
            raise DataError("dataset fields have inconsistent lengths")
        if not self.noisy_labels:
            normal = self.category == NORMAL
            if not np.array_equal(self.binary_label == 0, normal):
                raise DataError("binary labels inconsistent with Normal category")

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.features[idx],
            self.binary_label[idx],
            self.attack_name[idx],
            self.category[idx],
            noisy_labels=self.noisy_labels,
            warnings=list(self.warnings),
        )


def load_schema(path) -> ColumnSpec:
    """Read the sidecar schema: one column kind per line.

    The label line must carry the normal-traffic token, e.g. ``label:normal``.
    Blank lines and ``#`` comments are skipped.
    """
    kinds: list[str] = []
    normal_token = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("label"):
                if ":" not in line:
                    raise DataError(
                        f"schema {path}:{lineno}: label column must name the normal "
                        "token, e.g. 'label:normal'"
                    )
                _, token = line.split(":", 1)
                normal_token = token.strip()
                if not normal_token:
                    raise DataError(f"schema {path}:{lineno}: empty normal token")
                kinds.append("label")
            else:
                kinds.append(line)
    if normal_token is None:
        raise DataError(f"schema {path}: no label column declared")
    return ColumnSpec(kinds, normal_token)


def load_csv(path, spec: ColumnSpec, header: bool = False) -> RawDataset:
    """Parse a CSV file against ``spec``.

    Rows with the wrong column count or unparseable numeric fields raise
    DataError naming the offending 1-based data row.
    """
    feature_kinds = [k for k in spec.kinds if k in ("numeric", "categorical")]
    rows: list[list] = []
    labels: list[str] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        if header:
            next(reader, None)
        for row_index, record in enumerate(reader, start=1):
            if not record:
                continue
            if len(record) != spec.n_columns:
                raise DataError(
                    f"{path}: row {row_index} has {len(record)} fields, "
                    f"expected {spec.n_columns}"
                )
            features: list = []
            label = None
            for value, kind in zip(record, spec.kinds):
                if kind == "ignore":
                    continue
                if kind == "label":
                    label = value.strip()
                elif kind == "numeric":
                    try:
                        features.append(float(value))
                    except ValueError:
                        raise DataError(
                            f"{path}: row {row_index}: cannot parse numeric field {value!r}"
                        )
                else:
                    features.append(value.strip())
            rows.append(features)
            labels.append(label)
    if not rows:
        raise DataError(f"{path}: no rows")
    return RawDataset(rows, labels, feature_kinds, spec.normal_token)


def encode_and_normalize(
    raw: RawDataset, encoder: LabelEncoder | None = None
) -> tuple[Dataset, LabelEncoder]:
    """Encode categoricals to integer codes and scale each sample to unit L2 norm.

    Pass the training-time encoder when transforming test data; unseen
    categories then map to the reserved unknown code. All-zero feature
    vectors pass through unchanged (no division by zero).
    """
    if encoder is None:
        encoder = LabelEncoder.fit(raw.rows, raw.feature_kinds)
    n = len(raw.rows)
    d = len(raw.feature_kinds)
    features = np.empty((n, d), dtype=np.float64)
    for i, row in enumerate(raw.rows):
        for pos, (value, kind) in enumerate(zip(row, raw.feature_kinds)):
            if kind == "categorical":
                features[i, pos] = encoder.encode(pos, value)
            else:
                features[i, pos] = value
    norms = np.sqrt(np.einsum("ij,ij->i", features, features))
    nonzero = norms > 0
    features[nonzero] /= norms[nonzero, None]

    labels = np.array(raw.labels, dtype=object)
    binary = (labels != raw.normal_token).astype(np.uint8)
    category = np.where(binary == 1, UNGROUPED, NORMAL).astype(object)
    dataset = Dataset(features, binary, labels, category)
    dataset.validate()
    return dataset, encoder


def group_attacks(dataset: Dataset, table: GroupingTable) -> Dataset:
    """Assign broad categories to malicious samples via the grouping table.

    Every malicious attack name must appear in the table; unknown names
    raise DataError listing them.
    """
    category = dataset.category.copy()
    unknown = set()
    for i in range(dataset.n):
        if category[i] == NORMAL:
            continue
        name = dataset.attack_name[i]
        mapped = table.mapping.get(name)
        if mapped is None:
            unknown.add(name)
        else:
            category[i] = mapped
    if unknown:
        raise DataError(f"unknown attack names: {sorted(unknown)}")
    return Dataset(
        dataset.features,
        dataset.binary_label,
        dataset.attack_name,
        category,
        noisy_labels=dataset.noisy_labels,
        warnings=list(dataset.warnings),
    )


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def split(
    dataset: Dataset, train_fraction: float, stratified: bool = True, seed: int = 0
) -> tuple[Dataset, Dataset]:
    """Disjoint, exhaustive train/test split, reproducible under seed.

    Stratified mode splits within each category so per-category counts on
    each side stay within one sample of the target fraction.
    """
    if dataset.n < 2:
        raise DataError("split needs at least 2 samples")
    if not 0 < train_fraction < 1:
        raise DataError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    if stratified:
        train_idx: list[np.ndarray] = []
        test_idx: list[np.ndarray] = []
        for cat in sorted(set(dataset.category.tolist())):
            members = np.nonzero(dataset.category == cat)[0]
            perm = members[rng.permutation(members.size)]
            take = _round_half_up(train_fraction * members.size)
            train_idx.append(perm[:take])
            test_idx.append(perm[take:])
        train = np.sort(np.concatenate(train_idx))
        test = np.sort(np.concatenate(test_idx))
    else:
        perm = rng.permutation(dataset.n)
        take = _round_half_up(train_fraction * dataset.n)
        train = np.sort(perm[:take])
        test = np.sort(perm[take:])
    if train.size == 0 or test.size == 0:
        raise DataError(
            f"train_fraction {train_fraction} leaves an empty side for n={dataset.n}"
        )
    return dataset.subset(train), dataset.subset(test)


@dataclass
class Partition:
    """Per-node datasets for federated training, one attack category each."""

    node_datasets: list[Dataset]
    categories: list[str]
    replacement_used: bool = False

    @property
    def n(self) -> int:
        return len(self.node_datasets)


def partition_federated(
    dataset: Dataset,
    n: int,
    table: GroupingTable | None = None,
    seed: int = 0,
    categories: list[str] | None = None,
) -> Partition:
    """Build D(1)..D(n): all malicious samples of one category per node,
    plus normals at a 1:1 ratio.

    Normals are drawn without replacement from a shuffled shared pool so
    nodes get disjoint normal subsets; once the pool runs out the
    remainder is drawn with replacement and the partition is flagged.
    """
    if table is not None:
        dataset = group_attacks(dataset, table)
    if categories is None:
        categories = sorted(set(dataset.category.tolist()) - {NORMAL})
    if len(categories) != n:
        raise DataError(
            f"partition: {len(categories)} attack categories for n={n} nodes"
        )
    normal_idx = np.nonzero(dataset.category == NORMAL)[0]
    if normal_idx.size == 0:
        raise DataError("partition: no normal samples available")

    rng = np.random.default_rng(seed)
    pool = normal_idx[rng.permutation(normal_idx.size)]
    cursor = 0
    replacement_used = False
    nodes: list[Dataset] = []
    for cat in categories:
        mal_idx = np.nonzero(dataset.category == cat)[0]
        if mal_idx.size == 0:
            raise DataError(f"partition: category '{cat}' has no malicious samples")
        want = mal_idx.size
        take = pool[cursor : cursor + want]
        cursor += take.size
        if take.size < want:
            extra = rng.choice(normal_idx, size=want - take.size, replace=True)
            take = np.concatenate([take, extra])
            replacement_used = True
        node = dataset.subset(np.concatenate([mal_idx, take]))
        if replacement_used:
            node.warnings.append("normal pool exhausted; sampled with replacement")
        nodes.append(node)
    return Partition(nodes, list(categories), replacement_used)


def inject_sln_noise(dataset: Dataset, spec: NoiseSpec) -> tuple[Dataset, np.ndarray]:
    """Flip each binary label independently with probability rho percent.

    Per sample, one uniform draw v in [0, 1]; the label flips iff
    100*v <= rho. Features and categories are untouched; the returned
    dataset is marked noisy when any flip occurred so category-based
    reporting can be suppressed.
    """
    rng = np.random.default_rng(spec.seed)
    v = rng.random(dataset.n)
    flip = 100.0 * v <= spec.rho
    flipped_indices = np.nonzero(flip)[0]
    labels = dataset.binary_label.copy()
    labels[flipped_indices] ^= 1
    noisy = Dataset(
        dataset.features,
        labels,
        dataset.attack_name,
        dataset.category,
        noisy_labels=dataset.noisy_labels or flipped_indices.size > 0,
        warnings=list(dataset.warnings),
    )
    return noisy, flipped_indices


SYNTH_PRESETS = ("separable", "overlapping", "xor")

_DEFAULT_ATTACK_SIZES = {"DoS": 100, "Probe": 100, "R2L": 100, "U2R": 100, NORMAL: 400}

# Cluster placement per preset: category -> (axis, distance from origin in stds).
# "overlapping" pulls R2L/U2R close to the normal cluster at the origin.
_CLUSTER_PLANS = {
    "separable": {"DoS": (0, 8.0), "Probe": (1, 8.0), "R2L": (2, 8.0), "U2R": (3, 8.0)},
    "overlapping": {"DoS": (0, 6.0), "Probe": (1, 6.0), "R2L": (2, 1.5), "U2R": (3, 1.5)},
}


def synth_generate(
    preset: str,
    sizes: dict[str, int] | None = None,
    seed: int = 0,
    dim: int = 6,
) -> Dataset:
    """Generate a desk-scale synthetic dataset.

    separable: one tight Gaussian cluster per attack category, far from
    the normal cluster. overlapping: same layout but R2L and U2R sit close
    to normal traffic. xor: 2-D four-corner pattern (threat on the
    off-diagonal corners) embedded in ``dim`` dimensions; a linear model
    cannot separate it.
    """
    if preset not in SYNTH_PRESETS:
        raise DataError(f"unknown preset '{preset}'; choose from {SYNTH_PRESETS}")
    rng = np.random.default_rng(seed)

    if preset == "xor":
        sizes = dict(sizes) if sizes else {"Attack": 400, NORMAL: 400}
        if NORMAL not in sizes:
            raise DataError("xor preset needs a Normal count")
        _validate_sizes(sizes)
        if dim < 2:
            raise DataError("xor preset needs dim >= 2")
        blocks = []
        corner = 1.0
        std = 0.2
        for cat in sorted(sizes):
            count = sizes[cat]
            corners = [(corner, corner), (-corner, -corner)] if cat == NORMAL else [
                (corner, -corner),
                (-corner, corner),
            ]
            first = count - count // 2
            for (cx, cy), m in zip(corners, (first, count // 2)):
                x = rng.normal(0.0, std, size=(m, dim))
                x[:, 0] += cx
                x[:, 1] += cy
                blocks.append((cat, x))
        return _assemble(blocks, rng)

    sizes = dict(sizes) if sizes else dict(_DEFAULT_ATTACK_SIZES)
    if NORMAL not in sizes:
        raise DataError(f"preset '{preset}' needs a Normal count")
    _validate_sizes(sizes)
    plan = _CLUSTER_PLANS[preset]
    attack_cats = sorted(c for c in sizes if c != NORMAL)
    placements = {
        cat: plan.get(cat, (j % dim, 6.0)) for j, cat in enumerate(attack_cats)
    }
    max_axis = max((axis for axis, _ in placements.values()), default=0)
    if dim <= max_axis:
        raise DataError(f"dim={dim} too small for clusters on axis {max_axis}")
    blocks = []
    for cat in attack_cats:
        axis, distance = placements[cat]
        x = rng.normal(0.0, 1.0, size=(sizes[cat], dim))
        x[:, axis] += distance
        blocks.append((cat, x))
    blocks.append((NORMAL, rng.normal(0.0, 1.0, size=(sizes[NORMAL], dim))))
    return _assemble(blocks, rng)


def _validate_sizes(sizes: dict[str, int]):
    for cat, count in sizes.items():
        if count < 1:
            raise DataError(f"size for category '{cat}' must be >= 1, got {count}")


def _assemble(blocks, rng) -> Dataset:
    features = np.concatenate([x for _, x in blocks])
    category = np.concatenate([np.full(len(x), cat, dtype=object) for cat, x in blocks])
    perm = rng.permutation(features.shape[0])
    features = features[perm]
    category = category[perm]
    binary = (category != NORMAL).astype(np.uint8)
    names = np.where(binary == 1, category, "normal").astype(object)
    dataset = Dataset(features, binary, names, category)
    dataset.validate()
    return dataset


def save_dataset(dataset: Dataset, path):
    """Write the dataset artifact as versioned JSON."""
    payload = {
        "format": DATASET_FORMAT,
        "version": DATASET_VERSION,
        "noisy_labels": dataset.noisy_labels,
        "warnings": dataset.warnings,
        "binary_label": dataset.binary_label.tolist(),
        "attack_name": dataset.attack_name.tolist(),
        "category": dataset.category.tolist(),
        "features": dataset.features.tolist(),
    }
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_dataset(path) -> Dataset:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid dataset file ({exc})")
    if payload.get("format") != DATASET_FORMAT:
        raise DataError(f"{path}: not a {DATASET_FORMAT} file")
    if payload.get("version") != DATASET_VERSION:
        raise DataError(f"{path}: unsupported dataset version {payload.get('version')}")
    dataset = Dataset(
        np.array(payload["features"], dtype=np.float64),
        np.array(payload["binary_label"], dtype=np.uint8),
        np.array(payload["attack_name"], dtype=object),
        np.array(payload["category"], dtype=object),
        noisy_labels=payload["noisy_labels"],
        warnings=list(payload.get("warnings", [])),
    )
    dataset.validate()
    return dataset


ENCODER_FORMAT = "phec-encoder"


def save_encoder(encoder: LabelEncoder, path):
    payload = {
        "format": ENCODER_FORMAT,
        "version": DATASET_VERSION,
        "maps": {str(pos): table for pos, table in encoder.maps.items()},
    }
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_encoder(path) -> LabelEncoder:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid encoder file ({exc})")
    if payload.get("format") != ENCODER_FORMAT:
        raise DataError(f"{path}: not a {ENCODER_FORMAT} file")
    return LabelEncoder({int(pos): table for pos, table in payload["maps"].items()})


def split_seed(seed: int) -> int:
    """Named sub-stream for the train/validation split."""
    return subseed(seed, "split")
