"""Dataset bundles, the on-disk text format, GZSL splits, and the synthetic
redundancy-planted benchmark.

The synthetic generator plants a label-relevant signal block (a fixed linear
image of the class descriptor) next to a label-irrelevant redundancy block
(background cluster centers shared across classes, mimicking e.g. a common
living environment). A bottleneck that discards the cluster identity loses
nothing discriminative; that is the structure every A/B experiment probes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractError, LoadError

FLOAT_FORMAT = "%.9g"


@dataclass
class DatasetBundle:
    """Visual features with labels, per-class descriptors, and GZSL splits."""

    features: np.ndarray       # N x d_x float32
    labels: np.ndarray         # N ints in [0, C)
    attributes: np.ndarray     # C x d_a float32, row index = class id
    seen_classes: np.ndarray   # sorted, disjoint from unseen
    unseen_classes: np.ndarray
    train_index: np.ndarray    # indices into features; seen-class examples only
    test_index: np.ndarray

    @property
    def n_examples(self):
        return self.features.shape[0]

    @property
    def n_classes(self):
        return self.attributes.shape[0]

    @property
    def feature_dim(self):
        return self.features.shape[1]

    @property
    def attribute_dim(self):
        return self.attributes.shape[1]

    @property
    def all_classes(self):
        return np.arange(self.n_classes)

    def validate(self):
        n, c = self.n_examples, self.n_classes
        if self.labels.shape != (n,):
            raise ContractError(f"labels shape {self.labels.shape}, expected ({n},)")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= c):
            raise ContractError("label out of range of attribute rows")
        seen = set(self.seen_classes.tolist())
        unseen = set(self.unseen_classes.tolist())
        if seen & unseen:
            raise ContractError(f"split overlap: classes {sorted(seen & unseen)}")
        if seen | unseen != set(range(c)):
            raise ContractError("seen and unseen classes must cover all classes")
        if np.intersect1d(self.train_index, self.test_index).size:
            raise ContractError("train and test indices overlap")
        covered = np.union1d(self.train_index, self.test_index)
        if covered.size != n or (covered != np.arange(n)).any():
            raise ContractError("train and test indices must partition all examples")
        train_labels = set(self.labels[self.train_index].tolist())
        if train_labels - seen:
            raise ContractError("train index contains unseen-class examples")
        test_labels = set(self.labels[self.test_index].tolist())
        if not (test_labels & seen) or not (test_labels & unseen):
            raise ContractError("test index must contain both seen and unseen classes")
        return self

    def class_indices(self, class_id, within=None):
        pool = np.arange(self.n_examples) if within is None else np.asarray(within)
        return pool[self.labels[pool] == class_id]


@dataclass
class SyntheticSpec:
    """Recipe for the redundancy-planted benchmark."""

    seen_classes: int = 10
    unseen_classes: int = 5
    per_class: int = 100
    signal_dim: int = 16
    redundancy_dim: int = 112
    attribute_dim: int = 8
    clusters: int = 4
    noise: float = 0.1
    signal_scale: float = 1.0   # < 1 makes class differences subtle vs background
    train_fraction: float = 0.8
    seed: int = 0

    def validate(self):
        counts = (self.seen_classes, self.unseen_classes, self.per_class,
                  self.signal_dim, self.redundancy_dim, self.attribute_dim, self.clusters)
        if any(v < 1 for v in counts):
            raise ConfigError("all synthetic counts and dimensions must be >= 1")
        if self.unseen_classes < 2:
            raise ConfigError("need at least 2 unseen classes")
        if self.noise < 0:
            raise ConfigError("noise scale must be nonnegative")
        if self.signal_scale <= 0:
            raise ConfigError("signal scale must be positive")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train fraction must lie in (0, 1)")
        return self

    @property
    def n_classes(self):
        return self.seen_classes + self.unseen_classes

    @property
    def feature_dim(self):
        return self.signal_dim + self.redundancy_dim


@dataclass
class SyntheticInfo:
    """Generation internals kept out of the bundle; used by diagnostics."""

    cluster_ids: np.ndarray
    cluster_centers: np.ndarray
    signal_map: np.ndarray


def make_synthetic(spec: SyntheticSpec) -> DatasetBundle:
    return make_synthetic_with_info(spec)[0]


def make_synthetic_with_info(spec: SyntheticSpec):
    """Generate the benchmark; deterministic in spec.seed.

    Per class y: attribute a_y ~ N(0, I). Per example of class y the signal
    block is S a_y + noise and the redundancy block is a background-cluster
    center + noise, the cluster drawn uniformly per example, independent of y.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    c, e = spec.n_classes, spec.per_class
    n = c * e

    attributes = rng.standard_normal((c, spec.attribute_dim))
    # normalize so signal entries have ~signal_scale std regardless of attribute_dim
    signal_map = rng.standard_normal((spec.signal_dim, spec.attribute_dim))
    signal_map *= spec.signal_scale / np.sqrt(spec.attribute_dim)
    cluster_centers = rng.standard_normal((spec.clusters, spec.redundancy_dim))

    labels = np.repeat(np.arange(c), e)
    cluster_ids = rng.integers(0, spec.clusters, size=n)
    signal = attributes[labels] @ signal_map.T + spec.noise * rng.standard_normal((n, spec.signal_dim))
    redundancy = cluster_centers[cluster_ids] + spec.noise * rng.standard_normal((n, spec.redundancy_dim))
    features = np.concatenate([signal, redundancy], axis=1)

    for k in range(spec.clusters):
        if np.unique(labels[cluster_ids == k]).size < 2:
            raise ConfigError(
                f"background cluster {k} not shared by >= 2 classes; "
                "increase per_class or reduce clusters")

    perm = rng.permutation(c)
    seen = np.sort(perm[: spec.seen_classes])
    unseen = np.sort(perm[spec.seen_classes:])

    bundle = DatasetBundle(
        features=features.astype(np.float32),
        labels=labels,
        attributes=attributes.astype(np.float32),
        seen_classes=seen,
        unseen_classes=unseen,
        train_index=np.array([], dtype=int),
        test_index=np.arange(n),
    )
    bundle = split_gzsl(bundle, spec.train_fraction)
    return bundle.validate(), SyntheticInfo(cluster_ids, cluster_centers, signal_map)


def split_gzsl(bundle: DatasetBundle, train_fraction_seen: float) -> DatasetBundle:
    """Assign a fraction of each seen class to train; everything else tests.

    Deterministic: the first floor(fraction * n_y) examples of each seen class
    in index order train (clamped so both sides stay nonempty).
    """
    if not 0 < train_fraction_seen < 1:
        raise ConfigError("train fraction must lie in (0, 1)")
    train = []
    for y in bundle.seen_classes:
        members = np.flatnonzero(bundle.labels == y)
        if members.size < 2:
            raise ContractError(f"seen class {y} has {members.size} examples; need >= 2 to split")
        k = int(train_fraction_seen * members.size)
        k = min(max(k, 1), members.size - 1)
        train.append(members[:k])
    train_index = np.sort(np.concatenate(train))
    mask = np.ones(bundle.n_examples, dtype=bool)
    mask[train_index] = False
    test_index = np.flatnonzero(mask)
    out = DatasetBundle(
        features=bundle.features,
        labels=bundle.labels,
        attributes=bundle.attributes,
        seen_classes=bundle.seen_classes,
        unseen_classes=bundle.unseen_classes,
        train_index=train_index,
        test_index=test_index,
    )
    return out.validate()


# ---------------------------------------------------------------------------
# on-disk format: features.csv, labels.csv, attributes.csv, splits.txt

_FILES = ("features.csv", "labels.csv", "attributes.csv", "splits.txt")


def save_dataset(bundle: DatasetBundle, directory):
    os.makedirs(directory, exist_ok=True)
    _write_matrix(os.path.join(directory, "features.csv"), bundle.features)
    with open(os.path.join(directory, "labels.csv"), "w") as f:
        for y in bundle.labels:
            f.write(f"{int(y)}\n")
    _write_matrix(os.path.join(directory, "attributes.csv"), bundle.attributes)
    with open(os.path.join(directory, "splits.txt"), "w") as f:
        f.write("seen: " + ",".join(str(int(v)) for v in bundle.seen_classes) + "\n")
        f.write("unseen: " + ",".join(str(int(v)) for v in bundle.unseen_classes) + "\n")
        f.write("train: " + ",".join(str(int(v)) for v in bundle.train_index) + "\n")
        f.write("test: " + ",".join(str(int(v)) for v in bundle.test_index) + "\n")


def _write_matrix(path, matrix):
    with open(path, "w") as f:
        for row in matrix:
            f.write(",".join(FLOAT_FORMAT % v for v in row) + "\n")


def load_dataset(directory) -> DatasetBundle:
    for name in _FILES:
        if not os.path.isfile(os.path.join(directory, name)):
            raise LoadError(f"{name}: missing from {directory}")
    features = _read_matrix(os.path.join(directory, "features.csv"))
    attributes = _read_matrix(os.path.join(directory, "attributes.csv"))
    labels = _read_labels(os.path.join(directory, "labels.csv"), features.shape[0],
                          attributes.shape[0])
    seen, unseen, train, test = _read_splits(os.path.join(directory, "splits.txt"))
    bundle = DatasetBundle(
        features=features,
        labels=labels,
        attributes=attributes,
        seen_classes=seen,
        unseen_classes=unseen,
        train_index=train,
        test_index=test,
    )
    try:
        return bundle.validate()
    except ContractError as exc:
        raise LoadError(str(exc)) from exc


def _read_matrix(path):
    rows = []
    width = None
    with open(path) as f:
        for i, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise LoadError(f"{os.path.basename(path)}: row {i}: "
                                f"expected {width} columns, found {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise LoadError(f"{os.path.basename(path)}: row {i}: {exc}") from None
    if not rows:
        raise LoadError(f"{os.path.basename(path)}: empty")
    return np.array(rows, dtype=np.float32)


def _read_labels(path, n_examples, n_classes):
    labels = []
    with open(path) as f:
        for i, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            try:
                y = int(line)
            except ValueError:
                raise LoadError(f"labels.csv: row {i}: not an integer: {line!r}") from None
            if not 0 <= y < n_classes:
                raise LoadError(f"labels.csv: row {i}: label {y} out of range [0, {n_classes})")
            labels.append(y)
    if len(labels) != n_examples:
        raise LoadError(f"labels.csv: {len(labels)} labels for {n_examples} feature rows")
    return np.array(labels, dtype=int)


def _read_splits(path):
    keys = ("seen", "unseen", "train", "test")
    values = {}
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if len(lines) != 4:
        raise LoadError(f"splits.txt: expected 4 lines, found {len(lines)}")
    for i, (key, line) in enumerate(zip(keys, lines)):
        prefix = key + ":"
        if not line.startswith(prefix):
            raise LoadError(f"splits.txt: line {i + 1} must start with '{prefix}'")
        body = line[len(prefix):].strip()
        try:
            values[key] = np.array([int(v) for v in body.split(",")] if body else [], dtype=int)
        except ValueError:
            raise LoadError(f"splits.txt: line {i + 1}: non-integer entry") from None
    overlap = np.intersect1d(values["seen"], values["unseen"])
    if overlap.size:
        raise LoadError(f"splits.txt: split overlap: class {overlap[0]} in both seen and unseen")
    return values["seen"], values["unseen"], values["train"], values["test"]
