"""Final classification and the generalized zero-shot evaluation protocol.

Accuracy is per-class top-1: every class counts equally however many test
examples it has. U averages over unseen test classes, S over seen test
classes, and the headline number is their harmonic mean
H = 2*S*U / (S + U), defined as 0 when either side is 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import mapper as mp
from .data import DatasetBundle
from .errors import ConfigError, ContractError
from .serialize import load_checkpoint, save_checkpoint

METRICS_CSV_HEADER = "run_id,mode,U,S,H,seed"


@dataclass
class GzslMetrics:
    U: float
    S: float
    H: float

    def csv_row(self, run_id, mode, seed):
        return f"{run_id},{mode},{self.U:.9g},{self.S:.9g},{self.H:.9g},{seed}"


@dataclass
class SoftmaxModel:
    weight: np.ndarray        # feature_dim x n_classes
    bias: np.ndarray          # 1 x n_classes
    classes: np.ndarray       # class id per logit column, ascending

    def logits(self, x):
        return np.asarray(x) @ self.weight + self.bias

    def predict(self, x):
        return self.classes[np.argmax(self.logits(x), axis=1)]


@dataclass
class FinalClassifierConfig:
    epochs: int = 600
    lr: float = 0.1

    def validate(self):
        if self.epochs < 1 or self.lr <= 0:
            raise ConfigError("invalid final classifier configuration")
        return self


def fit_softmax(x, y_index, n_classes, epochs, lr):
    """Full-batch Adam on cross-entropy from zero init; no randomness anywhere."""
    x = np.asarray(x, dtype=np.float32)
    y_index = np.asarray(y_index)
    weight = np.zeros((x.shape[1], n_classes), dtype=np.float32)
    bias = np.zeros((1, n_classes), dtype=np.float32)
    opt = ad.AdamState([weight, bias], lr=lr)
    for _ in range(epochs):
        tape = ad.Tape()
        wn = tape.param(weight, name="w")
        bn = tape.param(bias, name="b")
        loss = ad.softmax_cross_entropy(ad.bias_add(ad.matmul(tape.const(x), wn), bn), y_index)
        ad.backward(loss)
        opt.step([weight, bias], [wn.grad, bn.grad])
    return weight, bias


def train_final_softmax(z_seen, y_seen, z_unseen, y_unseen,
                        config: FinalClassifierConfig | None = None,
                        expected_classes=None) -> SoftmaxModel:
    """Softmax over the union of classes from real seen and synthetic unseen rows.

    With `expected_classes` given, every expected class must have at least one
    training row; the error lists the ones that do not.
    """
    config = (config or FinalClassifierConfig()).validate()
    z = np.concatenate([np.asarray(z_seen), np.asarray(z_unseen)], axis=0)
    y = np.concatenate([np.asarray(y_seen), np.asarray(y_unseen)])
    classes = np.unique(y)
    if expected_classes is not None:
        missing = np.setdiff1d(np.asarray(expected_classes), classes)
        if missing.size:
            raise ContractError(f"classes without training rows: {missing.tolist()}")
        classes = np.unique(np.asarray(expected_classes))
    index_of = {int(c): i for i, c in enumerate(classes)}
    y_index = np.array([index_of[int(v)] for v in y])
    weight, bias = fit_softmax(z, y_index, classes.size, config.epochs, config.lr)
    return SoftmaxModel(weight=weight, bias=bias, classes=classes)


def per_class_top1(predictions, labels, class_set):
    """Mean over classes of within-class accuracy, in percent."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    class_set = np.asarray(class_set)
    if class_set.size == 0:
        raise ContractError("class set is empty")
    accs = []
    for c in class_set:
        members = labels == c
        if not members.any():
            raise ContractError(f"class {int(c)} has no test examples")
        accs.append(float(np.mean(predictions[members] == c)))
    return 100.0 * float(np.mean(accs))


def harmonic_mean(u, s):
    if u < 0 or s < 0:
        raise ContractError("accuracies must be nonnegative")
    if u == 0 or s == 0:
        return 0.0
    return 2.0 * s * u / (s + u)


def evaluate(bundle: DatasetBundle, mapper_params: mp.MapperParams, model,
             mode) -> GzslMetrics:
    """GZSL metrics over the full candidate set.

    mode "generation": `model` is the final SoftmaxModel over mapped features.
    mode "embedding": nearest-descriptor prediction; `model` is unused.
    """
    if mode == "generation":
        z = mp.map_point(mapper_params, bundle.features[bundle.test_index])
        predictions = model.predict(z)
    elif mode == "embedding":
        from .embedding import predict_embed

        predictions = predict_embed(mapper_params, bundle.features[bundle.test_index],
                                    bundle.attributes, bundle.all_classes)
    else:
        raise ConfigError(f"unknown evaluation mode: {mode!r}")
    labels = bundle.labels[bundle.test_index]
    u = per_class_top1(predictions, labels, bundle.unseen_classes)
    s = per_class_top1(predictions, labels, bundle.seen_classes)
    return GzslMetrics(U=u, S=s, H=harmonic_mean(u, s))


def format_metrics_table(rows):
    """Plain-text table over (run_id, mode, metrics, seed) result rows."""
    header = f"{'run':<24} {'mode':<12} {'U':>7} {'S':>7} {'H':>7} {'seed':>6}"
    lines = [header, "-" * len(header)]
    for run_id, mode, m, seed in rows:
        lines.append(f"{run_id:<24} {mode:<12} {m.U:>7.2f} {m.S:>7.2f} {m.H:>7.2f} {seed:>6}")
    return "\n".join(lines) + "\n"


def save_softmax(path, model: SoftmaxModel, meta=None):
    tensors = {
        "weight": model.weight,
        "bias": model.bias,
        "classes": model.classes.astype(np.float32).reshape(1, -1),
    }
    save_checkpoint(path, "softmax", tensors, meta)


def load_softmax(path):
    _, tensors, meta = load_checkpoint(path, expect_kind="softmax")
    return SoftmaxModel(
        weight=tensors["weight"],
        bias=tensors["bias"],
        classes=tensors["classes"].astype(int).ravel(),
    ), meta
