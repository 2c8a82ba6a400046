"""Semantic-embedding framework with a bounded information budget.

The mapper projects visual features into descriptor space (output dim equals
the descriptor dim) and is trained with a structured ranking hinge on sampled
embeddings, subject to an upper bound on the batch KL estimate. The bound is
enforced by projected dual ascent: after every optimizer step,

    beta <- max(0, beta + dual_step * (kl_batch - bound))

so the multiplier never goes negative and rises whenever the constraint is
violated. `bound = inf` disables the constraint entirely (beta pinned at 0),
which together with `variance_mode="zero"` recovers a plain deterministic
ranking embedding for ablations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from . import mapper as mp
from .data import DatasetBundle
from .errors import ConfigError, ContractError, TrainingError

VARIANCE_MODES = ("learned", "unit", "zero")

EMBED_LOG_COLUMNS = ("epoch", "hinge", "kl", "beta", "seen_acc", "unseen_acc", "H")


@dataclass
class EmbedConfig:
    margin: float = 1.0
    bound: float = 0.1            # math.inf disables the constraint
    dual_step: float = 0.05
    dual_init: float = 1.0
    lr: float = 1e-3
    epochs: int = 80
    batch_size: int = 64
    hidden: int = 256
    samples: int = 1              # posterior draws per example per step
    variance_mode: str = "learned"
    seed: int = 0

    def validate(self):
        if self.margin <= 0:
            raise ConfigError("margin must be positive")
        if self.bound < 0:
            raise ConfigError("bound must be nonnegative")
        if self.variance_mode not in VARIANCE_MODES:
            raise ConfigError(f"variance_mode must be one of {VARIANCE_MODES}")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if min(self.dual_step, self.lr) <= 0 or min(self.epochs, self.batch_size) < 1:
            raise ConfigError("invalid embedding training hyperparameters")
        if self.constrained and self.variance_mode == "zero":
            raise ConfigError("a zero-variance head has no posterior to bound; "
                              "set bound = inf to disable the constraint")
        return self

    @property
    def constrained(self):
        return math.isfinite(self.bound)


@dataclass
class DualState:
    beta: float
    kl_estimate: float = 0.0

    def update(self, kl_value, step_size, bound):
        self.kl_estimate = kl_value
        self.beta = max(0.0, self.beta + step_size * (kl_value - bound))
        return self.beta


def ranking_hinge(z, a_pos, a_neg, margin):
    """Batch mean of max(0, margin - a_pos.z + a_neg.z) over row dot products.

    `z` is a graph node; the descriptors are data. Rows where the negative
    descriptor equals the positive one violate the sampling contract.
    """
    a_pos = np.asarray(a_pos)
    a_neg = np.asarray(a_neg)
    if a_pos.shape != a_neg.shape or a_pos.shape != z.value.shape:
        raise ContractError(f"descriptor shapes {a_pos.shape}/{a_neg.shape} "
                            f"vs embeddings {z.value.shape}")
    same = np.all(a_pos == a_neg, axis=1)
    if same.any():
        raise ContractError(f"negative descriptor equals positive on row {int(np.flatnonzero(same)[0])}")
    tape = z.tape
    pos = ad.row_sum(ad.mul(z, tape.const(a_pos, name="a_pos")))
    neg = ad.row_sum(ad.mul(z, tape.const(a_neg, name="a_neg")))
    return ad.reduce_mean(ad.relu(ad.add(ad.sub(neg, pos), margin)))


def predict_embed(params: mp.MapperParams, x, attributes, candidate_classes):
    """Nearest-descriptor labels by dot product; ties go to the smallest id."""
    candidates = np.sort(np.asarray(candidate_classes))
    if candidates.size == 0:
        raise ContractError("candidate class set is empty")
    scores = mp.map_point(params, x) @ np.asarray(attributes)[candidates].T
    return candidates[np.argmax(scores, axis=1)]


def _epoch_negatives(rng, labels, class_pool):
    """One uniformly random other-class id per example."""
    pool = np.asarray(class_pool)
    if pool.size < 2:
        raise ContractError("need at least two classes to draw negatives")
    draws = pool[rng.integers(0, pool.size, size=labels.size)]
    while True:
        clash = draws == labels
        if not clash.any():
            return draws
        draws[clash] = pool[rng.integers(0, pool.size, size=int(clash.sum()))]


def train_embed(bundle: DatasetBundle, config: EmbedConfig):
    """Optimize the mapper; returns (params, per-epoch log rows)."""
    config.validate()
    d_a = bundle.attribute_dim
    rng = np.random.default_rng(config.seed)
    params = mp.MapperParams.init(bundle.feature_dim, d_a, hidden=config.hidden, rng=rng)
    opt = ad.AdamState(params.tensors(), lr=config.lr)
    dual = DualState(beta=config.dual_init if config.constrained else 0.0)

    features = bundle.features
    labels = bundle.labels
    attrs = bundle.attributes
    train_idx = bundle.train_index
    log_rows = []
    step = 0

    for epoch in range(config.epochs):
        order = rng.permutation(train_idx)
        negatives = _epoch_negatives(rng, labels, bundle.seen_classes)
        hinge_sum = kl_sum = 0.0
        n_batches = 0
        for start in range(0, order.size, config.batch_size):
            batch = order[start: start + config.batch_size]
            x = features[batch]
            a_pos = attrs[labels[batch]]
            a_neg = attrs[negatives[batch]]
            if config.samples > 1:
                reps = config.samples
                x = np.repeat(x, reps, axis=0)
                a_pos = np.repeat(a_pos, reps, axis=0)
                a_neg = np.repeat(a_neg, reps, axis=0)

            tape = ad.Tape()
            nodes = mp.bind(tape, params)
            mu, log_var = mp.posterior_graph(tape, nodes, tape.const(x, name="x"))
            if config.variance_mode == "zero":
                z = mu
                kl_value = 0.0
                kl_node = None
            else:
                if config.variance_mode == "unit":
                    log_var = tape.const(np.zeros(mu.value.shape), name="unit_log_var")
                eps = rng.standard_normal(mu.value.shape)
                z = mp.sample_graph(tape, mu, log_var, eps)
                kl_node = mp.kl_graph(tape, mu, log_var)
                kl_value = float(kl_node.value[0, 0])

            loss = ranking_hinge(z, a_pos, a_neg, config.margin)
            hinge_value = float(loss.value[0, 0])
            if config.constrained:
                loss = ad.add(loss, ad.mul(ad.sub(kl_node, config.bound), dual.beta))
            if not np.isfinite(loss.value).all():
                raise TrainingError(f"non-finite loss at step {step}", step=step)

            ad.backward(loss)
            opt.step(params.tensors(), [n.grad for n in nodes])
            if config.constrained:
                dual.update(kl_value, config.dual_step, config.bound)

            hinge_sum += hinge_value
            kl_sum += kl_value
            n_batches += 1
            step += 1

        metrics = _embed_epoch_metrics(bundle, params)
        log_rows.append({
            "epoch": epoch,
            "hinge": hinge_sum / n_batches,
            "kl": kl_sum / n_batches,
            "beta": dual.beta,
            **metrics,
        })
    return params, log_rows


def _embed_epoch_metrics(bundle, params):
    from .evaluation import evaluate  # local import; evaluation also imports mapper

    m = evaluate(bundle, params, model=None, mode="embedding")
    return {"seen_acc": m.S, "unseen_acc": m.U, "H": m.H}


def plain_ranking_ablation(config: EmbedConfig) -> EmbedConfig:
    """The unconstrained deterministic baseline: bound off, zero-variance head."""
    return replace(config, bound=math.inf, variance_mode="zero")
