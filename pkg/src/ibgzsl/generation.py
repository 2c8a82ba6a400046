"""Adversarial feature generation with an information-bounded mapper.

A conditional generator produces fake visual features from (descriptor,
noise); the mapper projects both real and fake features into the
redundancy-free space, where a critic scores them. The joint players
(generator, mapper, class centers) minimize

    adversarial term
    + lambda_r * center-margin loss on mapped real features
    + lambda_c * frozen-classifier cross-entropy on fake visual features
    + beta_real * (KL_real - bound) + beta_fake * (KL_fake - bound)

with the two dual variables updated by projected ascent, one per information
constraint. The critic trains n_critic times per joint step, with its weights
clipped to [-clip, clip] in wgan mode (the default; a literal log-loss
minimax mode exists for comparison).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from . import mapper as mp
from .data import DatasetBundle
from .embedding import DualState
from .errors import ConfigError, ContractError, TrainingError
from .evaluation import (
    FinalClassifierConfig,
    SoftmaxModel,
    evaluate,
    fit_softmax,
    train_final_softmax,
)
from .serialize import load_checkpoint, save_checkpoint

ADVERSARIAL_MODES = ("wgan-clip", "minimax")

GEN_LOG_COLUMNS = (
    "step", "epoch", "critic_loss", "adv", "center", "cls",
    "kl_real_pen", "kl_fake_pen", "total",
    "beta_real", "beta_fake", "kl_real", "kl_fake", "critic_wmax",
)


@dataclass
class GeneratorParams:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    NAMES = ("w1", "b1", "w2", "b2")

    @classmethod
    def init(cls, attr_dim, noise_dim, hidden, out_dim, rng):
        def layer(fan_in, fan_out):
            return rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out)).astype(np.float32)

        return cls(
            w1=layer(attr_dim + noise_dim, hidden),
            b1=np.zeros((1, hidden), dtype=np.float32),
            w2=layer(hidden, out_dim),
            b2=np.zeros((1, out_dim), dtype=np.float32),
        )

    @property
    def in_dim(self):
        return self.w1.shape[0]

    @property
    def out_dim(self):
        return self.w2.shape[1]

    def tensors(self):
        return [self.w1, self.b1, self.w2, self.b2]


@dataclass
class CriticParams:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    NAMES = ("w1", "b1", "w2", "b2")

    @classmethod
    def init(cls, in_dim, hidden, rng):
        def layer(fan_in, fan_out):
            return rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out)).astype(np.float32)

        return cls(
            w1=layer(in_dim, hidden),
            b1=np.zeros((1, hidden), dtype=np.float32),
            w2=layer(hidden, 1),
            b2=np.zeros((1, 1), dtype=np.float32),
        )

    def tensors(self):
        return [self.w1, self.b1, self.w2, self.b2]

    def max_abs_weight(self):
        return max(float(np.max(np.abs(t))) for t in self.tensors())


@dataclass
class ClassCenters:
    values: np.ndarray        # one row per seen class, in `classes` order
    classes: np.ndarray       # sorted seen class ids

    @classmethod
    def zeros(cls, seen_classes, dim):
        seen = np.sort(np.asarray(seen_classes))
        return cls(values=np.zeros((seen.size, dim), dtype=np.float32), classes=seen)

    def row_index(self, labels):
        index_of = {int(c): i for i, c in enumerate(self.classes)}
        return np.array([index_of[int(y)] for y in labels])


@dataclass
class GenConfig:
    """Desk-scale defaults, calibrated on the bundled synthetic benchmark.

    The narrow mapped space (d_z 8) is what makes the information bound earn
    its keep at this scale; at wide d_z a linear readout can discard the
    redundancy on its own and the constraint only taxes synthesis.
    """

    lambda_r: float = 0.1
    lambda_c: float = 1.0
    bound: float = 0.1            # math.inf disables both information constraints
    center_margin: float = 1.0
    n_critic: int = 5
    clip: float = 0.01
    lr: float = 1e-3
    lr_critic: float = 1e-3
    batch_size: int = 64
    d_z: int = 8
    noise_dim: int = 0            # 0 means: match the attribute dimension
    gen_hidden: int = 256
    mapper_hidden: int = 256
    critic_hidden: int = 256
    dual_step: float = 0.005
    dual_init: float = 0.0
    epochs: int = 60
    warmup_epochs: int = 1        # epochs before the center term switches on
    mode: str = "wgan-clip"
    syn_per_class: int = 400
    mi_constraint: bool = True    # False pins both dual variables to 0
    center_enabled: bool = True
    mapper_identity: bool = False  # pass features through unmapped (d_z = d_x)
    use_sampled_z: bool = False   # sample instead of posterior mean in synthesis
    pretrain_epochs: int = 500
    pretrain_lr: float = 0.05
    seed: int = 0

    def validate(self):
        if self.lambda_r <= 0 or self.lambda_c <= 0:
            raise ConfigError("lambda_r and lambda_c must be positive")
        if self.n_critic < 1:
            raise ConfigError("n_critic must be >= 1")
        if self.mode not in ADVERSARIAL_MODES:
            raise ConfigError(f"mode must be one of {ADVERSARIAL_MODES}")
        if self.clip <= 0:
            raise ConfigError("clip bound must be positive")
        if self.bound < 0:
            raise ConfigError("bound must be nonnegative")
        if self.syn_per_class < 1:
            raise ConfigError("syn_per_class must be >= 1")
        if self.warmup_epochs < 0 or self.epochs < 1:
            raise ConfigError("invalid epoch counts")
        if min(self.lr, self.lr_critic, self.dual_step, self.pretrain_lr) <= 0:
            raise ConfigError("learning rates and dual step must be positive")
        if self.mapper_identity and self.constrained:
            raise ConfigError("an identity mapper has no posterior to bound; "
                              "disable mi_constraint or set bound = inf")
        return self

    @property
    def constrained(self):
        return self.mi_constraint and math.isfinite(self.bound)


# ---------------------------------------------------------------------------
# parameter binding and graph builders


def _bind(tape, tensors, names, prefix, trainable):
    reg = tape.param if trainable else tape.const
    return [reg(t, name=f"{prefix}.{n}") for t, n in zip(tensors, names)]


def generate_graph(tape, gen_nodes, attrs, eps):
    """Fake visual features for (descriptor, noise) rows given as data."""
    attrs = np.asarray(attrs)
    eps = np.asarray(eps)
    if attrs.shape[0] != eps.shape[0]:
        raise ContractError(f"{attrs.shape[0]} descriptors vs {eps.shape[0]} noise rows")
    w1, b1, w2, b2 = gen_nodes
    stacked = tape.const(np.concatenate([attrs, eps], axis=1), name="gen_in")
    hidden = ad.leaky_relu(ad.bias_add(ad.matmul(stacked, w1), b1), slope=0.2)
    return ad.bias_add(ad.matmul(hidden, w2), b2)


def critic_graph(tape, critic_nodes, z):
    w1, b1, w2, b2 = critic_nodes
    hidden = ad.relu(ad.bias_add(ad.matmul(z, w1), b1))
    return ad.bias_add(ad.matmul(hidden, w2), b2)


def critic_loss_graph(tape, critic_nodes, z_real, z_fake, mode):
    score_real = critic_graph(tape, critic_nodes, z_real)
    score_fake = critic_graph(tape, critic_nodes, z_fake)
    if mode == "wgan-clip":
        return ad.sub(ad.reduce_mean(score_fake), ad.reduce_mean(score_real))
    if mode == "minimax":
        log_d_real = ad.log(ad.sigmoid(score_real))
        log_one_minus_d_fake = ad.log(ad.sigmoid(ad.mul(score_fake, -1.0)))
        value = ad.add(ad.reduce_mean(log_d_real), ad.reduce_mean(log_one_minus_d_fake))
        return ad.mul(value, -1.0)
    raise ConfigError(f"unknown adversarial mode: {mode!r}")


def generator_adv_graph(tape, critic_nodes, z_fake, mode):
    score_fake = critic_graph(tape, critic_nodes, z_fake)
    if mode == "wgan-clip":
        return ad.mul(ad.reduce_mean(score_fake), -1.0)
    if mode == "minimax":
        return ad.reduce_mean(ad.log(ad.sigmoid(ad.mul(score_fake, -1.0))))
    raise ConfigError(f"unknown adversarial mode: {mode!r}")


def center_margin_graph(tape, centers_node, z, y_rows, y_neg_rows, margin):
    """Batch mean of max(0, margin + |z - c_y|^2 - |z - c_y'|^2)."""
    y_rows = np.asarray(y_rows)
    y_neg_rows = np.asarray(y_neg_rows)
    if (y_rows == y_neg_rows).any():
        bad = int(np.flatnonzero(y_rows == y_neg_rows)[0])
        raise ContractError(f"negative class equals positive class on row {bad}")
    c_pos = ad.gather_rows(centers_node, y_rows)
    c_neg = ad.gather_rows(centers_node, y_neg_rows)
    d_pos = ad.row_sum(ad.square(ad.sub(z, c_pos)))
    d_neg = ad.row_sum(ad.square(ad.sub(z, c_neg)))
    return ad.reduce_mean(ad.relu(ad.add(ad.sub(d_pos, d_neg), margin)))


def classification_loss_graph(tape, classifier: SoftmaxModel, x_fake, labels):
    """Frozen-classifier cross-entropy on fake features; grads reach x_fake only."""
    labels = np.asarray(labels)
    known = np.isin(labels, classifier.classes)
    if not known.all():
        bad = labels[~known][0]
        raise ContractError(f"label {int(bad)} is not a class of the frozen classifier")
    index_of = {int(c): i for i, c in enumerate(classifier.classes)}
    y_index = np.array([index_of[int(v)] for v in labels])
    w = tape.const(classifier.weight, name="frozen_w")
    b = tape.const(classifier.bias, name="frozen_b")
    return ad.softmax_cross_entropy(ad.bias_add(ad.matmul(x_fake, w), b), y_index)


# ---------------------------------------------------------------------------
# array-facing operations


def generate(gen: GeneratorParams, attrs, eps) -> np.ndarray:
    """Tape-free forward pass, bit-identical to generate_graph."""
    attrs = np.asarray(attrs)
    eps = np.asarray(eps)
    if attrs.shape[0] != eps.shape[0]:
        raise ContractError(f"{attrs.shape[0]} descriptors vs {eps.shape[0]} noise rows")
    stacked = np.concatenate([attrs, eps], axis=1).astype(np.float32)
    pre = (stacked.astype(np.float64) @ gen.w1.astype(np.float64)).astype(np.float32) + gen.b1
    hidden = np.where(pre > 0, pre, np.float32(0.2) * pre)
    out = (hidden.astype(np.float64) @ gen.w2.astype(np.float64)).astype(np.float32) + gen.b2
    return out


def adversarial_losses(critic: CriticParams, z_real, z_fake, mode):
    """(critic loss, generator-side loss) values for given batches."""
    tape = ad.Tape()
    nodes = _bind(tape, critic.tensors(), CriticParams.NAMES, "critic", trainable=False)
    zr = tape.const(np.asarray(z_real), name="z_real")
    zf = tape.const(np.asarray(z_fake), name="z_fake")
    c = critic_loss_graph(tape, nodes, zr, zf, mode)
    g = generator_adv_graph(tape, nodes, zf, mode)
    return float(c.value[0, 0]), float(g.value[0, 0])


def pretrain_classifier(bundle: DatasetBundle, epochs=500, lr=0.05) -> SoftmaxModel:
    """Frozen softmax over seen classes, fit on original train features."""
    seen = np.sort(bundle.seen_classes)
    x = bundle.features[bundle.train_index]
    y = bundle.labels[bundle.train_index]
    counts = np.array([(y == c).sum() for c in seen])
    if (counts == 0).any():
        empty = seen[counts == 0].tolist()
        raise ContractError(f"seen classes without train examples: {empty}")
    index_of = {int(c): i for i, c in enumerate(seen)}
    y_index = np.array([index_of[int(v)] for v in y])
    weight, bias = fit_softmax(x, y_index, seen.size, epochs, lr)
    return SoftmaxModel(weight=weight, bias=bias, classes=seen)


def synthesize_unseen(gen: GeneratorParams, mapper_params, attributes, counts,
                      seed=0, use_sampled_z=False):
    """Redundancy-free features per unseen class: count rows labeled with it.

    `counts` maps class id -> count. Noise is fresh per feature, from a
    per-class stream seeded with seed XOR class id, so classes can be
    synthesized independently.
    """
    attributes = np.asarray(attributes)
    if isinstance(counts, dict):
        per_class = {int(c): int(n) for c, n in counts.items()}
    else:
        raise ContractError("counts must map unseen class id -> count")
    blocks, labels = [], []
    for class_id in sorted(per_class):
        n = per_class[class_id]
        if n < 1:
            raise ContractError(f"class {class_id}: count must be >= 1")
        if class_id < 0 or class_id >= attributes.shape[0]:
            raise ContractError(f"class {class_id} has no attribute row")
        rng = np.random.default_rng(seed ^ class_id)
        noise_dim = gen.in_dim - attributes.shape[1]
        eps = rng.standard_normal((n, noise_dim))
        fake_x = generate(gen, np.repeat(attributes[class_id: class_id + 1], n, axis=0), eps)
        if mapper_params is None:
            z = fake_x
        elif use_sampled_z:
            post = mp.map_posterior(mapper_params, fake_x)
            z = mp.sample_reparam(post, rng.standard_normal(post.mu.shape))
        else:
            z = mp.map_point(mapper_params, fake_x)
        blocks.append(z)
        labels.append(np.full(n, class_id))
    return np.concatenate(blocks, axis=0), np.concatenate(labels)


# ---------------------------------------------------------------------------
# training


@dataclass
class GenResult:
    generator: GeneratorParams
    mapper: mp.MapperParams | None
    centers: ClassCenters
    classifier: SoftmaxModel
    log: list


def train_gen(bundle: DatasetBundle, config: GenConfig) -> GenResult:
    config.validate()
    if config.mapper_identity and config.d_z != bundle.feature_dim:
        raise ConfigError("identity mapper requires d_z == feature dim")
    rng = np.random.default_rng(config.seed)
    d_a = bundle.attribute_dim
    noise_dim = config.noise_dim or d_a

    classifier = pretrain_classifier(bundle, config.pretrain_epochs, config.pretrain_lr)
    gen = GeneratorParams.init(d_a, noise_dim, config.gen_hidden, bundle.feature_dim, rng)
    mapper_params = None if config.mapper_identity else mp.MapperParams.init(
        bundle.feature_dim, config.d_z, hidden=config.mapper_hidden, rng=rng)
    critic = CriticParams.init(config.d_z, config.critic_hidden, rng)
    centers = ClassCenters.zeros(bundle.seen_classes, config.d_z)

    joint_tensors = gen.tensors() + (mapper_params.tensors() if mapper_params else []) \
        + [centers.values]
    opt_joint = ad.AdamState(joint_tensors, lr=config.lr)
    opt_critic = ad.AdamState(critic.tensors(), lr=config.lr_critic)
    dual_real = DualState(beta=config.dual_init if config.constrained else 0.0)
    dual_fake = DualState(beta=config.dual_init if config.constrained else 0.0)

    features, labels, attrs = bundle.features, bundle.labels, bundle.attributes
    train_idx = bundle.train_index
    seen_rows = centers.row_index(labels[train_idx])  # row per train example
    row_by_example = np.full(bundle.n_examples, -1)
    row_by_example[train_idx] = seen_rows

    log_rows = []
    step = 0
    centers_ready = False

    def mapped(tape, x_node, nodes):
        """(z sampled, kl node) under the configured mapper."""
        if config.mapper_identity:
            return x_node, None
        mu, log_var = mp.posterior_graph(tape, nodes, x_node)
        z = mp.sample_graph(tape, mu, log_var, rng.standard_normal(mu.value.shape))
        return z, mp.kl_graph(tape, mu, log_var)

    def mapped_arrays(x):
        """Sampled mapped features as plain data, for critic-phase inputs."""
        if config.mapper_identity:
            return np.asarray(x, dtype=np.float32)
        mu, log_var = mp.forward_arrays(mapper_params, x)
        eps = rng.standard_normal(mu.shape).astype(np.float32)
        return mu + np.exp(np.float32(0.5) * log_var) * eps

    for epoch in range(config.epochs):
        center_active = config.center_enabled and epoch >= config.warmup_epochs
        if center_active and not centers_ready:
            mapped_train = mp.map_point(mapper_params, features[train_idx]) \
                if mapper_params else features[train_idx]
            for i, c in enumerate(centers.classes):
                centers.values[i] = mapped_train[labels[train_idx] == c].mean(axis=0)
            centers_ready = True

        order = rng.permutation(train_idx)
        for start in range(0, order.size, config.batch_size):
            batch = order[start: start + config.batch_size]

            # -- critic phase -------------------------------------------------
            # generator and mapper are frozen here, so their forwards run
            # tape-free and enter the critic graph as data
            critic_loss_value = math.nan
            for _ in range(config.n_critic):
                cbatch = rng.choice(train_idx, size=min(config.batch_size, train_idx.size),
                                    replace=False)
                z_real_data = mapped_arrays(features[cbatch])
                fake_x_data = generate(gen, attrs[labels[cbatch]],
                                       rng.standard_normal((cbatch.size, noise_dim)))
                z_fake_data = mapped_arrays(fake_x_data)
                tape = ad.Tape()
                critic_nodes = _bind(tape, critic.tensors(), CriticParams.NAMES,
                                     "critic", trainable=True)
                z_real = tape.const(z_real_data, name="z_real")
                z_fake = tape.const(z_fake_data, name="z_fake")
                loss = critic_loss_graph(tape, critic_nodes, z_real, z_fake, config.mode)
                critic_loss_value = float(loss.value[0, 0])
                if not math.isfinite(critic_loss_value):
                    raise TrainingError(f"non-finite critic loss at step {step}", step=step)
                ad.backward(loss)
                opt_critic.step(critic.tensors(), [n.grad for n in critic_nodes])
                if config.mode == "wgan-clip":
                    ad.clip_weights(critic.tensors(), config.clip)

            # -- joint phase ---------------------------------------------------
            tape = ad.Tape()
            gen_nodes = _bind(tape, gen.tensors(), GeneratorParams.NAMES, "gen", trainable=True)
            map_nodes = mp.bind(tape, mapper_params, trainable=True) if mapper_params else None
            centers_node = tape.param(centers.values, name="centers")
            critic_nodes = _bind(tape, critic.tensors(), CriticParams.NAMES,
                                 "critic", trainable=False)

            x_node = tape.const(features[batch], name="x")
            z_real, kl_real_node = mapped(tape, x_node, map_nodes)
            fake_x = generate_graph(tape, gen_nodes, attrs[labels[batch]],
                                    rng.standard_normal((batch.size, noise_dim)))
            z_fake, kl_fake_node = mapped(tape, fake_x, map_nodes)

            adv = generator_adv_graph(tape, critic_nodes, z_fake, config.mode)
            total = adv
            term_values = {"adv": float(adv.value[0, 0]), "center": 0.0, "cls": 0.0,
                           "kl_real_pen": 0.0, "kl_fake_pen": 0.0}

            if center_active:
                rows = row_by_example[batch]
                neg_rows = _other_rows(rng, rows, centers.classes.size)
                center = ad.mul(center_margin_graph(tape, centers_node, z_real, rows,
                                                    neg_rows, config.center_margin),
                                config.lambda_r)
                term_values["center"] = float(center.value[0, 0])
                total = ad.add(total, center)

            cls = ad.mul(classification_loss_graph(tape, classifier, fake_x, labels[batch]),
                         config.lambda_c)
            term_values["cls"] = float(cls.value[0, 0])
            total = ad.add(total, cls)

            kl_real = float(kl_real_node.value[0, 0]) if kl_real_node is not None else 0.0
            kl_fake = float(kl_fake_node.value[0, 0]) if kl_fake_node is not None else 0.0
            if config.constrained:
                pen_real = ad.mul(ad.sub(kl_real_node, config.bound), dual_real.beta)
                pen_fake = ad.mul(ad.sub(kl_fake_node, config.bound), dual_fake.beta)
                term_values["kl_real_pen"] = float(pen_real.value[0, 0])
                term_values["kl_fake_pen"] = float(pen_fake.value[0, 0])
                total = ad.add(total, ad.add(pen_real, pen_fake))

            total_value = float(sum(term_values.values()))
            if not math.isfinite(total_value):
                raise TrainingError(f"non-finite loss at step {step}", step=step)
            ad.backward(total)
            grads = [n.grad for n in gen_nodes] \
                + ([n.grad for n in map_nodes] if map_nodes else []) \
                + [centers_node.grad]
            opt_joint.step(joint_tensors, grads)
            if config.constrained:
                dual_real.update(kl_real, config.dual_step, config.bound)
                dual_fake.update(kl_fake, config.dual_step, config.bound)

            log_rows.append({
                "step": step, "epoch": epoch, "critic_loss": critic_loss_value,
                **term_values, "total": total_value,
                "beta_real": dual_real.beta, "beta_fake": dual_fake.beta,
                "kl_real": kl_real, "kl_fake": kl_fake,
                "critic_wmax": critic.max_abs_weight(),
            })
            step += 1

    return GenResult(generator=gen, mapper=mapper_params, centers=centers,
                     classifier=classifier, log=log_rows)


def _other_rows(rng, rows, n_rows):
    if n_rows < 2:
        raise ContractError("need at least two seen classes to draw a different one")
    draws = rng.integers(0, n_rows, size=rows.size)
    while True:
        clash = draws == rows
        if not clash.any():
            return draws
        draws[clash] = rng.integers(0, n_rows, size=int(clash.sum()))


# ---------------------------------------------------------------------------
# full pipeline: train, synthesize, fit final classifier, evaluate


def run_generation_pipeline(bundle: DatasetBundle, config: GenConfig,
                            final_config: FinalClassifierConfig | None = None):
    """train_gen plus the downstream supervised stage; returns (result, model, metrics)."""
    result = train_gen(bundle, config)
    model = build_final_classifier(bundle, result, config, final_config)
    metrics = evaluate_generation(bundle, result, model)
    return result, model, metrics


def build_final_classifier(bundle, result: GenResult, config: GenConfig,
                           final_config=None, syn_per_class=None):
    count = syn_per_class if syn_per_class is not None else config.syn_per_class
    counts = {int(c): count for c in bundle.unseen_classes}
    z_fake, y_fake = synthesize_unseen(result.generator, result.mapper, bundle.attributes,
                                       counts, seed=config.seed,
                                       use_sampled_z=config.use_sampled_z)
    train_x = bundle.features[bundle.train_index]
    if result.mapper is not None:
        if config.use_sampled_z:
            rng = np.random.default_rng(config.seed ^ 0x5EED)
            post = mp.map_posterior(result.mapper, train_x)
            z_seen = mp.sample_reparam(post, rng.standard_normal(post.mu.shape))
        else:
            z_seen = mp.map_point(result.mapper, train_x)
    else:
        z_seen = train_x
    return train_final_softmax(z_seen, bundle.labels[bundle.train_index], z_fake, y_fake,
                               final_config, expected_classes=bundle.all_classes)


def evaluate_generation(bundle, result: GenResult, model):
    if result.mapper is None:
        z_test = bundle.features[bundle.test_index]
        predictions = model.predict(z_test)
        from .evaluation import GzslMetrics, harmonic_mean, per_class_top1

        labels = bundle.labels[bundle.test_index]
        u = per_class_top1(predictions, labels, bundle.unseen_classes)
        s = per_class_top1(predictions, labels, bundle.seen_classes)
        return GzslMetrics(U=u, S=s, H=harmonic_mean(u, s))
    return evaluate(bundle, result.mapper, model, mode="generation")


# ---------------------------------------------------------------------------
# ablations and checkpoints


def no_mi_ablation(config: GenConfig) -> GenConfig:
    """Identical run except both dual variables are pinned to 0."""
    return replace(config, mi_constraint=False)


def save_generator(path, gen: GeneratorParams, meta=None):
    save_checkpoint(path, "generator", dict(zip(GeneratorParams.NAMES, gen.tensors())), meta)


def load_generator(path):
    _, tensors, meta = load_checkpoint(path, expect_kind="generator")
    return GeneratorParams(**{n: tensors[n] for n in GeneratorParams.NAMES}), meta


def save_centers(path, centers: ClassCenters, meta=None):
    tensors = {"values": centers.values,
               "classes": centers.classes.astype(np.float32).reshape(1, -1)}
    save_checkpoint(path, "centers", tensors, meta)


def load_centers(path):
    _, tensors, meta = load_checkpoint(path, expect_kind="centers")
    return ClassCenters(values=tensors["values"],
                        classes=tensors["classes"].astype(int).ravel()), meta
