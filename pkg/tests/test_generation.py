import math

import numpy as np
import pytest

from ibgzsl import autodiff as ad
from ibgzsl import generation as gn
from ibgzsl import mapper as mp
from ibgzsl.data import SyntheticSpec, make_synthetic
from ibgzsl.errors import ConfigError, ContractError

SMALL = SyntheticSpec(seen_classes=5, unseen_classes=3, per_class=24,
                      signal_dim=6, redundancy_dim=10, attribute_dim=4,
                      clusters=3, noise=0.1, seed=33)

SHORT = gn.GenConfig(epochs=2, warmup_epochs=1, batch_size=24, n_critic=2,
                     d_z=8, gen_hidden=16, mapper_hidden=16, critic_hidden=16,
                     lr=1e-3, lr_critic=1e-3, pretrain_epochs=50, seed=2)


@pytest.fixture(scope="module")
def bundle():
    return make_synthetic(SMALL)


def tiny_generator(seed=0, attr_dim=3, noise_dim=2, hidden=6, out_dim=5):
    rng = np.random.default_rng(seed)
    return gn.GeneratorParams.init(attr_dim, noise_dim, hidden, out_dim, rng)


class TestGenerate:
    def test_zero_weights_emit_output_bias(self):
        gen = tiny_generator()
        for t in gen.tensors():
            t[:] = 0.0
        gen.b2[:] = np.array([1.0, 2.0, 3.0, 4.0, 5.0], dtype=np.float32)
        out = gn.generate(gen, np.zeros((3, 3)), np.ones((3, 2)))
        np.testing.assert_array_equal(out, np.repeat(gen.b2, 3, axis=0))

    def test_deterministic_in_inputs(self):
        gen = tiny_generator(seed=1)
        rng = np.random.default_rng(0)
        attrs = rng.normal(size=(4, 3))
        eps = rng.normal(size=(4, 2))
        np.testing.assert_array_equal(gn.generate(gen, attrs, eps),
                                      gn.generate(gen, attrs, eps))

    def test_distinct_noise_gives_distinct_outputs(self):
        gen = tiny_generator(seed=2)
        rng = np.random.default_rng(1)
        attrs = np.repeat(rng.normal(size=(1, 3)), 1000, axis=0)
        eps = rng.normal(size=(1000, 2))
        out = gn.generate(gen, attrs, eps)
        assert np.unique(out, axis=0).shape[0] == 1000


class TestPretrainClassifier:
    def test_separable_two_class_toy(self):
        from ibgzsl.data import DatasetBundle

        features = np.concatenate([
            np.random.default_rng(0).normal(size=(20, 3)) + np.array([6.0, 0, 0]),
            np.random.default_rng(1).normal(size=(20, 3)) - np.array([6.0, 0, 0]),
            np.random.default_rng(2).normal(size=(4, 3)),
        ]).astype(np.float32)
        labels = np.array([0] * 20 + [1] * 20 + [2] * 4)
        toy = DatasetBundle(
            features=features, labels=labels,
            attributes=np.eye(3, dtype=np.float32),
            seen_classes=np.array([0, 1]), unseen_classes=np.array([2]),
            train_index=np.concatenate([np.arange(16), np.arange(20, 36)]),
            test_index=np.concatenate([np.arange(16, 20), np.arange(36, 44)]),
        ).validate()
        q = gn.pretrain_classifier(toy, epochs=150, lr=0.1)
        train_x = toy.features[toy.train_index]
        assert np.array_equal(q.predict(train_x), toy.labels[toy.train_index])

    def test_uniform_init_loss(self, bundle):
        q = gn.pretrain_classifier(bundle, epochs=0, lr=0.1)
        tape = ad.Tape()
        x = bundle.features[bundle.train_index[:10]]
        y_index = np.zeros(10, dtype=int)
        loss = ad.softmax_cross_entropy(
            ad.bias_add(ad.matmul(tape.const(x), tape.const(q.weight)), tape.const(q.bias)),
            y_index)
        assert float(loss.value[0, 0]) == pytest.approx(np.log(bundle.seen_classes.size), rel=1e-5)

    def test_gradient_check_of_pretrain_loss(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(5, 4))
        y = np.array([0, 2, 1, 2, 0])
        w = rng.normal(size=(4, 3)).astype(np.float32)
        b = np.zeros((1, 3), dtype=np.float32)

        def build(tape, nodes):
            wn, bn = nodes
            return ad.softmax_cross_entropy(ad.bias_add(ad.matmul(tape.const(x), wn), bn), y)

        assert ad.gradient_check(build, [w, b], h=1e-3) < 1e-3


class TestClassificationLoss:
    def make_frozen(self, n_classes=4, dim=5):
        from ibgzsl.evaluation import SoftmaxModel

        return SoftmaxModel(weight=np.zeros((dim, n_classes), dtype=np.float32),
                            bias=np.zeros((1, n_classes), dtype=np.float32),
                            classes=np.arange(n_classes))

    def test_uniform_classifier_gives_log_n(self):
        q = self.make_frozen()
        tape = ad.Tape()
        x = tape.const(np.random.default_rng(0).normal(size=(6, 5)))
        loss = gn.classification_loss_graph(tape, q, x, np.array([0, 1, 2, 3, 0, 1]))
        assert float(loss.value[0, 0]) == pytest.approx(np.log(4.0), rel=1e-6)

    def test_confident_classifier_gives_zero(self):
        q = self.make_frozen(n_classes=2, dim=2)
        q.weight[:] = np.array([[60.0, -60.0], [0.0, 0.0]], dtype=np.float32)
        tape = ad.Tape()
        x = tape.const(np.array([[1.0, 0.0], [1.0, 0.5]]))
        loss = gn.classification_loss_graph(tape, q, x, np.array([0, 0]))
        assert float(loss.value[0, 0]) == pytest.approx(0.0, abs=1e-6)

    def test_matches_manual_log_softmax(self):
        rng = np.random.default_rng(9)
        q = self.make_frozen(n_classes=3, dim=4)
        q.weight[:] = rng.normal(size=(4, 3)).astype(np.float32)
        q.bias[:] = rng.normal(size=(1, 3)).astype(np.float32)
        x = rng.normal(size=(7, 4))
        y = rng.integers(0, 3, size=7)
        tape = ad.Tape()
        loss = gn.classification_loss_graph(tape, q, tape.const(x), y)
        logits = x @ q.weight + q.bias
        log_probs = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        manual = -log_probs[np.arange(7), y].mean()
        assert float(loss.value[0, 0]) == pytest.approx(manual, rel=1e-5)

    def test_unknown_label_rejected(self):
        q = self.make_frozen(n_classes=3, dim=2)
        q.classes = np.array([0, 1, 4])
        tape = ad.Tape()
        with pytest.raises(ContractError, match="label 2"):
            gn.classification_loss_graph(tape, q, tape.const(np.zeros((1, 2))), np.array([2]))

    def test_gradients_reach_fake_features_not_classifier(self):
        q = self.make_frozen(n_classes=3, dim=4)
        q.weight[:] = np.random.default_rng(1).normal(size=(4, 3)).astype(np.float32)
        tape = ad.Tape()
        x = tape.param(np.random.default_rng(2).normal(size=(5, 4)).astype(np.float32), name="x")
        loss = gn.classification_loss_graph(tape, q, x, np.array([0, 1, 2, 0, 1]))
        ad.backward(loss)
        assert np.any(x.grad != 0)


class TestCenterMarginLoss:
    def run_loss(self, z, centers, rows, neg_rows, margin):
        tape = ad.Tape()
        cn = tape.param(np.asarray(centers, dtype=np.float32), name="centers")
        zn = tape.const(np.asarray(z))
        node = gn.center_margin_graph(tape, cn, zn, rows, neg_rows, margin)
        return float(node.value[0, 0])

    def test_satisfied_margin(self):
        # z at its own center, other center sqrt(3) away: 1 + 0 - 3 < 0
        centers = [[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]
        value = self.run_loss([[0.0, 0.0, 0.0]], centers, [0], [1], 1.0)
        assert value == 0.0

    def test_degenerate_coincident_centers_pay_margin(self):
        centers = [[0.5, 0.5], [0.5, 0.5]]
        value = self.run_loss([[0.5, 0.5]], centers, [0], [1], 1.0)
        assert value == pytest.approx(1.0)

    def test_same_class_negative_rejected(self):
        with pytest.raises(ContractError, match="row 0"):
            self.run_loss([[0.0]], [[0.0], [1.0]], [1], [1], 1.0)

    def test_gradient_wrt_embeddings_is_center_difference(self):
        rng = np.random.default_rng(3)
        centers = rng.normal(size=(4, 3)).astype(np.float32)
        z0 = rng.normal(size=(2, 3)).astype(np.float32)
        rows = np.array([0, 2])
        negs = np.array([1, 3])

        def build(tape, nodes):
            (zn,) = nodes
            cn = tape.const(centers)
            return gn.center_margin_graph(tape, cn, zn, rows, negs, 5.0)  # hinge active

        err = ad.gradient_check(build, [z0], h=1e-3)
        assert err < 1e-3
        # analytic form: 2(c_neg - c_pos)/batch, gated by the active-hinge indicator
        tape = ad.Tape()
        zn = tape.param(z0, name="z")
        loss = gn.center_margin_graph(tape, tape.const(centers), zn, rows, negs, 5.0)
        ad.backward(loss)
        d_pos = ((z0 - centers[rows]) ** 2).sum(axis=1)
        d_neg = ((z0 - centers[negs]) ** 2).sum(axis=1)
        active = (5.0 + d_pos - d_neg > 0)[:, None]
        expected = active * 2.0 * (centers[negs] - centers[rows]) / 2.0
        np.testing.assert_allclose(zn.grad, expected, rtol=1e-4)

    def test_gradient_check_through_mapper_and_centers(self):
        rng = np.random.default_rng(8)
        params = mp.MapperParams.init(5, 3, hidden=6, rng=rng)
        centers = rng.normal(size=(4, 3)).astype(np.float32)
        x = rng.normal(size=(4, 5))
        eps = rng.normal(size=(4, 3))
        rows = np.array([0, 1, 2, 3])
        negs = np.array([1, 0, 3, 0])

        def build(tape, nodes):
            cn = nodes[-1]
            mu, lv = mp.posterior_graph(tape, nodes[:-1], tape.const(x))
            z = mp.sample_graph(tape, mu, lv, eps)
            return gn.center_margin_graph(tape, cn, z, rows, negs, 2.0)

        assert ad.gradient_check(build, params.tensors() + [centers], h=1e-3) < 1e-3


class TestAdversarialLosses:
    def constant_critic(self, d_z=3, value=0.0):
        rng = np.random.default_rng(0)
        critic = gn.CriticParams.init(d_z, 4, rng)
        for t in critic.tensors():
            t[:] = 0.0
        critic.b2[:] = value
        return critic

    def test_constant_critic_wgan_loss_zero(self):
        critic = self.constant_critic(value=0.7)
        rng = np.random.default_rng(1)
        c_loss, g_loss = gn.adversarial_losses(critic, rng.normal(size=(8, 3)),
                                               rng.normal(size=(8, 3)), "wgan-clip")
        assert c_loss == pytest.approx(0.0, abs=1e-6)
        assert g_loss == pytest.approx(-0.7, abs=1e-6)

    def test_constant_half_critic_maximizes_minimax_value(self):
        # critic output 0 -> D = 1/2 everywhere -> value log D + log(1-D) = -2 ln 2
        critic = self.constant_critic(value=0.0)
        rng = np.random.default_rng(2)
        c_loss, _ = gn.adversarial_losses(critic, rng.normal(size=(16, 3)),
                                          rng.normal(size=(16, 3)), "minimax")
        assert -c_loss == pytest.approx(-2.0 * np.log(2.0), rel=1e-6)
        # any other constant critic scores a lower value
        for off in (-1.0, 0.5, 2.0):
            worse = self.constant_critic(value=off)
            worse_loss, _ = gn.adversarial_losses(worse, rng.normal(size=(16, 3)),
                                                  rng.normal(size=(16, 3)), "minimax")
            assert -worse_loss < -c_loss + 1e-9

    def test_identical_batches_zero_wgan_loss(self):
        rng = np.random.default_rng(3)
        critic = gn.CriticParams.init(3, 8, rng)
        z = rng.normal(size=(10, 3))
        c_loss, _ = gn.adversarial_losses(critic, z, z, "wgan-clip")
        assert c_loss == pytest.approx(0.0, abs=1e-6)

    def test_unknown_mode_rejected(self):
        critic = self.constant_critic()
        with pytest.raises(ConfigError):
            gn.adversarial_losses(critic, np.zeros((2, 3)), np.zeros((2, 3)), "hinge")

    @pytest.mark.parametrize("mode", ["wgan-clip", "minimax"])
    def test_critic_gradient_check(self, mode):
        rng = np.random.default_rng(11)
        critic = gn.CriticParams.init(3, 5, rng)
        z_real = rng.normal(size=(6, 3))
        z_fake = rng.normal(size=(6, 3))

        def build(tape, nodes):
            zr = tape.const(z_real)
            zf = tape.const(z_fake)
            return gn.critic_loss_graph(tape, nodes, zr, zf, mode)

        assert ad.gradient_check(build, critic.tensors(), h=1e-3) < 1e-3


class TestSynthesizeUnseen:
    def test_counts_and_labels(self, bundle):
        gen = tiny_generator(attr_dim=SMALL.attribute_dim, noise_dim=SMALL.attribute_dim,
                             hidden=8, out_dim=SMALL.feature_dim)
        params = mp.MapperParams.init(SMALL.feature_dim, 6, hidden=8)
        counts = {int(c): 400 for c in bundle.unseen_classes}
        z, labels = gn.synthesize_unseen(gen, params, bundle.attributes, counts, seed=4)
        assert z.shape == (400 * bundle.unseen_classes.size, 6)
        for c in bundle.unseen_classes:
            assert int((labels == c).sum()) == 400
        assert set(np.unique(labels)) == set(bundle.unseen_classes.tolist())

    def test_output_lives_in_mapped_space(self, bundle):
        gen = tiny_generator(attr_dim=SMALL.attribute_dim, noise_dim=SMALL.attribute_dim,
                             hidden=8, out_dim=SMALL.feature_dim)
        params = mp.MapperParams.init(SMALL.feature_dim, 3, hidden=8)
        z, _ = gn.synthesize_unseen(gen, params, bundle.attributes,
                                    {int(bundle.unseen_classes[0]): 5}, seed=0)
        assert z.shape == (5, 3)

    def test_missing_attribute_row_rejected(self, bundle):
        gen = tiny_generator(attr_dim=SMALL.attribute_dim, noise_dim=SMALL.attribute_dim,
                             hidden=8, out_dim=SMALL.feature_dim)
        params = mp.MapperParams.init(SMALL.feature_dim, 3, hidden=8)
        with pytest.raises(ContractError, match="no attribute row"):
            gn.synthesize_unseen(gen, params, bundle.attributes, {99: 5}, seed=0)


class TestTrainGen:
    def test_deterministic_under_seed(self, bundle):
        r1 = gn.train_gen(bundle, SHORT)
        r2 = gn.train_gen(bundle, SHORT)
        for a, b in zip(r1.generator.tensors(), r2.generator.tensors()):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(r1.mapper.tensors(), r2.mapper.tensors()):
            np.testing.assert_array_equal(a, b)
        assert r1.log == r2.log

    def test_term_accounting(self, bundle):
        result = gn.train_gen(bundle, SHORT)
        for row in result.log:
            parts = row["adv"] + row["center"] + row["cls"] \
                + row["kl_real_pen"] + row["kl_fake_pen"]
            assert abs(row["total"] - parts) < 1e-5

    def test_duals_nonnegative_everywhere(self, bundle):
        result = gn.train_gen(bundle, SHORT)
        assert all(row["beta_real"] >= 0 and row["beta_fake"] >= 0 for row in result.log)

    def test_critic_weights_within_clip_after_every_step(self, bundle):
        result = gn.train_gen(bundle, SHORT)
        assert all(row["critic_wmax"] <= SHORT.clip for row in result.log)

    def test_centers_frozen_without_center_term(self, bundle):
        config = gn.GenConfig(**{**SHORT.__dict__, "center_enabled": False})
        result = gn.train_gen(bundle, config)
        np.testing.assert_array_equal(result.centers.values,
                                      np.zeros_like(result.centers.values))

    def test_duals_rise_while_bound_violated(self, bundle):
        # an unattainably tight bound forces violation at every step
        config = gn.GenConfig(**{**SHORT.__dict__, "bound": 0.0, "dual_init": 0.0,
                                 "dual_step": 0.05})
        result = gn.train_gen(bundle, config)
        betas = [row["beta_real"] for row in result.log]
        assert betas[-1] > betas[0]
        epochs = {}
        for row in result.log:
            epochs.setdefault(row["epoch"], []).append(row)
        for rows in epochs.values():
            if all(r["kl_real"] > config.bound for r in rows):
                series = [r["beta_real"] for r in rows]
                assert all(b2 > b1 for b1, b2 in zip(series, series[1:]))

    def test_fclswgan_degeneration_smoke(self, bundle):
        # identity mapper, no center term, no constraint: the classic pattern
        # of adversarial generation with a frozen-classifier penalty, driven on
        # raw features. The generator-side loss trend must head down.
        config = gn.GenConfig(epochs=9, warmup_epochs=0, batch_size=24, n_critic=2,
                              d_z=SMALL.feature_dim, gen_hidden=32, critic_hidden=32,
                              mapper_identity=True, center_enabled=False,
                              bound=math.inf, lr=5e-4, lr_critic=5e-4,
                              pretrain_epochs=50, seed=6)
        result = gn.train_gen(bundle, config)
        assert result.mapper is None
        totals = [row["total"] for row in result.log][:100]
        assert all(math.isfinite(t) for t in totals)
        first = np.mean(totals[:20])
        last = np.mean(totals[-20:])
        assert last < first

    def test_minimax_mode_trains_without_clipping(self, bundle):
        config = gn.GenConfig(**{**SHORT.__dict__, "mode": "minimax"})
        result = gn.train_gen(bundle, config)
        assert all(math.isfinite(row["total"]) for row in result.log)
        # no weight clipping in minimax mode: the critic may exceed the bound
        assert any(row["critic_wmax"] > config.clip for row in result.log)

    def test_identity_mapper_requires_matching_dims(self, bundle):
        config = gn.GenConfig(**{**SHORT.__dict__, "mapper_identity": True, "d_z": 3})
        with pytest.raises(ConfigError):
            gn.train_gen(bundle, config)

    def test_invalid_configs_rejected(self):
        with pytest.raises(ConfigError):
            gn.GenConfig(lambda_r=0.0).validate()
        with pytest.raises(ConfigError):
            gn.GenConfig(n_critic=0).validate()
        with pytest.raises(ConfigError):
            gn.GenConfig(mode="gp").validate()
