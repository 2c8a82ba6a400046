"""Finite-difference verification cases for every training loss.

Each case builds a small random instance of one loss with all noise fixed as
data, then compares tape gradients against float64 central differences.
Hinge/relu subgradients are 0 at their kinks, so cases whose forward pass
lands within 10h of any kink are redrawn under a deterministically bumped
seed rather than checked at an ill-posed point.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from . import generation as gn
from . import mapper as mp
from .embedding import ranking_hinge
from .evaluation import SoftmaxModel

# Central differences carry O(h^2) truncation error that is absolute, not
# relative: entries whose true gradient is small by cancellation would fail a
# relative comparison at h = 1e-3 even with exact arithmetic. 5e-5 keeps
# truncation below the float64 tolerance while the quotient (evaluated in
# float64) stays far from its own roundoff floor.
DEFAULT_H = 5e-5
KINK_GUARD = 10.0  # in units of h
MAX_REDRAWS = 40


def _mapper_case(seed, in_dim=6, out_dim=3, hidden=8, batch=4):
    rng = np.random.default_rng(seed)
    params = mp.MapperParams.init(in_dim, out_dim, hidden=hidden, rng=rng, head_scale=1.0)
    x = rng.normal(size=(batch, in_dim))
    eps = rng.normal(size=(batch, out_dim))
    return params, x, eps, rng


def ranking_hinge_case(seed):
    params, x, eps, rng = _mapper_case(seed)
    a_pos = rng.normal(size=eps.shape)
    a_neg = rng.normal(size=eps.shape)

    def build(tape, nodes):
        mu, lv = mp.posterior_graph(tape, nodes, tape.const(x))
        z = mp.sample_graph(tape, mu, lv, eps)
        return ranking_hinge(z, a_pos, a_neg, 1.0)

    return build, params.tensors()


def classifier_loss_case(seed):
    rng = np.random.default_rng(seed)
    gen = gn.GeneratorParams.init(3, 2, 6, 5, rng)
    frozen = SoftmaxModel(weight=rng.normal(size=(5, 4)).astype(np.float32),
                          bias=rng.normal(size=(1, 4)).astype(np.float32),
                          classes=np.arange(4))
    attrs = rng.normal(size=(4, 3))
    eps = rng.normal(size=(4, 2))
    labels = rng.integers(0, 4, size=4)

    def build(tape, nodes):
        fake = gn.generate_graph(tape, nodes, attrs, eps)
        return gn.classification_loss_graph(tape, frozen, fake, labels)

    return build, gn.GeneratorParams.init(3, 2, 6, 5, np.random.default_rng(seed)).tensors()


def kl_case(seed):
    # dims picked for healthy error margins: cancellation can leave individual
    # entries orders below the typical gradient scale, where float32 forward
    # rounding dominates a relative comparison
    params, x, _, _ = _mapper_case(seed, in_dim=6, out_dim=4, hidden=6, batch=5)

    def build(tape, nodes):
        mu, lv = mp.posterior_graph(tape, nodes, tape.const(x))
        return mp.kl_graph(tape, mu, lv)

    return build, params.tensors()


def center_margin_case(seed):
    params, x, eps, rng = _mapper_case(seed)
    centers = rng.normal(size=(5, 3)).astype(np.float32)
    rows = rng.integers(0, 5, size=4)
    # +1 over an odd modulus cannot produce swapped (pos, neg) pairs, whose
    # contributions would cancel exactly and leave nothing to compare against
    negs = (rows + 1) % 5

    def build(tape, nodes):
        center_node = nodes[-1]
        mu, lv = mp.posterior_graph(tape, nodes[:-1], tape.const(x))
        z = mp.sample_graph(tape, mu, lv, eps)
        return gn.center_margin_graph(tape, center_node, z, rows, negs, 1.0)

    return build, params.tensors() + [centers]


def _adversarial_case(seed, mode):
    rng = np.random.default_rng(seed)
    critic = gn.CriticParams.init(3, 5, rng)
    z_real = rng.normal(size=(5, 3))
    z_fake = rng.normal(size=(5, 3))
    # The wgan loss is a difference of means: bias gradients reduce to
    # activation-count differences times downstream weights and are exact
    # zeros whenever the counts tie, leaving only rounding dust to compare.
    # The minimax case exercises the same critic graph including its biases.
    if mode == "minimax":
        tensors = critic.tensors()
        frozen = []
    else:
        tensors = [critic.w1, critic.w2]
        frozen = [(1, critic.b1), (3, critic.b2)]

    def build(tape, nodes):
        nodes = list(nodes)
        for position, value in frozen:
            nodes.insert(position, tape.const(value, name="critic.bias"))
        zr = tape.const(z_real)
        zf = tape.const(z_fake)
        return gn.critic_loss_graph(tape, nodes, zr, zf, mode)

    return build, tensors


def wgan_case(seed):
    return _adversarial_case(seed, "wgan-clip")


def minimax_case(seed):
    return _adversarial_case(seed, "minimax")


CASES = (
    ("ranking-hinge", ranking_hinge_case),
    ("classifier-loss", classifier_loss_case),
    ("kl-bound", kl_case),
    ("center-margin", center_margin_case),
    ("adversarial-wgan", wgan_case),
    ("adversarial-minimax", minimax_case),
)


def checked_error(make_case, seed, h=DEFAULT_H, dtype=np.float32):
    """Gradient-check one case, redrawing seeds that land too close to a kink.

    The pre-filter rejects draws whose forward pass comes within 10h of any
    kink; the check itself additionally drops parameter entries whose +-h
    stencil would cross one (subgradient points, excluded by contract).
    """
    for attempt in range(MAX_REDRAWS):
        case_seed = seed + 100_000 * attempt
        build, params = make_case(case_seed)
        probe = ad.Tape(dtype=np.float64)
        nodes = [probe.param(np.asarray(p, dtype=np.float64)) for p in params]
        build(probe, nodes)
        if probe.kink_clearance > KINK_GUARD * h:
            return ad.gradient_check(build, params, h=h, dtype=dtype,
                                     exclude_crossed_kinks=True)
    raise RuntimeError(f"no kink-clear draw found after {MAX_REDRAWS} attempts (seed {seed})")


def run_gradient_suite(seeds=range(20), threshold=1e-3, h=DEFAULT_H, dtype=np.float32):
    """[(case name, max relative error over seeds, under threshold?)]"""
    results = []
    for name, make_case in CASES:
        worst = 0.0
        for seed in seeds:
            worst = max(worst, checked_error(make_case, seed, h=h, dtype=dtype))
        results.append((name, worst, worst < threshold))
    return results
