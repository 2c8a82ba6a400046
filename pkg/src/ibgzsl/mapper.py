"""The stochastic mapping into the redundancy-free feature space.

An input batch is mapped to a diagonal Gaussian posterior (mean head and
log-variance head on a shared ReLU layer). Sampling goes through the usual
shift-and-scale reparameterization so gradients reach the heads, and the KL
divergence to the fixed standard-normal marginal is closed form:

    KL = mean over batch of 0.5 * sum_j (mu_j^2 + exp(lv_j) - 1 - lv_j)

Training always samples; inference reads the posterior mean (`map_point`).
The log-variance is clamped to [-10, 10] before any use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ShapeError
from .serialize import load_checkpoint, save_checkpoint

LOG_VAR_LIMIT = 10.0


@dataclass
class GaussianPosterior:
    mu: np.ndarray
    log_var: np.ndarray

    def __post_init__(self):
        if self.mu.shape != self.log_var.shape:
            raise ShapeError(f"posterior mu {self.mu.shape} vs log_var {self.log_var.shape}")


@dataclass
class MapperParams:
    w_in: np.ndarray
    b_in: np.ndarray
    w_mu: np.ndarray
    b_mu: np.ndarray
    w_log_var: np.ndarray
    b_log_var: np.ndarray

    @classmethod
    def init(cls, in_dim, out_dim, hidden=2048, rng=None, head_scale=0.1):
        """`head_scale` shrinks the output heads so the initial posterior sits
        near the prior (KL ~ 0): constrained training then starts feasible and
        the dual variable never has to fight a huge transient."""
        rng = rng if rng is not None else np.random.default_rng(0)

        def layer(fan_in, fan_out):
            scale = 1.0 / np.sqrt(fan_in)
            return rng.normal(0.0, scale, size=(fan_in, fan_out)).astype(np.float32)

        return cls(
            w_in=layer(in_dim, hidden),
            b_in=np.zeros((1, hidden), dtype=np.float32),
            w_mu=head_scale * layer(hidden, out_dim),
            b_mu=np.zeros((1, out_dim), dtype=np.float32),
            w_log_var=head_scale * layer(hidden, out_dim),
            b_log_var=np.zeros((1, out_dim), dtype=np.float32),
        )

    @property
    def in_dim(self):
        return self.w_in.shape[0]

    @property
    def out_dim(self):
        return self.w_mu.shape[1]

    def tensors(self):
        return [self.w_in, self.b_in, self.w_mu, self.b_mu, self.w_log_var, self.b_log_var]

    NAMES = ("w_in", "b_in", "w_mu", "b_mu", "w_log_var", "b_log_var")


def bind(tape, params: MapperParams, trainable=True):
    """Register the mapper's tensors on a tape; returns nodes in tensors() order."""
    reg = tape.param if trainable else tape.const
    return [reg(t, name=f"mapper.{n}") for t, n in zip(params.tensors(), MapperParams.NAMES)]


def posterior_graph(tape, nodes, x):
    """mu and clamped log_var nodes for an input node `x`."""
    w_in, b_in, w_mu, b_mu, w_lv, b_lv = nodes
    hidden = ad.relu(ad.bias_add(ad.matmul(x, w_in), b_in))
    mu = ad.bias_add(ad.matmul(hidden, w_mu), b_mu)
    log_var = ad.clamp(ad.bias_add(ad.matmul(hidden, w_lv), b_lv),
                       -LOG_VAR_LIMIT, LOG_VAR_LIMIT)
    return mu, log_var


def sample_graph(tape, mu, log_var, eps):
    """Reparameterized draw: mu + exp(log_var / 2) * eps, eps supplied as data."""
    eps = np.asarray(eps)
    if eps.shape != mu.value.shape:
        raise ShapeError(f"eps shape {eps.shape} vs posterior {mu.value.shape}")
    return ad.add(mu, ad.mul(ad.exp(ad.mul(log_var, 0.5)), tape.const(eps, name="eps")))


def kl_graph(tape, mu, log_var):
    """Closed-form KL to the standard normal, averaged over the batch."""
    term = ad.sub(ad.sub(ad.add(ad.square(mu), ad.exp(log_var)), 1.0), log_var)
    return ad.mul(ad.reduce_sum(term), 0.5 / mu.rows)


# ---------------------------------------------------------------------------
# array-facing wrappers


def forward_arrays(params: MapperParams, x):
    """Tape-free forward pass, bit-identical to posterior_graph: float32 stores
    with float64 matmul accumulation, in the same operation order."""
    x = np.asarray(x, dtype=np.float32)
    pre = (x.astype(np.float64) @ params.w_in.astype(np.float64)).astype(np.float32)
    hidden = np.maximum(pre + params.b_in, np.float32(0.0))
    h64 = hidden.astype(np.float64)
    mu = (h64 @ params.w_mu.astype(np.float64)).astype(np.float32) + params.b_mu
    raw = (h64 @ params.w_log_var.astype(np.float64)).astype(np.float32) + params.b_log_var
    lo = np.float32(-LOG_VAR_LIMIT)
    hi = np.float32(LOG_VAR_LIMIT)
    floor = np.maximum(raw - lo, np.float32(0.0)) + lo
    log_var = hi - np.maximum(hi - floor, np.float32(0.0))
    return mu, log_var


def map_posterior(params: MapperParams, x) -> GaussianPosterior:
    mu, log_var = forward_arrays(params, x)
    return GaussianPosterior(mu, log_var)


def sample_reparam(post: GaussianPosterior, eps) -> np.ndarray:
    eps = np.asarray(eps)
    if eps.shape != post.mu.shape:
        raise ShapeError(f"eps shape {eps.shape} vs posterior {post.mu.shape}")
    return post.mu + np.exp(0.5 * post.log_var) * eps


def kl_to_marginal(post: GaussianPosterior) -> float:
    mu = post.mu.astype(np.float64)
    lv = post.log_var.astype(np.float64)
    # expm1 keeps exp(lv) - 1 - lv accurate near lv = 0; the floor only strips
    # float noise from a provably nonnegative quantity.
    total = 0.5 * np.sum(mu * mu + np.expm1(lv) - lv) / mu.shape[0]
    return max(float(total), 0.0)


def map_point(params: MapperParams, x) -> np.ndarray:
    """Posterior mean; the deterministic reading used at classification time."""
    return map_posterior(params, x).mu


def save_mapper(path, params: MapperParams, meta=None):
    save_checkpoint(path, "mapper", dict(zip(MapperParams.NAMES, params.tensors())), meta)


def load_mapper(path):
    _, tensors, meta = load_checkpoint(path, expect_kind="mapper")
    return MapperParams(**{n: tensors[n] for n in MapperParams.NAMES}), meta
