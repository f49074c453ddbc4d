"""Vanilla and supervised conditional GAN training on exact-simulation data.

Both variants share the generator architecture G(z, conditionals) -> r and
the alternating one-D-step / one-G-step schedule; they differ only in what
the discriminator sees.  The supervised discriminator receives the prior
draw z next to the sample, so it can reject any generator map other than
the conditional inverse CDF composed with the normal CDF; the vanilla
discriminator sees (r, conditionals) only and can at best enforce equality
in distribution.

Losses are computed from the discriminator's pre-sigmoid output through a
fused log-sigmoid, so saturated discriminators do not produce infs.  The
generator uses the non-saturating objective -E[log D(G(z))].
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from sdegan.nn import (
    IDENTITY,
    SIGMOID,
    _stable_sigmoid,
    AdamState,
    LrSchedule,
    MLP,
    adam_update,
    lr_at,
)
from sdegan.preprocess import TrainingSet, decode_output
from sdegan.sde import Cir, exact_sample
from sdegan.stats import ks_two_sample, wasserstein1


class GanVariant(Enum):
    VANILLA = "vanilla"
    SUPERVISED = "supervised"


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; defaults follow the experiment recipe."""

    batch_size: int = 1000
    epochs: int = 200
    d_steps_per_g_step: int = 1
    label_real: float = 1.0
    label_fake: float = 0.0
    seed: int = 0
    lr_g: float = 1e-4
    lr_d: float = 5e-4
    lr_decay_factor: float = 1.05
    lr_decay_interval: int = 500
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    eval_every: int = 200
    eval_n: int = 100_000
    eval_dt: float = 1.0
    eval_s_t: float | None = None  # None: 0.1 for CIR, the training s_t for GBM
    dtype: str = "float32"

    def __post_init__(self):
        if min(self.batch_size, self.epochs, self.d_steps_per_g_step,
               self.eval_every, self.eval_n) < 1:
            raise ValueError("counts must be positive")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")


def d_input_width(variant: GanVariant, n_cond: int) -> int:
    """Sample + conditionals, plus the prior z for the supervised variant."""
    return 1 + n_cond + (1 if variant is GanVariant.SUPERVISED else 0)


def assemble_d_input(r, z, cond, variant: GanVariant) -> np.ndarray:
    """Discriminator rows [r, (z,) conditionals]; r is always column 0."""
    r = np.asarray(r).reshape(-1, 1)
    cond = np.asarray(cond)
    if variant is GanVariant.SUPERVISED:
        return np.hstack([r, np.asarray(z).reshape(-1, 1), cond])
    return np.hstack([r, cond])


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def d_loss_and_grads(d_net: MLP, real_batch: np.ndarray, fake_batch: np.ndarray,
                     label_real: float = 1.0, label_fake: float = 0.0):
    """-mean log D(real) - mean log(1 - D(fake)), with parameter gradients.

    With soft labels y the two terms generalize to mean[softplus(a) - y a]
    on the logits a.  Real and fake rows run through the network as one
    batch; gradients are exact.
    """
    real_batch = np.asarray(real_batch, dtype=d_net.dtype)
    fake_batch = np.asarray(fake_batch, dtype=d_net.dtype)
    n_real, n_fake = real_batch.shape[0], fake_batch.shape[0]
    both = np.vstack([real_batch, fake_batch])
    logits, cache = d_net.forward_cached(both, head_preact=True)
    y = np.empty((n_real + n_fake, 1), dtype=d_net.dtype)
    y[:n_real] = label_real
    y[n_real:] = label_fake
    weight = np.empty_like(y)
    weight[:n_real] = 1.0 / n_real
    weight[n_real:] = 1.0 / n_fake
    loss = float(np.sum((_softplus(logits) - y * logits) * weight))
    dlogits = (_stable_sigmoid(logits) - y) * weight
    grads, _ = d_net.backward(cache, dlogits, from_preact=True)
    return loss, grads


def g_loss_and_grads(g_net: MLP, d_net: MLP, z_batch: np.ndarray,
                     cond_batch: np.ndarray, variant: GanVariant):
    """Non-saturating generator loss -mean log D(...) and generator gradients.

    Discriminator feedback reaches the generator through the input-gradient
    of the sample column (the z and conditional columns are constants).
    """
    z_batch = np.asarray(z_batch, dtype=g_net.dtype).reshape(-1)
    cond_batch = np.asarray(cond_batch, dtype=g_net.dtype)
    g_in = np.hstack([z_batch.reshape(-1, 1), cond_batch])
    r_fake, cache_g = g_net.forward_cached(g_in)
    d_in = assemble_d_input(r_fake, z_batch, cond_batch, variant)
    logits, cache_d = d_net.forward_cached(d_in, head_preact=True)
    n = logits.shape[0]
    loss = float(np.mean(_softplus(-logits)))
    dlogits = (_stable_sigmoid(logits) - 1.0) / n
    _, d_input_grad = d_net.backward(cache_d, dlogits, from_preact=True,
                                     want_param_grads=False, want_input_grad=True)
    grads, _ = g_net.backward(cache_g, d_input_grad[:, :1])
    return loss, grads


@dataclass
class TrainingLog:
    """Per-iteration losses plus held-out KS/W1 at evaluation points."""

    header: dict
    iteration: list[int] = field(default_factory=list)
    d_loss: list[float] = field(default_factory=list)
    g_loss: list[float] = field(default_factory=list)
    lr_g: list[float] = field(default_factory=list)
    ks: list[float] = field(default_factory=list)    # nan between evals
    w1: list[float] = field(default_factory=list)

    def append(self, iteration, d_loss, g_loss, lr_g, ks=math.nan, w1=math.nan):
        self.iteration.append(iteration)
        self.d_loss.append(d_loss)
        self.g_loss.append(g_loss)
        self.lr_g.append(lr_g)
        self.ks.append(ks)
        self.w1.append(w1)

    @property
    def final_ks(self) -> float:
        vals = [v for v in self.ks if not math.isnan(v)]
        return vals[-1] if vals else math.nan

    @property
    def final_w1(self) -> float:
        vals = [v for v in self.w1 if not math.isnan(v)]
        return vals[-1] if vals else math.nan

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            items = ", ".join(f"{k}={v}" for k, v in self.header.items())
            fh.write(f"# {items}\n")
            writer = csv.writer(fh)
            writer.writerow(["iteration", "d_loss", "g_loss", "lr_g", "ks", "w1"])
            for i in range(len(self.iteration)):
                writer.writerow([
                    self.iteration[i], repr(self.d_loss[i]), repr(self.g_loss[i]),
                    repr(self.lr_g[i]),
                    "" if math.isnan(self.ks[i]) else repr(self.ks[i]),
                    "" if math.isnan(self.w1[i]) else repr(self.w1[i]),
                ])


@dataclass
class TrainResult:
    generator: MLP
    discriminator: MLP
    log: TrainingLog
    variant: GanVariant
    training_set: TrainingSet
    config: TrainConfig
    wall_seconds: float


class TrainingDiverged(RuntimeError):
    """Raised when a loss or parameter goes non-finite; carries the last good nets."""

    def __init__(self, message: str, last_good: tuple[MLP, MLP] | None, log: TrainingLog):
        super().__init__(message)
        self.last_good = last_good
        self.log = log


def eval_condition(model, gbm_s_t: float, config: TrainConfig) -> tuple[float, float]:
    """The held-out monitoring condition (dt, s_t)."""
    if config.eval_s_t is not None:
        s_t = config.eval_s_t
    elif isinstance(model, Cir):
        s_t = 0.1
    else:
        s_t = gbm_s_t
    return config.eval_dt, s_t


def held_out_eval_data(model, gbm_s_t: float, config: TrainConfig):
    """Fixed held-out (z, exact levels) for monitoring, derived from the seed.

    Reconstructible from (seed, eval settings) alone, so a later eval run
    can reproduce the logged values bit for bit.
    """
    eval_dt, eval_s_t = eval_condition(model, gbm_s_t, config)
    eval_rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(4)[3])
    z_eval = eval_rng.standard_normal(config.eval_n)
    exact_eval = exact_sample(model, eval_s_t, eval_dt, eval_rng, size=config.eval_n)
    return eval_dt, eval_s_t, z_eval, exact_eval


def generator_eval_metrics(g_net: MLP, transform, n_cond: int,
                           eval_dt: float, eval_s_t: float,
                           z_eval: np.ndarray, exact_eval: np.ndarray):
    """Held-out KS and W1 of decoded generator samples against exact samples."""
    cond = np.empty((z_eval.size, n_cond))
    cond[:, 0] = eval_dt
    if n_cond > 1:
        cond[:, 1] = eval_s_t
    g_in = np.hstack([z_eval.reshape(-1, 1), cond]).astype(g_net.dtype)
    r = g_net.forward(g_in).reshape(-1).astype(np.float64)
    levels = decode_output(r, eval_s_t, transform)
    return ks_two_sample(levels, exact_eval), wasserstein1(levels, exact_eval)


def train(variant: GanVariant, training_set: TrainingSet, config: TrainConfig,
          epoch_callback=None) -> TrainResult:
    """Run the full adversarial training loop.

    Per iteration: one discriminator update on a fresh uniformly-resampled
    batch (real rows vs generator fakes on the same conditionals), then one
    generator update on another fresh batch.  The LR schedule applies to
    the generator only.  Every eval_every iterations the held-out KS/W1 are
    logged.  Training is bit-reproducible for a fixed seed: the four RNG
    streams (G init, D init, batches, held-out data) are spawned from it.
    """
    dtype = np.float32 if config.dtype == "float32" else np.float64
    n_rows = len(training_set)
    if n_rows < config.batch_size:
        raise ValueError("training set smaller than one batch")
    iterations_per_epoch = n_rows // config.batch_size
    total_iterations = config.epochs * iterations_per_epoch

    streams = np.random.SeedSequence(config.seed).spawn(4)
    g_net = MLP.create(1 + training_set.n_cond, 1, IDENTITY,
                       np.random.default_rng(streams[0]), dtype=dtype)
    d_net = MLP.create(d_input_width(variant, training_set.n_cond), 1, SIGMOID,
                       np.random.default_rng(streams[1]), dtype=dtype)
    adam_g = AdamState.for_params(g_net.params(), lr=config.lr_g,
                                  beta1=config.adam_beta1, beta2=config.adam_beta2)
    adam_d = AdamState.for_params(d_net.params(), lr=config.lr_d,
                                  beta1=config.adam_beta1, beta2=config.adam_beta2)
    schedule = LrSchedule(config.lr_g, config.lr_decay_factor, config.lr_decay_interval)
    batch_rng = np.random.default_rng(streams[2])

    eval_dt, eval_s_t, z_eval, exact_eval = held_out_eval_data(
        training_set.model, training_set.gbm_s_t, config)
    log = TrainingLog(header={
        "variant": variant.value, "seed": config.seed, "epochs": config.epochs,
        "batch_size": config.batch_size, "eval_dt": eval_dt, "eval_s_t": eval_s_t,
        "eval_n": config.eval_n, "eval_every": config.eval_every,
        "dtype": config.dtype,
    })

    z_col = training_set.z.astype(dtype)
    r_col = training_set.r.astype(dtype)
    cond = training_set.cond.astype(dtype)

    last_good: tuple[MLP, MLP] | None = None
    start = time.perf_counter()
    iteration = 0
    for epoch in range(config.epochs):
        for _ in range(iterations_per_epoch):
            for _ in range(config.d_steps_per_g_step):
                idx = batch_rng.integers(0, n_rows, config.batch_size)
                cond_b = cond[idx]
                z_fake = batch_rng.standard_normal(config.batch_size).astype(dtype)
                r_fake = g_net.forward(
                    np.hstack([z_fake.reshape(-1, 1), cond_b]))
                real_in = assemble_d_input(r_col[idx], z_col[idx], cond_b, variant)
                fake_in = assemble_d_input(r_fake, z_fake, cond_b, variant)
                d_loss, d_grads = d_loss_and_grads(
                    d_net, real_in, fake_in, config.label_real, config.label_fake)
                adam_update(d_net.params(), d_grads, adam_d)

            idx = batch_rng.integers(0, n_rows, config.batch_size)
            z_g = batch_rng.standard_normal(config.batch_size).astype(dtype)
            g_loss, g_grads = g_loss_and_grads(g_net, d_net, z_g, cond[idx], variant)
            adam_update(g_net.params(), g_grads, adam_g,
                        lr=lr_at(schedule, iteration))

            if not (math.isfinite(d_loss) and math.isfinite(g_loss)):
                raise TrainingDiverged(
                    f"non-finite loss at iteration {iteration}: "
                    f"d={d_loss}, g={g_loss}", last_good, log)

            iteration += 1
            if iteration % config.eval_every == 0 or iteration == total_iterations:
                ks, w1 = generator_eval_metrics(
                    g_net, training_set.transform, training_set.n_cond,
                    eval_dt, eval_s_t, z_eval, exact_eval)
                log.append(iteration, d_loss, g_loss,
                           lr_at(schedule, iteration - 1), ks, w1)
                if not all(np.isfinite(p).all() for p in (*g_net.params(),
                                                          *d_net.params())):
                    raise TrainingDiverged(
                        f"non-finite parameters at iteration {iteration}",
                        last_good, log)
                last_good = (g_net.copy(), d_net.copy())
            else:
                log.append(iteration, d_loss, g_loss, lr_at(schedule, iteration - 1))
        if epoch_callback is not None:
            epoch_callback(epoch, g_net, d_net, log)

    return TrainResult(generator=g_net, discriminator=d_net, log=log,
                       variant=variant, training_set=training_set, config=config,
                       wall_seconds=time.perf_counter() - start)
