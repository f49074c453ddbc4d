"""Conditional-GAN sampling of 1D Ito SDE transition laws, trained on exact simulation.

The package covers the numerical building blocks (special functions, exact
transition kernels, discrete-time baseline schemes), a dense network stack
(forward, exact backprop, Adam), the vanilla and supervised conditional GAN
training loops, and the evaluation harness (distribution distances,
weak/strong path errors, generator-map and discriminator diagnostics).
"""

from sdegan.gan import GanVariant, TrainConfig, train
from sdegan.preprocess import (
    LogReturn,
    MeanScale,
    build_training_set,
    decode_output,
    default_transform,
    encode_target,
)
from sdegan.sde import (
    Cir,
    Gbm,
    cir_transition_params,
    exact_sample,
    feller_delta,
    step_from_z,
    transition_cdf,
    transition_quantile,
    z_from_step,
)
from sdegan.special_fns import Ncx2Params, ncx2_cdf, ncx2_quantile, sample_ncx2
from sdegan.stats import benchmark_sweep, ks_two_sample, wasserstein1, weak_strong_error

__all__ = [
    "GanVariant",
    "TrainConfig",
    "train",
    "LogReturn",
    "MeanScale",
    "build_training_set",
    "decode_output",
    "default_transform",
    "encode_target",
    "Cir",
    "Gbm",
    "cir_transition_params",
    "exact_sample",
    "feller_delta",
    "step_from_z",
    "transition_cdf",
    "transition_quantile",
    "z_from_step",
    "Ncx2Params",
    "ncx2_cdf",
    "ncx2_quantile",
    "sample_ncx2",
    "benchmark_sweep",
    "ks_two_sample",
    "wasserstein1",
    "weak_strong_error",
]

__version__ = "0.1.0"
