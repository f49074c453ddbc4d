"""SDE model definitions and exact conditional transition kernels.

Two models are supported: geometric Brownian motion, whose transition law
is lognormal in closed form, and the Cox-Ingersoll-Ross process, whose
transition law is a scaled non-central chi-squared distribution.  Besides
sampling, the kernels expose the conditional CDF/quantile and the
conversion between a standard-normal draw Z and the next level S, which is
what makes supervised (Z, S) training pairs possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sdegan.special_fns import (
    ncx2_cdf_values,
    ncx2_quantile_values,
    sample_ncx2_values,
    std_normal_cdf,
    std_normal_quantile,
)

# |z| beyond this carries < 1e-16 normal tail mass; z_from_step clamps here
# so that training targets stay finite for next-levels squeezed against 0.
Z_CLAMP = 8.3


@dataclass(frozen=True)
class Gbm:
    """Geometric Brownian motion dS = mu*S dt + sigma*S dW."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.sigma)):
            raise ValueError("GBM parameters must be finite")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class Cir:
    """Cox-Ingersoll-Ross process dS = kappa*(s_bar - S) dt + gamma*sqrt(S) dW."""

    kappa: float
    s_bar: float
    gamma: float

    def __post_init__(self):
        for name in ("kappa", "s_bar", "gamma"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value}")


SdeModel = Gbm | Cir


@dataclass(frozen=True)
class CirTransitionParams:
    """Non-centrality, degrees of freedom, and scale of the CIR transition law."""

    xi: float
    delta: float
    c_bar: float


class ClampCounter:
    """Counts how often z_from_step hit the +-Z_CLAMP bound."""

    def __init__(self):
        self.count = 0


def _require_cir(model: SdeModel) -> Cir:
    if not isinstance(model, Cir):
        raise TypeError(f"operation requires a CIR model, got {type(model).__name__}")
    return model


def _check_positive(name: str, value) -> None:
    if not np.all(np.asarray(value) > 0):
        raise ValueError(f"{name} must be positive")


def cir_transition_params(model: SdeModel, s_t, dt) -> CirTransitionParams:
    """Map (S_t, dt) to the scaled non-central chi-squared parameters.

    xi = 4 k S_t e^{-k dt} / (g^2 (1 - e^{-k dt})),  delta = 4 k s_bar / g^2,
    c_bar = g^2 (1 - e^{-k dt}) / (4 k).
    """
    cir = _require_cir(model)
    _check_positive("s_t", s_t)
    _check_positive("dt", dt)
    decay = math.exp(-cir.kappa * dt)
    one_minus = -math.expm1(-cir.kappa * dt)
    xi = 4.0 * cir.kappa * s_t * decay / (cir.gamma**2 * one_minus)
    delta = 4.0 * cir.kappa * cir.s_bar / cir.gamma**2
    c_bar = cir.gamma**2 * one_minus / (4.0 * cir.kappa)
    return CirTransitionParams(xi=xi, delta=delta, c_bar=c_bar)


def _cir_xi_cbar(cir: Cir, s_t: np.ndarray, dt: float) -> tuple[np.ndarray, float, float]:
    """Vector version of the transition parameters for fixed dt."""
    one_minus = -math.expm1(-cir.kappa * dt)
    decay = math.exp(-cir.kappa * dt)
    c_bar = cir.gamma**2 * one_minus / (4.0 * cir.kappa)
    xi = s_t * (decay / c_bar)
    delta = 4.0 * cir.kappa * cir.s_bar / cir.gamma**2
    return xi, delta, c_bar


def feller_delta(model: SdeModel) -> tuple[float, bool]:
    """Degrees of freedom 4 k s_bar / g^2 and whether the Feller condition holds."""
    cir = _require_cir(model)
    delta = 4.0 * cir.kappa * cir.s_bar / cir.gamma**2
    return delta, delta >= 2.0


def transition_cdf(model: SdeModel, s_t, dt, x):
    """Conditional CDF of S_{t+dt} given S_t, evaluated at x.

    GBM: lognormal.  CIR: scaled non-central chi-squared.  Values at or
    below 0 have probability 0 (both laws live on the positive reals).
    """
    _check_positive("s_t", s_t)
    _check_positive("dt", dt)
    x_arr = np.asarray(x, dtype=np.float64)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    out = np.zeros_like(x_arr)
    pos = x_arr > 0
    if isinstance(model, Gbm):
        drift = (model.mu - 0.5 * model.sigma**2) * dt
        scale = model.sigma * math.sqrt(dt)
        if np.any(pos):
            z = (np.log(np.asarray(x_arr[pos]) / s_t) - drift) / scale
            out[pos] = std_normal_cdf(z)
    else:
        xi, delta, c_bar = _cir_xi_cbar(model, np.asarray(s_t, dtype=np.float64), dt)
        if np.any(pos):
            out[pos] = ncx2_cdf_values(x_arr[pos] / c_bar, delta,
                                       np.broadcast_to(xi, x_arr.shape)[pos])
    return float(out[0]) if scalar else out


def transition_quantile(model: SdeModel, s_t, dt, prob):
    """Inverse of transition_cdf on (0, 1)."""
    _check_positive("s_t", s_t)
    _check_positive("dt", dt)
    p_arr = np.asarray(prob, dtype=np.float64)
    scalar = p_arr.ndim == 0
    p_arr = np.atleast_1d(p_arr)
    if not np.all((p_arr > 0) & (p_arr < 1)):
        raise ValueError("transition_quantile requires 0 < prob < 1")
    if isinstance(model, Gbm):
        drift = (model.mu - 0.5 * model.sigma**2) * dt
        scale = model.sigma * math.sqrt(dt)
        z = np.atleast_1d(std_normal_quantile(p_arr))
        out = s_t * np.exp(drift + scale * z)
    else:
        xi, delta, c_bar = _cir_xi_cbar(model, np.asarray(s_t, dtype=np.float64), dt)
        out = c_bar * np.atleast_1d(ncx2_quantile_values(p_arr, delta, xi))
    return float(out[0]) if scalar else out


def step_from_z(model: SdeModel, s_t, dt, z):
    """Exact next level implied by a standard-normal draw z.

    Evaluates F^{-1}(Phi(z)) for the transition law; for GBM this is the
    closed form s_t * exp((mu - sigma^2/2) dt + sigma sqrt(dt) z).
    """
    _check_positive("s_t", s_t)
    _check_positive("dt", dt)
    z_arr = np.asarray(z, dtype=np.float64)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)
    if not np.isfinite(z_arr).all():
        raise ValueError("z must be finite")
    if isinstance(model, Gbm):
        drift = (model.mu - 0.5 * model.sigma**2) * dt
        scale = model.sigma * math.sqrt(dt)
        out = s_t * np.exp(drift + scale * z_arr)
    else:
        p = np.atleast_1d(std_normal_cdf(z_arr))
        # Phi saturates in doubles around |z| ~ 8.2; keep the probability
        # strictly inside (0, 1) so the quantile stays defined.
        p = np.clip(p, 1e-300, 1.0 - 1e-16)
        xi, delta, c_bar = _cir_xi_cbar(model, np.asarray(s_t, dtype=np.float64), dt)
        out = c_bar * np.atleast_1d(ncx2_quantile_values(p, delta, xi))
    return float(out[0]) if scalar else out


def z_from_step(model: SdeModel, s_t, dt, s_next, clamp_counter: ClampCounter | None = None):
    """Standard-normal draw implied by an observed next level.

    Inverse of step_from_z.  For next levels squeezed against the support
    boundary the implied z is clamped to +-Z_CLAMP (< 1e-16 tail mass);
    pass a ClampCounter to record how often that happens.
    """
    _check_positive("s_t", s_t)
    _check_positive("dt", dt)
    s_arr = np.asarray(s_next, dtype=np.float64)
    scalar = s_arr.ndim == 0
    s_arr = np.atleast_1d(s_arr)
    if not np.all(s_arr > 0):
        raise ValueError("s_next must be inside the positive support")
    if isinstance(model, Gbm):
        drift = (model.mu - 0.5 * model.sigma**2) * dt
        scale = model.sigma * math.sqrt(dt)
        z = (np.log(s_arr / s_t) - drift) / scale
    else:
        xi, delta, c_bar = _cir_xi_cbar(model, np.asarray(s_t, dtype=np.float64), dt)
        p = ncx2_cdf_values(s_arr / c_bar, delta, np.broadcast_to(xi, s_arr.shape))
        tiny = 1e-300
        p = np.clip(p, tiny, 1.0 - 1e-16)
        z = np.atleast_1d(std_normal_quantile(p))
    clipped = np.abs(z) > Z_CLAMP
    if clipped.any():
        if clamp_counter is not None:
            clamp_counter.count += int(clipped.sum())
        z = np.clip(z, -Z_CLAMP, Z_CLAMP)
    return float(z[0]) if scalar else z


def exact_sample(model: SdeModel, s_t, dt, rng: np.random.Generator, size=None):
    """Draw from the exact transition law (no z bookkeeping).

    GBM uses the lognormal closed form; CIR uses the Poisson-mixture
    non-central chi-squared sampler, which is the fast path when the
    normal draw behind each sample is not needed.
    """
    _check_positive("s_t", s_t)
    _check_positive("dt", dt)
    if isinstance(model, Gbm):
        z = rng.standard_normal(size) if size is not None else rng.standard_normal()
        return step_from_z(model, s_t, dt, z)
    cir = model
    xi, delta, c_bar = _cir_xi_cbar(cir, np.asarray(s_t, dtype=np.float64), dt)
    return c_bar * sample_ncx2_values(delta, xi, rng, size=size)


def exact_sample_with_z(model: SdeModel, s_t, dt, rng: np.random.Generator,
                        size=None, mode: str = "inverse_cdf",
                        clamp_counter: ClampCounter | None = None):
    """Draw (s_next, z) pairs related by the transition-law bijection.

    mode "inverse_cdf" draws z ~ N(0,1) first and maps it through the
    conditional quantile; mode "mixture" draws s_next from the fast
    sampler and recovers z afterwards.  The two are identical in law.
    """
    if mode == "inverse_cdf":
        z = rng.standard_normal(size) if size is not None else rng.standard_normal()
        return step_from_z(model, s_t, dt, z), z
    if mode == "mixture":
        s_next = exact_sample(model, s_t, dt, rng, size=size)
        return s_next, z_from_step(model, s_t, dt, s_next, clamp_counter=clamp_counter)
    raise ValueError(f"unknown pairing mode {mode!r}")
