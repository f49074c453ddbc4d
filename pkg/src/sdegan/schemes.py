"""Discrete-time baseline steppers for path-wise comparison with the GAN.

Every stepper takes the standard-normal draw z explicitly instead of an
rng: reusing one z-stream across schemes and the exact kernel is what makes
strong (path-wise) errors well defined.  GBM gets the stochastic-Taylor
Euler/Milstein step; CIR gets the truncated variants that stay computable
when a path dips to (or below) zero.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from sdegan.sde import Cir, Gbm, SdeModel


class SchemeKind(Enum):
    EULER = "euler"
    MILSTEIN = "milstein"
    TRUNCATED_EULER = "truncated_euler"
    TRUNCATED_MILSTEIN = "truncated_milstein"


def scheme_kinds_for(model: SdeModel) -> tuple[SchemeKind, ...]:
    """The schemes valid for a model: plain Taylor steps for GBM, truncated for CIR."""
    if isinstance(model, Gbm):
        return (SchemeKind.EULER, SchemeKind.MILSTEIN)
    return (SchemeKind.TRUNCATED_EULER, SchemeKind.TRUNCATED_MILSTEIN)


def taylor_step(model: SdeModel, s_t, dt: float, z, zeta: int):
    """One Euler (zeta=0) or Milstein (zeta=1) step for GBM.

    s + A dt + B sqrt(dt) z + zeta * (1/2) B B' (dt z^2 - dt) with
    A = mu s, B = sigma s, B' = sigma.
    """
    if not isinstance(model, Gbm):
        raise TypeError("taylor_step applies to GBM only; CIR uses the truncated schemes")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if zeta not in (0, 1):
        raise ValueError("zeta selects Euler (0) or Milstein (1)")
    s = np.asarray(s_t, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    out = s + model.mu * s * dt + model.sigma * s * math.sqrt(dt) * z
    if zeta:
        out = out + 0.5 * model.sigma**2 * s * (dt * z * z - dt)
    return out if out.ndim else float(out)


def truncated_euler_step(model: SdeModel, s_t, dt: float, z):
    """Truncated Euler step for CIR; negative inputs are allowed.

    The diffusion argument is floored at zero, so a negative path keeps
    drifting back without noise until it recrosses zero.
    """
    if not isinstance(model, Cir):
        raise TypeError("truncated_euler_step applies to CIR only")
    if dt <= 0:
        raise ValueError("dt must be positive")
    s = np.asarray(s_t, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    out = (s + model.kappa * (model.s_bar - s) * dt
           + model.gamma * np.sqrt(np.maximum(s, 0.0)) * math.sqrt(dt) * z)
    return out if out.ndim else float(out)


def truncated_milstein_step(model: SdeModel, s_t, dt: float, z):
    """Truncated Milstein step for CIR; the result is always non-negative.

    ((max(g/2 sqrt(dt), sqrt(max(g/2 sqrt(dt), s)) + g/2 sqrt(dt) z))^2
     + (kappa s_bar - g^2/4 - kappa s) dt)^+
    """
    if not isinstance(model, Cir):
        raise TypeError("truncated_milstein_step applies to CIR only")
    if dt <= 0:
        raise ValueError("dt must be positive")
    s = np.asarray(s_t, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    half_vol = 0.5 * model.gamma * math.sqrt(dt)
    inner = np.sqrt(np.maximum(half_vol, s)) + half_vol * z
    sq = np.maximum(half_vol, inner) ** 2
    drift = (model.kappa * model.s_bar - 0.25 * model.gamma**2 - model.kappa * s) * dt
    out = np.maximum(sq + drift, 0.0)
    return out if out.ndim else float(out)
