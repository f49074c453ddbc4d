"""Iterative path construction and the path-level experiments.

All samplers step a whole ensemble at once from a shared matrix of
standard-normal draws, so GAN paths, scheme paths, and exact paths can be
compared path by path (common random numbers).  The experiments mirror the
evaluation protocol: weak/strong terminal errors across step sizes,
mean-reversion under repeated sampling, generator-map dumps, discriminator
grids, and the autocorrelation scatter.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from sdegan.gan import GanVariant, assemble_d_input
from sdegan.nn import MLP
from sdegan.preprocess import Transform, decode_output, encode_target
from sdegan.schemes import (
    SchemeKind,
    scheme_kinds_for,
    taylor_step,
    truncated_euler_step,
    truncated_milstein_step,
)
from sdegan.sde import Cir, Gbm, SdeModel, exact_sample, step_from_z, z_from_step
from sdegan.stats import weak_strong_error


@dataclass
class PathEnsemble:
    """M paths over N equal steps plus the normal draws that produced them."""

    values: np.ndarray   # (m, n_steps + 1); column 0 is s0
    z_draws: np.ndarray  # (m, n_steps)
    dt: float
    model: SdeModel
    source: str

    def __post_init__(self):
        m, cols = self.values.shape
        if self.z_draws.shape != (m, cols - 1):
            raise ValueError("values and z_draws dimensions do not agree")

    @property
    def terminal(self) -> np.ndarray:
        return self.values[:, -1]

    def to_csv(self, path, max_paths: int | None = None) -> None:
        """paths.csv: path_id, step, value."""
        m = self.values.shape[0] if max_paths is None else min(max_paths,
                                                               self.values.shape[0])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["path_id", "step", "value"])
            for i in range(m):
                for k in range(self.values.shape[1]):
                    writer.writerow([i, k, repr(float(self.values[i, k]))])


@dataclass(frozen=True)
class ExactStepper:
    """Exact transition kernel as a stepper (and as a generator stand-in)."""

    model: SdeModel
    transform: Transform | None = None
    tag: str = "exact"

    def step(self, s, dt, z):
        return step_from_z(self.model, s, dt, z)

    def r_given_z(self, z, s_t, dt):
        if self.transform is None:
            raise ValueError("ExactStepper needs a transform for encode-space output")
        return encode_target(step_from_z(self.model, s_t, dt, z), s_t, self.transform)


@dataclass(frozen=True)
class SchemeStepper:
    """Discrete-time scheme as a stepper."""

    model: SdeModel
    kind: SchemeKind

    @property
    def tag(self) -> str:
        return self.kind.value

    def step(self, s, dt, z):
        if self.kind is SchemeKind.EULER:
            return taylor_step(self.model, s, dt, z, zeta=0)
        if self.kind is SchemeKind.MILSTEIN:
            return taylor_step(self.model, s, dt, z, zeta=1)
        if self.kind is SchemeKind.TRUNCATED_EULER:
            return truncated_euler_step(self.model, s, dt, z)
        return truncated_milstein_step(self.model, s, dt, z)


@dataclass
class GanSampler:
    """Trained generator wrapped as a conditional sampler and path stepper."""

    net: MLP
    model: SdeModel
    transform: Transform
    variant: GanVariant
    dt_grid: tuple[float, ...] = ()

    @property
    def tag(self) -> str:
        return f"gan_{self.variant.value}"

    @property
    def n_cond(self) -> int:
        return self.net.in_dim - 1

    def _check_dt(self, dt: float) -> None:
        if self.dt_grid and not (min(self.dt_grid) <= dt <= max(self.dt_grid)):
            warnings.warn(
                f"dt={dt} lies outside the trained grid "
                f"[{min(self.dt_grid)}, {max(self.dt_grid)}]; extrapolating",
                RuntimeWarning, stacklevel=3)

    def r_given_z(self, z, s_t, dt):
        """Generator output in encode space for explicit draws z."""
        self._check_dt(dt)
        z = np.atleast_1d(np.asarray(z, dtype=np.float64))
        g_in = np.empty((z.size, 1 + self.n_cond))
        g_in[:, 0] = z
        g_in[:, 1] = dt
        if self.n_cond > 1:
            g_in[:, 2] = s_t
        return self.net.forward(g_in.astype(self.net.dtype)).reshape(-1).astype(np.float64)

    def step(self, s, dt, z):
        """One conditional-GAN step in level space (decode applied)."""
        self._check_dt(dt)
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        z = np.atleast_1d(np.asarray(z, dtype=np.float64))
        g_in = np.empty((z.size, 1 + self.n_cond))
        g_in[:, 0] = z
        g_in[:, 1] = dt
        if self.n_cond > 1:
            g_in[:, 2] = s
        r = self.net.forward(g_in.astype(self.net.dtype)).reshape(-1).astype(np.float64)
        return decode_output(r, s, self.transform)


def generate_paths(source, model: SdeModel, s0: float, dt: float, n_steps: int,
                   m_paths: int, z: np.ndarray | None = None,
                   rng: np.random.Generator | None = None) -> PathEnsemble:
    """Iterate a stepper from s0; column k+1 = step(column k, dt, z[:, k]).

    Pass the same z matrix to several sources for common-random-number
    comparisons; the draws are stored on the ensemble either way.
    """
    if s0 <= 0:
        raise ValueError("s0 must be positive")
    if z is None:
        if rng is None:
            raise ValueError("either z or rng must be provided")
        z = rng.standard_normal((m_paths, n_steps))
    elif z.shape != (m_paths, n_steps):
        raise ValueError(f"z must have shape ({m_paths}, {n_steps})")
    values = np.empty((m_paths, n_steps + 1))
    values[:, 0] = s0
    for k in range(n_steps):
        values[:, k + 1] = source.step(values[:, k], dt, z[:, k])
    return PathEnsemble(values=values, z_draws=z, dt=dt, model=model,
                        source=getattr(source, "tag", type(source).__name__))


@dataclass
class ErrorRow:
    dt: float
    source: str
    e_w: float
    e_s: float


def error_vs_dt_experiment(generator, model: SdeModel, s0: float, t_final: float = 2.0,
                           n_list=(40, 20, 10, 5, 4, 3, 2, 1), m_paths: int = 100_000,
                           f=None, rng: np.random.Generator | None = None,
                           extra_sources=()) -> list[ErrorRow]:
    """Weak/strong terminal error of the GAN and the schemes against exact paths.

    For each N the step is dt = T/N and one z matrix is shared by every
    source.  The generator may be asked for dt values off its training
    grid; that is reported as an extrapolation warning, not an error.
    """
    if rng is None:
        raise ValueError("rng required")
    exact = ExactStepper(model)
    sources = [generator, *(SchemeStepper(model, kind) for kind in
                            scheme_kinds_for(model)), *extra_sources, exact]
    rows = []
    for n_steps in n_list:
        dt = t_final / n_steps
        z = rng.standard_normal((m_paths, n_steps))
        ref = generate_paths(exact, model, s0, dt, n_steps, m_paths, z=z)
        for source in sources:
            ens = generate_paths(source, model, s0, dt, n_steps, m_paths, z=z)
            e_w, e_s = weak_strong_error(ens.terminal, ref.terminal, f=f)
            rows.append(ErrorRow(dt=dt, source=ens.source, e_w=e_w, e_s=e_s))
    return rows


def error_rows_to_csv(rows: list[ErrorRow], path) -> None:
    """errors.csv: dt, source, e_w, e_s."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dt", "source", "e_w", "e_s"])
        for row in rows:
            writer.writerow([repr(row.dt), row.source, repr(row.e_w), repr(row.e_s)])


@dataclass
class MeanReversionResult:
    dt: float
    s0: float
    mean_observed: np.ndarray   # length n_reps + 1, starts at s0
    mean_exact: np.ndarray      # closed-form conditional mean curve

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "mean_observed", "mean_exact"])
            for k in range(self.mean_observed.size):
                writer.writerow([k, repr(float(self.mean_observed[k])),
                                 repr(float(self.mean_exact[k]))])


def mean_reversion_experiment(generator, model: Cir, s0: float = 0.01,
                              dt: float = 1.0, n_reps: int = 100,
                              m_paths: int = 100_000,
                              rng: np.random.Generator | None = None) -> MeanReversionResult:
    """Iterate the sampler n_reps times and track the ensemble mean per step.

    The exact curve is s_bar + (s0 - s_bar) e^{-kappa k dt}.  Errors
    accumulate over the repetitions, which is the point of the experiment.
    """
    if not isinstance(model, Cir):
        raise TypeError("mean reversion experiment applies to CIR")
    if rng is None:
        raise ValueError("rng required")
    ens = generate_paths(generator, model, s0, dt, n_reps, m_paths, rng=rng)
    steps = np.arange(n_reps + 1)
    exact_curve = model.s_bar + (s0 - model.s_bar) * np.exp(-model.kappa * steps * dt)
    return MeanReversionResult(dt=dt, s0=s0, mean_observed=ens.values.mean(axis=0),
                               mean_exact=exact_curve)


@dataclass
class MapDump:
    z: np.ndarray
    r_gan: np.ndarray
    r_exact: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["z", "r_gan", "r_exact"])
            for i in range(self.z.size):
                writer.writerow([repr(float(self.z[i])), repr(float(self.r_gan[i])),
                                 repr(float(self.r_exact[i]))])


def default_map_grid() -> np.ndarray:
    return np.linspace(-3.0, 3.0, 100)


def map_dump(generator, model: SdeModel, transform: Transform, s_t: float,
             dt: float, z_grid: np.ndarray | None = None) -> MapDump:
    """Side-by-side generator map and exact map z -> r at fixed (s_t, dt)."""
    z_grid = default_map_grid() if z_grid is None else np.asarray(z_grid, dtype=np.float64)
    if not np.isfinite(z_grid).all():
        raise ValueError("z_grid must be finite")
    r_gan = generator.r_given_z(z_grid, s_t, dt)
    r_exact = encode_target(step_from_z(model, s_t, dt, z_grid), s_t, transform)
    return MapDump(z=z_grid, r_gan=np.asarray(r_gan), r_exact=np.asarray(r_exact))


@dataclass
class DiscGrid:
    z_grid: np.ndarray
    r_grid: np.ndarray
    d_out: np.ndarray  # (len(z_grid), len(r_grid))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["z", "r", "d_out"])
            for i, z in enumerate(self.z_grid):
                for j, r in enumerate(self.r_grid):
                    writer.writerow([repr(float(z)), repr(float(r)),
                                     repr(float(self.d_out[i, j]))])


def disc_grid(discriminator: MLP, variant: GanVariant, s_t: float, dt: float,
              z_grid: np.ndarray, r_grid: np.ndarray,
              n_cond: int | None = None) -> DiscGrid:
    """Supervised discriminator scores on the Cartesian (z, r) grid.

    The vanilla discriminator has no z input, so the grid is undefined for
    it and rejected.
    """
    if variant is not GanVariant.SUPERVISED:
        raise ValueError("disc_grid requires a supervised discriminator (z input)")
    z_grid = np.asarray(z_grid, dtype=np.float64)
    r_grid = np.asarray(r_grid, dtype=np.float64)
    if n_cond is None:
        n_cond = discriminator.in_dim - 2
    zz, rr = np.meshgrid(z_grid, r_grid, indexing="ij")
    cond = np.empty((zz.size, n_cond))
    cond[:, 0] = dt
    if n_cond > 1:
        cond[:, 1] = s_t
    d_in = assemble_d_input(rr.ravel(), zz.ravel(), cond, GanVariant.SUPERVISED)
    out = discriminator.forward(d_in.astype(discriminator.dtype)).reshape(zz.shape)
    return DiscGrid(z_grid=z_grid, r_grid=r_grid, d_out=out.astype(np.float64))


@dataclass
class AutocorrScatter:
    s_t: np.ndarray
    s_next_exact: np.ndarray
    s_next_gan: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["s_t", "s_next_exact", "s_next_gan"])
            for i in range(self.s_t.size):
                writer.writerow([repr(float(self.s_t[i])),
                                 repr(float(self.s_next_exact[i])),
                                 repr(float(self.s_next_gan[i]))])


def autocorr_scatter(generator, model: Cir, s0: float = 0.1, t: float = 1.0,
                     dt: float = 1.0, n: int = 1000,
                     rng: np.random.Generator | None = None) -> AutocorrScatter:
    """Conditional-dependence check: one exact step beyond exact S_t draws.

    S_t is drawn exactly from S_t | S_0; the exact next level is drawn from
    the fast sampler and its implied z recovered, then the same z drives
    the generator, so the two next-step columns are path-wise comparable.
    """
    if not isinstance(model, Cir):
        raise TypeError("autocorrelation scatter applies to CIR")
    if rng is None:
        raise ValueError("rng required")
    s_t = exact_sample(model, s0, t, rng, size=n)
    s_next = exact_sample(model, s_t, dt, rng, size=n)
    z = z_from_step(model, s_t, dt, s_next)
    s_next_gan = generator.step(s_t, dt, z)
    return AutocorrScatter(s_t=s_t, s_next_exact=s_next,
                           s_next_gan=np.asarray(s_next_gan))
