"""Target-space transforms and construction of supervised (Z, R) training sets.

The networks never see raw levels: GBM targets are logreturns and CIR
targets are shifted/scaled by the long-term mean (with a rectified inverse,
since the CIR law can squeeze the generator output against zero).  The
training set pairs every standard-normal draw Z with the exact transformed
step it implies, which is what lets the supervised discriminator see the
(Z, R) bijection.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from sdegan.sde import Cir, Gbm, SdeModel, step_from_z

# Appendix-style default conditional grids.
DEFAULT_DT_GRID = (0.05, 0.1, 0.2, 0.4, 0.5, 0.67, 1.0, 2.0)
DEFAULT_CIR_S_T_GRID = (0.01, 0.05, 0.1, 0.15, 0.2, 0.3)


@dataclass(frozen=True)
class LogReturn:
    """r = ln(s_next / s_t); inverse s_t * exp(r)."""


@dataclass(frozen=True)
class MeanScale:
    """r = (s_next - s_bar) / s_bar; rectified inverse |(r + 1) * s_bar|."""

    s_bar: float

    def __post_init__(self):
        if not (np.isfinite(self.s_bar) and self.s_bar > 0):
            raise ValueError(f"s_bar must be positive, got {self.s_bar}")


Transform = LogReturn | MeanScale


def default_transform(model: SdeModel) -> Transform:
    """LogReturn for GBM; MeanScale for CIR, whose paths can approach zero."""
    if isinstance(model, Gbm):
        return LogReturn()
    return MeanScale(s_bar=model.s_bar)


def transform_name(kind: Transform) -> str:
    return "log_return" if isinstance(kind, LogReturn) else "mean_scale"


def encode_target(s_next, s_t, kind: Transform):
    """Map a raw next level into network target space."""
    s_next = np.asarray(s_next, dtype=np.float64)
    if isinstance(kind, LogReturn):
        if np.any(s_next <= 0) or np.any(np.asarray(s_t) <= 0):
            raise ValueError("LogReturn requires positive s_next and s_t")
        out = np.log(s_next / s_t)
    else:
        if np.any(s_next <= 0):
            raise ValueError("encode_target requires positive s_next")
        out = (s_next - kind.s_bar) / kind.s_bar
    return out if out.ndim else float(out)


def decode_output(r, s_t, kind: Transform):
    """Map a network output back to level space.

    The MeanScale inverse is rectified (absolute value) so that generator
    outputs slightly past the support boundary stay admissible levels.
    """
    r = np.asarray(r, dtype=np.float64)
    if not np.isfinite(r).all():
        raise ValueError("decode_output requires finite r")
    if isinstance(kind, LogReturn):
        out = np.asarray(s_t) * np.exp(r)
    else:
        out = np.abs((r + 1.0) * kind.s_bar)
    return out if out.ndim else float(out)


@dataclass
class TrainingSet:
    """Columnar store of supervised rows (z, r, conditionals).

    cond columns are dt and, for CIR, s_t.  Every row satisfies
    r = encode(step_from_z(model, s_t, dt, z)).
    """

    z: np.ndarray
    r: np.ndarray
    cond: np.ndarray
    cond_names: tuple[str, ...]
    model: SdeModel
    transform: Transform
    dt_grid: tuple[float, ...]
    s_t_grid: tuple[float, ...]
    requested_n: int
    seed_note: str = ""
    clamp_count: int = 0
    gbm_s_t: float = field(default=1.0)

    def __len__(self) -> int:
        return self.z.size

    @property
    def n_cond(self) -> int:
        return self.cond.shape[1]

    def row_s_t(self) -> np.ndarray:
        if "s_t" in self.cond_names:
            return self.cond[:, self.cond_names.index("s_t")]
        return np.full(len(self), self.gbm_s_t)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["z", "r", *self.cond_names])
            for i in range(len(self)):
                writer.writerow([repr(float(self.z[i])), repr(float(self.r[i])),
                                 *(repr(float(v)) for v in self.cond[i])])


def build_training_set(model: SdeModel, transform: Transform,
                       dt_grid, s_t_grid, n_train: int,
                       rng: np.random.Generator,
                       gbm_s_t: float = 1.0) -> TrainingSet:
    """Draw a supervised training set over the conditional grid.

    Each grid cell receives exactly n_train // n_cells rows (n_train is
    truncated to a multiple of the cell count and the truncation recorded).
    Conditional coverage is the full Cartesian product of the grids: every
    cell appears exactly per_cell times, and the row order is shuffled so
    that sequential slices stay mixed.  GBM rows carry only dt (logreturns
    remove the s_t dependence); CIR rows carry (dt, s_t).
    """
    dt_grid = tuple(float(v) for v in dt_grid)
    if not dt_grid or any(v <= 0 for v in dt_grid):
        raise ValueError("dt_grid must be non-empty with positive entries")
    if isinstance(model, Cir):
        s_t_grid = tuple(float(v) for v in s_t_grid)
        if not s_t_grid or any(v <= 0 for v in s_t_grid):
            raise ValueError("s_t_grid must be non-empty with positive entries")
        cells = [(dt, s) for dt in dt_grid for s in s_t_grid]
        cond_names = ("dt", "s_t")
    else:
        s_t_grid = ()
        cells = [(dt,) for dt in dt_grid]
        cond_names = ("dt",)

    n_cells = len(cells)
    if n_train < n_cells:
        raise ValueError(f"n_train={n_train} smaller than the {n_cells}-cell grid")
    per_cell = n_train // n_cells
    n_used = per_cell * n_cells
    note = "" if n_used == n_train else f"n_train truncated {n_train} -> {n_used}"

    cell_index = np.repeat(np.arange(n_cells), per_cell)
    rng.shuffle(cell_index)
    cond = np.asarray(cells, dtype=np.float64)[cell_index]

    z = rng.standard_normal(n_used)
    r = np.empty(n_used)
    s_t_col = cond[:, 1] if isinstance(model, Cir) else np.full(n_used, gbm_s_t)
    for dt in dt_grid:
        rows = cond[:, 0] == dt
        s_next = step_from_z(model, s_t_col[rows], float(dt), z[rows])
        r[rows] = encode_target(s_next, s_t_col[rows], transform)

    return TrainingSet(z=z, r=r, cond=cond, cond_names=cond_names, model=model,
                       transform=transform, dt_grid=dt_grid, s_t_grid=s_t_grid,
                       requested_n=n_train, seed_note=note,
                       clamp_count=0, gbm_s_t=gbm_s_t)
