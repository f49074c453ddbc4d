"""Figure rendering for the CSV artifacts of the sampling pipeline.

Six plot kinds, one per artifact family:

    ecdf          samples.csv (source,value): ECDF overlay per source
    sweep         sweep.csv (sampler,n,repeat,ks,w1): statistic vs test
                  size, mean line with a +-1 std band over repeats
    error_dt      errors.csv (dt,source,e_w,e_s): log-log error curves
    mean_revert   mean_revert.csv (step,mean_observed,mean_exact)
    map_scatter   map.csv (z,r_gan,r_exact)
    disc_heatmap  grid.csv (z,r,d_out): discriminator scores as a heatmap

Rendering is deterministic and side-effect-free apart from the output
image, so reruns overwrite cleanly.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

PLOT_KINDS = ("ecdf", "sweep", "error_dt", "mean_revert", "map_scatter",
              "disc_heatmap")

_REQUIRED_COLUMNS = {
    "ecdf": ("source", "value"),
    "sweep": ("sampler", "n", "repeat", "ks", "w1"),
    "error_dt": ("dt", "source", "e_w", "e_s"),
    "mean_revert": ("step", "mean_observed", "mean_exact"),
    "map_scatter": ("z", "r_gan", "r_exact"),
    "disc_heatmap": ("z", "r", "d_out"),
}


class PlotError(ValueError):
    """Bad plot specification or input CSV."""


@dataclass
class PlotSpec:
    kind: str
    inputs: list[str]
    output: str
    labels: dict = field(default_factory=dict)
    metric: str = "ks"

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise PlotError(f"unknown plot kind {self.kind!r}; "
                            f"expected one of {', '.join(PLOT_KINDS)}")
        if not self.inputs:
            raise PlotError("at least one input CSV is required")


def _read_csv(path, kind: str) -> dict[str, list[str]]:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise PlotError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise PlotError(f"{path}: empty CSV")
    header, body = rows[0], rows[1:]
    missing = [c for c in _REQUIRED_COLUMNS[kind] if c not in header]
    if missing:
        raise PlotError(f"{path}: missing column(s) for {kind}: "
                        f"{', '.join(missing)}")
    columns = {name: [] for name in header}
    for row in body:
        for name, value in zip(header, row):
            columns[name].append(value)
    return columns


def _floats(columns: dict, name: str) -> np.ndarray:
    return np.array([float(v) for v in columns[name]])


def aggregate_sweep(columns: dict, metric: str):
    """Per-(sampler, n) mean and sample std of a sweep metric.

    Returns {sampler: (n_values, means, stds, n_repeats)} with n ascending.
    """
    sampler = np.array(columns["sampler"])
    n = _floats(columns, "n")
    values = _floats(columns, metric)
    out = {}
    for name in dict.fromkeys(columns["sampler"]):
        rows = sampler == name
        sizes = np.unique(n[rows])
        means, stds, counts = [], [], []
        for size in sizes:
            vals = values[rows & (n == size)]
            means.append(vals.mean())
            stds.append(vals.std(ddof=1) if vals.size > 1 else 0.0)
            counts.append(vals.size)
        out[name] = (sizes, np.array(means), np.array(stds), min(counts))
    return out


def _render_ecdf(ax, spec: PlotSpec) -> None:
    for path in spec.inputs:
        columns = _read_csv(path, "ecdf")
        values = _floats(columns, "value")
        sources = np.array(columns["source"])
        for name in dict.fromkeys(columns["source"]):
            data = np.sort(values[sources == name])
            ax.step(data, np.arange(1, data.size + 1) / data.size,
                    where="post", label=name)
    ax.set_xlabel(spec.labels.get("x", "value"))
    ax.set_ylabel("empirical CDF")
    ax.legend()


def _render_sweep(ax, spec: PlotSpec) -> None:
    columns = _read_csv(spec.inputs[0], "sweep")
    if spec.metric not in ("ks", "w1"):
        raise PlotError(f"sweep metric must be ks or w1, got {spec.metric!r}")
    groups = aggregate_sweep(columns, spec.metric)
    for name, (sizes, means, stds, n_repeats) in groups.items():
        line, = ax.plot(sizes, means, marker="o", label=name)
        if n_repeats > 1:
            ax.fill_between(sizes, means - stds, means + stds,
                            color=line.get_color(), alpha=0.25, linewidth=0)
        else:
            warnings.warn(f"sweep sampler {name!r} has a single repeat; "
                          "no std band drawn", RuntimeWarning)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("test-set size")
    ax.set_ylabel(spec.metric)
    ax.legend()


def _render_error_dt(ax, spec: PlotSpec) -> None:
    columns = _read_csv(spec.inputs[0], "error_dt")
    dt = _floats(columns, "dt")
    sources = np.array(columns["source"])
    for name in dict.fromkeys(columns["source"]):
        rows = sources == name
        order = np.argsort(dt[rows])
        e_s = _floats(columns, "e_s")[rows][order]
        e_w = _floats(columns, "e_w")[rows][order]
        line, = ax.plot(dt[rows][order], np.maximum(e_s, 1e-18), marker="o",
                        label=f"{name} strong")
        ax.plot(dt[rows][order], np.maximum(e_w, 1e-18), linestyle="--",
                marker="x", color=line.get_color(), label=f"{name} weak")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("dt")
    ax.set_ylabel("terminal error")
    ax.legend(fontsize="small")


def _render_mean_revert(ax, spec: PlotSpec) -> None:
    columns = _read_csv(spec.inputs[0], "mean_revert")
    step = _floats(columns, "step")
    ax.plot(step, _floats(columns, "mean_observed"), label="observed")
    ax.plot(step, _floats(columns, "mean_exact"), linestyle="--", label="exact")
    ax.set_xlabel("repetition")
    ax.set_ylabel("ensemble mean")
    ax.legend()


def _render_map_scatter(ax, spec: PlotSpec) -> None:
    columns = _read_csv(spec.inputs[0], "map_scatter")
    z = _floats(columns, "z")
    order = np.argsort(z)
    ax.plot(z[order], _floats(columns, "r_exact")[order], color="black",
            label="exact map")
    ax.scatter(z, _floats(columns, "r_gan"), s=12, color="tab:orange",
               label="generator")
    ax.set_xlabel("z")
    ax.set_ylabel("r")
    ax.legend()


def _render_disc_heatmap(ax, fig, spec: PlotSpec) -> None:
    columns = _read_csv(spec.inputs[0], "disc_heatmap")
    z = _floats(columns, "z")
    r = _floats(columns, "r")
    d = _floats(columns, "d_out")
    z_vals = np.unique(z)
    r_vals = np.unique(r)
    grid = np.full((z_vals.size, r_vals.size), np.nan)
    zi = np.searchsorted(z_vals, z)
    ri = np.searchsorted(r_vals, r)
    grid[zi, ri] = d
    mesh = ax.pcolormesh(z_vals, r_vals, grid.T, vmin=0.0, vmax=1.0,
                         cmap="viridis", shading="nearest")
    fig.colorbar(mesh, ax=ax, label="discriminator output")
    ax.set_xlim(z_vals.min(), z_vals.max())
    ax.set_ylim(r_vals.min(), r_vals.max())
    ax.set_xlabel("z")
    ax.set_ylabel("r")


def render(spec: PlotSpec) -> str:
    """Render the spec to its output image and return the output path."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    try:
        if spec.kind == "ecdf":
            _render_ecdf(ax, spec)
        elif spec.kind == "sweep":
            _render_sweep(ax, spec)
        elif spec.kind == "error_dt":
            _render_error_dt(ax, spec)
        elif spec.kind == "mean_revert":
            _render_mean_revert(ax, spec)
        elif spec.kind == "map_scatter":
            _render_map_scatter(ax, spec)
        else:
            _render_disc_heatmap(ax, fig, spec)
        if "title" in spec.labels:
            ax.set_title(spec.labels["title"])
        fig.tight_layout()
        Path(spec.output).parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.output)
    finally:
        plt.close(fig)
    return spec.output
