"""Non-parametric distances, weak/strong error estimators, and the test-size sweep.

The KS statistic is the sup-norm distance between (empirical) CDFs; the
1-Wasserstein distance integrates the absolute quantile difference, which
for equal sample sizes reduces to the mean absolute difference of order
statistics.  The sweep protocol evaluates each sampler against fresh exact
samples over a range of test sizes with repeats, including the
exact-vs-exact self-baseline that shows the finite-sample floor.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


def ks_two_sample(x, y) -> float:
    """KS statistic between two samples, or between a sample and a CDF.

    Pass an array for y to get the two-sample statistic; pass a callable
    (an analytic CDF) to get the one-sample statistic against it.
    """
    x = np.sort(np.asarray(x, dtype=np.float64))
    if x.size == 0:
        raise ValueError("empty sample")
    n = x.size
    if callable(y):
        cdf = np.asarray(y(x), dtype=np.float64)
        upper = np.max(np.arange(1, n + 1) / n - cdf)
        lower = np.max(cdf - np.arange(0, n) / n)
        return float(max(upper, lower))
    y = np.sort(np.asarray(y, dtype=np.float64))
    if y.size == 0:
        raise ValueError("empty sample")
    grid = np.concatenate([x, y])
    cdf_x = np.searchsorted(x, grid, side="right") / n
    cdf_y = np.searchsorted(y, grid, side="right") / y.size
    return float(np.max(np.abs(cdf_x - cdf_y)))


def wasserstein1(x, y) -> float:
    """1-Wasserstein distance between two empirical distributions.

    Computed as the exact integral of |F_X - F_Y| over the merged support,
    which equals the integral of the absolute quantile difference; no
    subsampling for unequal sizes.
    """
    x = np.sort(np.asarray(x, dtype=np.float64))
    y = np.sort(np.asarray(y, dtype=np.float64))
    if x.size == 0 or y.size == 0:
        raise ValueError("empty sample")
    grid = np.sort(np.concatenate([x, y]))
    deltas = np.diff(grid)
    cdf_x = np.searchsorted(x, grid[:-1], side="right") / x.size
    cdf_y = np.searchsorted(y, grid[:-1], side="right") / y.size
    return float(np.sum(np.abs(cdf_x - cdf_y) * deltas))


def weak_strong_error(gan_terminal, ref_terminal, f=None) -> tuple[float, float]:
    """Weak and strong error of paired terminal values (common random numbers).

    e_w = |mean f(ref) - mean f(gan)|, e_s = mean |ref - gan|.  The default
    test function is the identity.
    """
    gan_terminal = np.asarray(gan_terminal, dtype=np.float64)
    ref_terminal = np.asarray(ref_terminal, dtype=np.float64)
    if gan_terminal.shape != ref_terminal.shape:
        raise ValueError("paired samples must have equal length")
    if f is None:
        f_gan, f_ref = gan_terminal, ref_terminal
    else:
        f_gan, f_ref = f(gan_terminal), f(ref_terminal)
    e_w = float(abs(np.mean(f_ref) - np.mean(f_gan)))
    e_s = float(np.mean(np.abs(ref_terminal - gan_terminal)))
    return e_w, e_s


@dataclass
class EvalReport:
    """Per-repeat sweep results plus mean/std aggregation."""

    rows: list[tuple[str, int, int, float, float]]  # sampler, n, repeat, ks, w1

    def samplers(self) -> list[str]:
        seen = dict.fromkeys(name for name, *_ in self.rows)
        return list(seen)

    def aggregate(self) -> list[tuple[str, int, float, float, float, float]]:
        """(sampler, n, ks_mean, ks_std, w1_mean, w1_std) rows, input order."""
        groups: dict[tuple[str, int], list[tuple[float, float]]] = {}
        for name, n, _, ks, w1 in self.rows:
            groups.setdefault((name, n), []).append((ks, w1))
        out = []
        for (name, n), vals in groups.items():
            ks = np.array([v[0] for v in vals])
            w1 = np.array([v[1] for v in vals])
            out.append((name, n, float(ks.mean()), float(ks.std(ddof=1)) if ks.size > 1 else 0.0,
                        float(w1.mean()), float(w1.std(ddof=1)) if w1.size > 1 else 0.0))
        return out

    def mean_ks(self, sampler: str, n: int) -> float:
        vals = [ks for name, size, _, ks, _ in self.rows if name == sampler and size == n]
        return float(np.mean(vals))

    def mean_w1(self, sampler: str, n: int) -> float:
        vals = [w1 for name, size, _, _, w1 in self.rows if name == sampler and size == n]
        return float(np.mean(vals))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sampler", "n", "repeat", "ks", "w1"])
            for name, n, rep, ks, w1 in self.rows:
                writer.writerow([name, n, rep, repr(ks), repr(w1)])

    def aggregate_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sampler", "n", "ks_mean", "ks_std", "w1_mean", "w1_std"])
            for row in self.aggregate():
                writer.writerow([row[0], row[1], *(repr(v) for v in row[2:])])


DEFAULT_SWEEP_SIZES = (100, 1_000, 10_000, 100_000)


def benchmark_sweep(samplers: dict, n_list=DEFAULT_SWEEP_SIZES, repeats: int = 10,
                    reference=None, rng: np.random.Generator | None = None) -> EvalReport:
    """KS/W1 of each named sampler against fresh exact samples, over test sizes.

    samplers maps name -> callable(n, rng) -> samples; reference is the
    exact sampler used for the comparison draws.  An "exact" self-baseline
    is always included.  Results are deterministic given the rng: repeats
    are evaluated in a fixed (sampler, n, repeat) order with child streams
    spawned per task.
    """
    if reference is None:
        raise ValueError("benchmark_sweep requires a reference sampler")
    n_list = tuple(int(n) for n in n_list)
    if not n_list:
        raise ValueError("n_list must be non-empty")
    if repeats < 2:
        raise ValueError("repeats must be at least 2")
    if rng is None:
        rng = np.random.default_rng()

    named = {"exact": reference, **samplers}
    rows = []
    for name, sampler in named.items():
        for n in n_list:
            for rep in range(repeats):
                task_rng = np.random.default_rng(rng.integers(0, 2**63 - 1))
                try:
                    sample = np.asarray(sampler(n, task_rng), dtype=np.float64)
                except Exception as exc:
                    raise RuntimeError(f"sampler {name!r} failed at n={n}") from exc
                ref = np.asarray(reference(n, task_rng), dtype=np.float64)
                rows.append((name, n, rep, ks_two_sample(sample, ref),
                             wasserstein1(sample, ref)))
    return EvalReport(rows=rows)
