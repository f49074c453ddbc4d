"""KS / Wasserstein test-size sweep for exact-vs-exact and schemes-vs-exact.

The exact-vs-exact pair shows the finite-sample floor of both statistics;
single-step truncated Euler/Milstein at dt=1 show discretization bias that
no amount of test data removes.

Run:  python3 demos/04_distribution_benchmarks.py
"""

import numpy as np

from sdegan.schemes import truncated_euler_step, truncated_milstein_step
from sdegan.sde import Cir, exact_sample
from sdegan.stats import benchmark_sweep

model = Cir(kappa=0.1, s_bar=0.1, gamma=0.3)
s_t, dt = 0.1, 1.0


def exact_ref(n, rng):
    return exact_sample(model, s_t, dt, rng, size=n)


samplers = {
    "truncated_euler": lambda n, rng: truncated_euler_step(
        model, np.full(n, s_t), dt, rng.standard_normal(n)),
    "truncated_milstein": lambda n, rng: truncated_milstein_step(
        model, np.full(n, s_t), dt, rng.standard_normal(n)),
}

report = benchmark_sweep(samplers, n_list=(100, 1_000, 10_000, 100_000),
                         repeats=10, reference=exact_ref,
                         rng=np.random.default_rng(7))
print(f"{'sampler':>20} {'n':>8} {'ks mean':>10} {'ks std':>9} {'w1 mean':>10}")
for name, n, ks_m, ks_s, w1_m, w1_s in report.aggregate():
    print(f"{name:>20} {n:>8} {ks_m:>10.5f} {ks_s:>9.5f} {w1_m:>10.6f}")
