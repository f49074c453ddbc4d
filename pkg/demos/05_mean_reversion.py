"""Mean reversion of iterated exact CIR sampling against the closed form.

With the exact kernel in place of a generator the observed means track
s_bar + (s0 - s_bar) exp(-kappa k dt); substituting a trained GAN (see the
mean-revert CLI command) shows how its conditional errors accumulate over
the repetitions.

Run:  python3 demos/05_mean_reversion.py
"""

import numpy as np

from sdegan.paths import ExactStepper, mean_reversion_experiment
from sdegan.sde import Cir

model = Cir(kappa=0.1, s_bar=0.1, gamma=0.3)
result = mean_reversion_experiment(ExactStepper(model), model, s0=0.01, dt=1.0,
                                   n_reps=50, m_paths=50_000,
                                   rng=np.random.default_rng(3))
print(f"{'step':>5} {'observed':>10} {'exact':>10}")
for k in range(0, 51, 5):
    print(f"{k:>5} {result.mean_observed[k]:>10.6f} {result.mean_exact[k]:>10.6f}")
