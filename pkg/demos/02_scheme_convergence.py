"""Strong-convergence rates of Euler and Milstein on GBM with common draws.

The exact path driven by the same normal increments is the strong-error
reference.  Expect a log-log slope near 1/2 for Euler and near 1 for
Milstein.

Run:  python3 demos/02_scheme_convergence.py
"""

import numpy as np

from sdegan.sde import Gbm, step_from_z
from sdegan.schemes import taylor_step

model = Gbm(mu=0.05, sigma=0.2)
rng = np.random.default_rng(42)
m_paths = 50_000
t_final = 1.0
dts = [2.0**-k for k in range(4, 9)]

for zeta, name in ((0, "euler"), (1, "milstein")):
    errors = []
    for dt in dts:
        n = round(t_final / dt)
        z = rng.standard_normal((m_paths, n))
        exact = np.full(m_paths, 1.0)
        approx = np.full(m_paths, 1.0)
        for k in range(n):
            exact = step_from_z(model, exact, dt, z[:, k])
            approx = taylor_step(model, approx, dt, z[:, k], zeta=zeta)
        errors.append(np.mean(np.abs(exact - approx)))
    slope = np.polyfit(np.log(dts), np.log(errors), 1)[0]
    print(f"{name}: strong errors {['%.2e' % e for e in errors]}  slope={slope:.3f}")
