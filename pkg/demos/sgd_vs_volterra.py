"""
SGD traces against the deterministic limit
==========================================

Run single-sample SGD on isotropic least squares at a few stepsizes and
compare the seed-averaged objective with the Volterra solution psi.
"""
import math

import numpy as np

from sgd_volterra import criticality
from sgd_volterra.datagen import Isotropic, gen_instance
from sgd_volterra.harness.compare import compare
from sgd_volterra.sgd import SGDConfig, run_sgd
from sgd_volterra.spectral import mp_measure
from sgd_volterra.volterra import VolterraGrid, solve

n, r, R, R_tilde = 1000, 1.2, 1.0, 0.1
d = math.ceil(r * n)
mu = mp_measure(r)
g0 = criticality.gamma_max(mu, r)
insts = [gen_instance(Isotropic(n, d), R, R_tilde, seed) for seed in range(5)]

# %%
# One Volterra solve per stepsize, five SGD runs each.

for frac in (0.2, 0.6, 0.95):
    gamma = frac * g0
    ref = solve(mu, R, R_tilde, r, gamma, VolterraGrid(5.0, 1e-3))
    traces = [run_sgd(inst, SGDConfig(gamma, seed=inst.seed)) for inst in insts]
    res = compare(traces, ref).get("sgd")
    print(f"gamma = {frac:.2f} gamma0: psi(5) = {ref(5.0):.5f}, SGD mean {res.mean[-1]:.5f}, "
          f"normalised sup-dev {res.norm_sup_dev:.4f}, psi_inf = {ref.psi_inf:.5f}")

# %%
# Near gamma0 the limit is still finite; just past it psi blows up.

for frac in (0.99, 1.02):
    sol = solve(mu, R, R_tilde, r, frac * g0, VolterraGrid(30.0, 1e-2))
    print(f"{frac:.2f} gamma0: psi(30) = {sol.psi[-1]:.4g}")
print("closed form at t = 1, 0.6 gamma0:",
      float(criticality.mp_closed_form(r, 0.6 * g0, R, R_tilde, 1.0)))
