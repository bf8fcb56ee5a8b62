"""
Diffusion approximations of SGD
===============================

An isotropic-noise SDE and the stochastic modified equation (SME) against
SGD and its Volterra limit, at a small and a large stepsize.
"""
import math

from sgd_volterra import criticality
from sgd_volterra.baselines import DiffusionConfig, run_sde, run_sme
from sgd_volterra.datagen import Isotropic, gen_instance
from sgd_volterra.harness.compare import compare
from sgd_volterra.sgd import SGDConfig, run_sgd, run_streaming
from sgd_volterra.spectral import mp_measure
from sgd_volterra.volterra import VolterraGrid, solve

n, r = 500, 1.2
model = Isotropic(n, math.ceil(r * n))
mu = mp_measure(r)
g0 = criticality.gamma_max(mu, r)
seeds = range(4)
insts = [gen_instance(model, 1.0, 0.0, s) for s in seeds]

for frac in (0.1, 0.9):
    gamma = frac * g0
    ref = solve(mu, 1.0, 0.0, r, gamma, VolterraGrid(5.0, 1e-3))
    dcfg = lambda s: DiffusionConfig(gamma, dt=2e-3, seed=s)
    runs = ([run_sgd(i, SGDConfig(gamma, seed=i.seed)) for i in insts]
            + [run_streaming(model, 1.0, 0.0, SGDConfig(gamma, seed=s)) for s in seeds]
            + [run_sde(i, dcfg(i.seed)) for i in insts]
            + [run_sme(i, dcfg(i.seed)) for i in insts])
    res = compare(runs, ref)
    print(f"gamma = {frac} gamma0")
    for e in res.entries:
        print(f"  {e.model:<10} sup-dev {e.sup_dev:.4f}   f(5) mean {e.mean[-1]:.5f}   psi(5) {ref(5.0):.5f}")
