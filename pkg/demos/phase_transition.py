"""
The freezing transition in the convergence rate
===============================================

For Marchenko-Pastur data with r = 4 the decay rate of the Volterra
solution is 2 gamma lambda_minus up to the critical stepsize and
2 gamma lambda*(gamma) beyond it.  This script fits the rate from the
solver and prints it next to both predictions.
"""
import numpy as np

from sgd_volterra import criticality
from sgd_volterra.harness.sweep import rate_sweep
from sgd_volterra.spectral import mp_measure

r = 4.0
mu = mp_measure(r)
g0 = criticality.gamma_max(mu, r)
gs = criticality.gamma_star(mu, r)
print(f"gamma0 = {g0:.4f}, gamma* = {gs:.4f}, lambda_minus = {mu.lambda_minus:.4f}")

# %%
# Fitted versus predicted rate across the convergent range.

gammas = np.linspace(0.05, 0.95, 10) * g0
for row in rate_sweep(r, gammas, mu):
    frozen = 2 * row.gamma * mu.lambda_minus
    print(f"gamma {row.gamma:.3f}  {row.regime:<13} fitted {row.fitted:.4f}  "
          f"predicted {row.predicted:.4f}  (frozen branch {frozen:.4f})")

# %%
# The rate peaks at gamma*: below it larger steps help linearly, above it
# lambda* falls to 0 as gamma approaches gamma0.

g = np.linspace(gs, 0.999 * g0, 6)[1:]
lam = [criticality.malthusian_lambda(mu, r, x) for x in g]
print(f"gamma* {gs:.3f}  lambda* {mu.lambda_minus:.4f}  rate {2 * gs * mu.lambda_minus:.4f}")
for x, l in zip(g, lam):
    print(f"gamma {x:.3f}  lambda* {l:.4f}  rate {2 * x * l:.4f}")
