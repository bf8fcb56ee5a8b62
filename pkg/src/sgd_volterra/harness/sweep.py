"""Fitted versus predicted asymptotic decay rates across stepsizes."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import criticality, volterra
from ..spectral import SpectralMeasure, mp_measure

__all__ = ["SweepRow", "rate_sweep", "default_gamma_grid", "write_sweep"]


@dataclass(frozen=True)
class SweepRow:
    gamma: float
    fitted: float
    predicted: float
    regime: str
    flag: str = ""


def default_gamma_grid(mu: SpectralMeasure, r: float, count: int = 30,
                       lo_frac: float = 0.06, hi_frac: float = 0.97) -> np.ndarray:
    g0 = criticality.gamma_max(mu, r)
    return np.linspace(lo_frac * g0, hi_frac * g0, count)


def _fit_one(mu, r, gamma, dtau, tau_min, rate_horizon, R, R_tilde):
    rep = criticality.asymptotic_rate(mu, r, gamma, R, R_tilde)
    if rep.regime == "divergent":
        return SweepRow(gamma, math.nan, math.nan, "divergent", "skipped: gamma >= gamma0")
    env = rep.envelope
    lam = env.exp_rate / (2 * gamma)
    # Work in tau = 2 gamma t so the grid resolves the same spectral scale for every gamma.
    tau_max = max(tau_min, rate_horizon / lam) if lam > 0 else tau_min
    grid = volterra.VolterraGrid(t_max=tau_max / (2 * gamma), dt=dtau / (2 * gamma))
    sol = volterra.solve(mu, R, R_tilde, r, gamma, grid)
    fitted = criticality.fit_decay_rate(sol.t, sol.psi, rep.psi_inf, env.poly_power)
    return SweepRow(gamma, fitted, env.exp_rate, rep.regime)


def rate_sweep(r: float, gammas, mu: SpectralMeasure | None = None, *, dtau: float = 0.01,
               tau_min: float = 100.0, rate_horizon: float = 30.0, R: float = 1.0,
               R_tilde: float = 0.0) -> list[SweepRow]:
    """Fit the decay rate of the Volterra solution at each gamma.

    The horizon in tau units is ``max(tau_min, rate_horizon / lambda)`` so
    that the fitting window covers about ``rate_horizon / 2`` e-folds.  The
    fit divides out ``t^{-poly_power}`` from the predicted envelope.
    """
    mu = mu or mp_measure(r)
    return [_fit_one(mu, r, float(g), dtau, tau_min, rate_horizon, R, R_tilde) for g in gammas]


def write_sweep(rows: list[SweepRow], path, gamma_star: float | None = None) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        if gamma_star is not None:
            fh.write(f"# gamma_star = {gamma_star:.17g}\n")
        w = csv.writer(fh)
        w.writerow(["gamma", "fitted_rate", "predicted_rate", "regime", "flag"])
        for row in rows:
            w.writerow([format(row.gamma, ".17g"), format(row.fitted, ".17g"),
                        format(row.predicted, ".17g"), row.regime, row.flag])
    return path
