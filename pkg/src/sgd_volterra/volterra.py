"""Numerical solution of the convolution Volterra equation for psi(t).

    psi(t) = z(t) + int_0^t K(t - s) psi(s) ds,
    z(t)   = (R/2) h1(t) + (R_tilde/2) (r h0(t) + 1 - r),
    K(t)   = gamma^2 r h2(t),

where ``h_k(t) = int x^k exp(-2 gamma t x) dmu(x)``.  The solver is the
composite trapezoid rule on a uniform grid, which is second order in ``dt``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import criticality
from .spectral import InvalidParameterError, SpectralMeasure

__all__ = [
    "GridTooCoarseError",
    "VolterraGrid",
    "VolterraSolution",
    "forcing_z",
    "kernel_K",
    "solve",
    "write_solution",
    "read_solution",
]

MAX_NODES = 10**7


class GridTooCoarseError(ValueError):
    """1 - dt K(0)/2 <= 0, so the implicit trapezoid step cannot be solved."""


@dataclass(frozen=True)
class VolterraGrid:
    t_max: float = 10.0
    dt: float = 1e-3

    def __post_init__(self):
        if not self.dt > 0 or not self.t_max > 0:
            raise InvalidParameterError("dt and t_max must be > 0")
        if self.size > MAX_NODES:
            raise InvalidParameterError(f"grid has {self.size} nodes, limit is {MAX_NODES}")

    @property
    def size(self) -> int:
        return int(round(self.t_max / self.dt)) + 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.size) * self.dt


@dataclass(frozen=True)
class VolterraSolution:
    grid: VolterraGrid
    psi: np.ndarray
    psi_inf: float
    params: dict = field(default_factory=dict)

    @property
    def t(self) -> np.ndarray:
        return self.grid.times

    @property
    def divergent(self) -> bool:
        return math.isinf(self.psi_inf)

    def __call__(self, t):
        """Linear interpolation of psi at arbitrary times inside the grid."""
        return np.interp(t, self.t, self.psi)


def forcing_z(mu: SpectralMeasure, R: float, R_tilde: float, r: float, gamma: float, t):
    h0 = mu.h(0, gamma, t)
    h1 = mu.h(1, gamma, t)
    return 0.5 * R * h1 + 0.5 * R_tilde * (r * h0 + (1.0 - r))


def kernel_K(mu: SpectralMeasure, r: float, gamma: float, t):
    return gamma * gamma * r * mu.h(2, gamma, t)


def solve(mu: SpectralMeasure, R: float, R_tilde: float, r: float, gamma: float,
          grid: VolterraGrid | None = None) -> VolterraSolution:
    """Trapezoid convolution quadrature for psi on ``grid``.

    ``psi_inf`` is the analytic limit when gamma < gamma0 and ``inf``
    otherwise.
    """
    if gamma <= 0:
        raise InvalidParameterError("gamma must be > 0")
    if R < 0 or R_tilde < 0:
        raise InvalidParameterError("R and R_tilde must be >= 0")
    grid = grid or VolterraGrid()
    t = grid.times
    dt = grid.dt
    z = forcing_z(mu, R, R_tilde, r, gamma, t)
    K = kernel_K(mu, r, gamma, t)
    denom = 1.0 - 0.5 * dt * K[0]
    if denom <= 0:
        raise GridTooCoarseError(f"1 - dt*K(0)/2 = {denom:g} <= 0; reduce dt below {2.0 / K[0]:g}")

    n = t.size
    psi = np.empty(n)
    psi[0] = z[0]
    # K reversed, so K[i-1], ..., K[1] is a contiguous slice.
    Kr = K[::-1].copy()
    for i in range(1, n):
        acc = 0.5 * K[i] * psi[0] + np.dot(Kr[n - i:n - 1], psi[1:i])
        psi[i] = (z[i] + dt * acc) / denom

    g0 = criticality.gamma_max(mu, r)
    psi_inf = (math.inf if criticality.reaches_gamma_max(gamma, g0)
               else criticality.psi_infinity(mu, R_tilde, r, gamma))
    params = dict(mu=mu.name, R=R, R_tilde=R_tilde, r=r, gamma=gamma, dt=dt, t_max=grid.t_max,
                  gamma0=g0)
    return VolterraSolution(grid=grid, psi=psi, psi_inf=psi_inf, params=params)


def write_solution(sol: VolterraSolution, path) -> Path:
    """Write ``t,psi`` CSV plus a ``<name>.meta`` key-value sidecar."""
    path = Path(path)
    data = np.column_stack([sol.t, sol.psi])
    np.savetxt(path, data, delimiter=",", header="t,psi", comments="", fmt="%.17g")
    meta = dict(sol.params, psi_inf=sol.psi_inf)
    with open(path.with_suffix(path.suffix + ".meta"), "w") as fh:
        for k, v in meta.items():
            fh.write(f"{k} = {_fmt(v)}\n")
    return path


def read_solution(path) -> VolterraSolution:
    path = Path(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    meta = {}
    with open(path.with_suffix(path.suffix + ".meta")) as fh:
        for line in fh:
            if "=" in line:
                k, v = line.split("=", 1)
                meta[k.strip()] = _parse(v.strip())
    grid = VolterraGrid(t_max=float(meta.get("t_max", data[-1, 0])), dt=float(meta.get("dt", data[1, 0])))
    psi_inf = float(meta.pop("psi_inf", math.nan))
    return VolterraSolution(grid=grid, psi=data[:, 1].copy(), psi_inf=psi_inf, params=meta)


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _parse(v: str):
    try:
        return float(v)
    except ValueError:
        return v
