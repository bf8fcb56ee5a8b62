"""Diffusion surrogates of SGD, integrated with Euler-Maruyama in epoch time.

SGD with per-step learning rate ``gamma/n`` and ``n`` steps per epoch is
matched by

    dX = -gamma grad f(X) dt + gamma sqrt(1/n) Sigma(X)^{1/2} dB_t,

the usual small-stepsize SDE after the time change ``s = gamma t``.  The SDE
baseline takes ``Sigma = sigma2 I``; the SME baseline takes the empirical
covariance of the per-sample gradients at X.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .datagen import ProblemInstance, Stream, make_rng
from .spectral import InvalidParameterError
from .traces import DIVERGENCE_CAP, Trace

__all__ = ["DiffusionConfig", "run_sde", "run_sme", "sme_noise", "sme_covariance"]


@dataclass(frozen=True)
class DiffusionConfig:
    gamma: float
    dt: float = 1e-3
    epochs: float = 5.0
    sigma2: float = 0.1
    seed: int = 0
    record_every: float = 0.05

    def __post_init__(self):
        if self.gamma < 0:
            raise InvalidParameterError("gamma must be >= 0")
        if not 0 < self.dt <= 1e-2:
            raise InvalidParameterError("dt must lie in (0, 1e-2]")
        if not self.epochs > 0 or self.sigma2 < 0:
            raise InvalidParameterError("epochs must be > 0 and sigma2 >= 0")

    @property
    def steps(self) -> int:
        return int(round(self.epochs / self.dt))

    @property
    def every(self) -> int:
        return max(1, int(round(self.record_every / self.dt)))


def _trace(inst, cfg, times, values, tag, truncated):
    return Trace(times=np.array(times), values=np.array(values), n=inst.n, d=inst.d, gamma=cfg.gamma,
                 beta=1, seed=cfg.seed, model=tag, truncated=truncated)


def run_sde(inst: ProblemInstance, cfg: DiffusionConfig, *, eig=None) -> Trace:
    """Isotropic-noise SDE, integrated in the eigenbasis of H = A^T A / n.

    Rotating isotropic Gaussian noise leaves it isotropic, so each step costs
    O(d).  ``eig`` may pass a precomputed ``numpy.linalg.eigh(H)``.
    """
    n = inst.n
    lam, Q = eig if eig is not None else np.linalg.eigh(inst.A.T @ inst.A / n)
    c = Q.T @ (inst.A.T @ inst.b) / n
    b2 = float(inst.b @ inst.b) / (2 * n)
    y = Q.T @ inst.x0
    rng = make_rng(cfg.seed, Stream.DIFFUSION)
    drift = cfg.gamma * cfg.dt
    noise = cfg.gamma * math.sqrt(cfg.sigma2 * cfg.dt / n)

    def f(y):
        return 0.5 * float(lam @ (y * y)) - float(c @ y) + b2

    times, values = [0.0], [f(y)]
    truncated = False
    for k in range(1, cfg.steps + 1):
        y = y - drift * (lam * y - c)
        if noise:
            y = y + noise * rng.standard_normal(y.size)
        if k % cfg.every == 0:
            v = max(f(y), 0.0)
            times.append(k * cfg.dt)
            values.append(v)
            if not v <= DIVERGENCE_CAP:
                truncated = True
                break
    return _trace(inst, cfg, times, values, "sde", truncated)


def sme_noise(A: np.ndarray, res: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Sample Sigma(X)^{1/2} xi in the n-dimensional sample space.

    With per-sample gradients g_i = a_i res_i and mean g, the vector
    (1/sqrt n) sum_i (g_i - g) xi_i has covariance exactly
    (1/n) sum_i (g_i - g)(g_i - g)^T.
    """
    n = A.shape[0]
    w = res * (xi - xi.mean())
    return (A.T @ w) / math.sqrt(n)


def sme_covariance(A: np.ndarray, res: np.ndarray) -> np.ndarray:
    """Dense SME covariance, for checks on small problems."""
    n = A.shape[0]
    G = A * res[:, None]
    Gc = G - G.mean(axis=0)
    return Gc.T @ Gc / n


def run_sme(inst: ProblemInstance, cfg: DiffusionConfig) -> Trace:
    """SDE with the per-sample gradient covariance recomputed every step."""
    A, b, n = inst.A, inst.b, inst.n
    x = inst.x0.copy()
    rng = make_rng(cfg.seed, Stream.DIFFUSION)
    drift = cfg.gamma * cfg.dt / n
    noise = cfg.gamma * math.sqrt(cfg.dt / n)
    res = A @ x - b
    times, values = [0.0], [0.5 * float(res @ res) / n]
    truncated = False
    for k in range(1, cfg.steps + 1):
        if noise:
            xi = rng.standard_normal(n)
            # grad f = A^T res / n; fold drift and noise into one A^T product
            w = -drift * res + noise / math.sqrt(n) * res * (xi - xi.mean())
            x += A.T @ w
        else:
            x -= drift * (A.T @ res)
        res = A @ x - b
        if k % cfg.every == 0:
            v = 0.5 * float(res @ res) / n
            times.append(k * cfg.dt)
            values.append(v)
            if not v <= DIVERGENCE_CAP:
                truncated = True
                break
    return _trace(inst, cfg, times, values, "sme", truncated)
