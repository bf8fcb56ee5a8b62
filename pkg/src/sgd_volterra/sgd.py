"""Minibatch SGD on least squares, finite-sum and streaming.

One step with batch B is

    x <- x - (gamma/n) sum_{i in B} a_i (a_i . x - b_i)

and ``n/beta`` steps make one epoch, so epoch time ``t`` is step ``k``
times ``beta/n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .datagen import DataModel, ModelRealization, ProblemInstance, Stream, instance_from_matrix, make_rng
from .spectral import InvalidParameterError
from .traces import DIVERGENCE_CAP, Trace

__all__ = ["SGDConfig", "sgd_step", "f_value", "run_sgd", "run_streaming", "theory_batch_ok"]

_CHUNK = 2048


@dataclass(frozen=True)
class SGDConfig:
    gamma: float
    beta: int = 1
    epochs: float = 5.0
    record_every: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.gamma < 0:
            raise InvalidParameterError("gamma must be >= 0")
        if int(self.beta) != self.beta or self.beta < 1:
            raise InvalidParameterError("beta must be a positive integer")
        if not self.epochs > 0 or not self.record_every > 0:
            raise InvalidParameterError("epochs and record_every must be > 0")
        if self.record_every > self.epochs:
            raise InvalidParameterError("record_every must not exceed epochs")


def theory_batch_ok(beta: int, n: int, delta: float = 0.0) -> bool:
    """Whether beta <= n^{1/5 - delta}, the batch-size range the limit theorem covers."""
    return beta <= n ** (0.2 - delta)


def f_value(inst: ProblemInstance, x: np.ndarray) -> float:
    res = inst.A @ x - inst.b
    return 0.5 * float(res @ res) / inst.n


def sgd_step(x: np.ndarray, inst: ProblemInstance, batch, gamma: float) -> np.ndarray:
    batch = np.atleast_1d(np.asarray(batch))
    if batch.size == 0:
        raise InvalidParameterError("batch must be non-empty")
    Ab = inst.A[batch]
    return x - (gamma / inst.n) * (Ab.T @ (Ab @ x - inst.b[batch]))


def _batches(rng: np.random.Generator, n: int, beta: int, count: int) -> np.ndarray:
    """``count`` index sets of size beta, each without replacement."""
    if beta == n:
        return np.broadcast_to(np.arange(n), (count, n))
    if beta == 1:
        return rng.integers(0, n, size=(count, 1))
    idx = rng.integers(0, n, size=(count, beta))
    s = np.sort(idx, axis=1)
    dup = np.nonzero((s[:, 1:] == s[:, :-1]).any(axis=1))[0]
    for k in dup:
        idx[k] = rng.choice(n, size=beta, replace=False)
    return idx


def _schedule(n: int, cfg: SGDConfig) -> tuple[int, int]:
    if cfg.beta > n:
        raise InvalidParameterError(f"beta={cfg.beta} exceeds n={n}")
    steps = int(math.floor(n / cfg.beta * cfg.epochs + 1e-9))
    every = max(1, int(math.ceil(cfg.record_every * n / cfg.beta - 1e-9)))
    return steps, every


def _drive(inst: ProblemInstance, cfg: SGDConfig, next_rows, tag: str) -> Trace:
    """Shared loop: ``next_rows(count)`` yields (rows, targets) blocks."""
    n = inst.n
    steps, every = _schedule(n, cfg)
    x = inst.x0.copy()
    lr = cfg.gamma / n
    times, values = [0.0], [f_value(inst, x)]
    truncated = False
    k = 0
    while k < steps and not truncated:
        count = min(_CHUNK, steps - k)
        rows, targets = next_rows(count)
        for j in range(count):
            a, y = rows[j], targets[j]
            if a.ndim == 1:
                x -= (lr * (a @ x - y)) * a
            else:
                x -= lr * (a.T @ (a @ x - y))
            k += 1
            if k % every == 0:
                f = f_value(inst, x)
                times.append(k * cfg.beta / n)
                values.append(f)
                if not f <= DIVERGENCE_CAP:
                    truncated = True
                    break
    return Trace(times=np.array(times), values=np.array(values), n=n, d=inst.d, gamma=cfg.gamma,
                 beta=cfg.beta, seed=cfg.seed, model=tag, truncated=truncated)


def run_sgd(inst: ProblemInstance, cfg: SGDConfig) -> Trace:
    """Finite-sum SGD from ``inst.x0``; batches drawn from stream SGD of ``cfg.seed``."""
    rng = make_rng(cfg.seed, Stream.SGD)
    A, b = inst.A, inst.b

    def next_rows(count):
        idx = _batches(rng, inst.n, cfg.beta, count)
        if cfg.beta == 1:
            i = idx[:, 0]
            return A[i], b[i]
        return A[idx], b[idx]

    return _drive(inst, cfg, next_rows, "sgd")


def run_streaming(model: DataModel, R: float, R_tilde: float, cfg: SGDConfig, *,
                  instance_seed: int | None = None) -> Trace:
    """One-pass SGD: every step uses beta fresh rows from ``model``.

    The fixed factors of the model (inner Gaussian layers, Y, V) and the
    held instance on which f is evaluated come from ``instance_seed``
    (default ``cfg.seed``), so the held instance equals what
    :func:`~sgd_volterra.datagen.gen_instance` returns for that seed.
    """
    seed = cfg.seed if instance_seed is None else instance_seed
    real = ModelRealization(model, seed)
    inst = instance_from_matrix(real.matrix(), R, R_tilde, seed, model=type(model).__name__.lower())
    rng = make_rng(cfg.seed, Stream.STREAM)
    noise_sd = math.sqrt(R_tilde)

    def next_rows(count):
        rows = real.rows(count * cfg.beta, rng)
        targets = rows @ inst.x_tilde
        if noise_sd:
            targets = targets + noise_sd * rng.standard_normal(targets.shape)
        if cfg.beta == 1:
            return rows, targets
        return rows.reshape(count, cfg.beta, -1), targets.reshape(count, cfg.beta)

    return _drive(inst, cfg, next_rows, "streaming")
