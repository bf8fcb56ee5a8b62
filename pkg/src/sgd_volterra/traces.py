"""Objective traces in epoch time and their CSV form."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

__all__ = ["Trace", "TRACE_HEADER", "MODEL_TAGS", "write_traces", "read_traces", "mean_trace"]

TRACE_HEADER = ("t", "f", "seed", "n", "d", "gamma", "beta", "model")
MODEL_TAGS = ("sgd", "streaming", "sde", "sme")
# f above this is treated as divergence and the run is cut short.
DIVERGENCE_CAP = 1e12


@dataclass(frozen=True, eq=False)
class Trace:
    """f(x) sampled at ascending epoch times; ``times[0] == 0``.

    ``truncated`` is set when the run stopped early on the divergence guard.
    """

    times: np.ndarray
    values: np.ndarray
    n: int
    d: int
    gamma: float
    beta: int
    seed: int
    model: str
    truncated: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODEL_TAGS:
            raise ValueError(f"model tag must be one of {MODEL_TAGS}, got {self.model!r}")

    def __len__(self):
        return len(self.times)

    def rows(self):
        for t, f in zip(self.times, self.values):
            yield (t, f, self.seed, self.n, self.d, self.gamma, self.beta, self.model)


def _g(x) -> str:
    return format(float(x), ".17g")


def write_traces(traces: Iterable[Trace], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for tr in traces:
            for t, f, seed, n, d, gamma, beta, model in tr.rows():
                w.writerow([_g(t), _g(f), seed, n, d, _g(gamma), beta, model])
    return path


def read_traces(path) -> list[Trace]:
    """Inverse of :func:`write_traces`; rows are grouped by (model, seed, gamma, beta)."""
    groups: dict = {}
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != TRACE_HEADER:
            raise ValueError(f"{path}: expected header {','.join(TRACE_HEADER)}")
        for row in rd:
            key = (row["model"], int(row["seed"]), int(row["n"]), int(row["d"]),
                   float(row["gamma"]), int(row["beta"]))
            groups.setdefault(key, []).append((float(row["t"]), float(row["f"])))
    out = []
    for (model, seed, n, d, gamma, beta), pts in groups.items():
        arr = np.array(pts)
        out.append(Trace(times=arr[:, 0], values=arr[:, 1], n=n, d=d, gamma=gamma, beta=beta,
                         seed=seed, model=model))
    return out


def mean_trace(traces: list[Trace]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seed-mean and seed-std on the common time grid, cut to the shortest run."""
    if not traces:
        raise ValueError("no traces")
    m = min(len(tr) for tr in traces)
    times = traces[0].times[:m]
    for tr in traces:
        if not np.allclose(tr.times[:m], times):
            raise ValueError("traces are not on a common time grid")
    vals = np.stack([tr.values[:m] for tr in traces])
    return times, vals.mean(axis=0), vals.std(axis=0)
