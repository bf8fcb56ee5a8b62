"""Sup-norm distance between seed-averaged traces and the Volterra limit."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..traces import Trace, mean_trace
from ..volterra import VolterraSolution

__all__ = ["ModelComparison", "ComparisonResult", "compare", "write_comparison", "sup_deviation"]


@dataclass(frozen=True)
class ModelComparison:
    model: str
    gamma: float
    n_seeds: int
    times: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    reference: np.ndarray
    sup_dev: float
    norm_sup_dev: float
    truncated: bool = False


@dataclass
class ComparisonResult:
    entries: list = field(default_factory=list)

    def get(self, model: str, gamma: float | None = None) -> ModelComparison:
        for e in self.entries:
            if e.model == model and (gamma is None or np.isclose(e.gamma, gamma)):
                return e
        raise KeyError((model, gamma))

    def deviation(self, model: str, gamma: float | None = None, normalized: bool = True) -> float:
        e = self.get(model, gamma)
        return e.norm_sup_dev if normalized else e.sup_dev


def sup_deviation(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def compare(traces: list[Trace], reference: VolterraSolution) -> ComparisonResult:
    """Group traces by (model, gamma), average over seeds, measure against psi.

    Trace times past the reference horizon are dropped with a warning.
    """
    groups: dict = {}
    for tr in traces:
        groups.setdefault((tr.model, tr.gamma), []).append(tr)
    t_end = reference.t[-1]
    psi0 = reference.psi[0]
    out = ComparisonResult()
    for (model, gamma) in sorted(groups):
        trs = sorted(groups[(model, gamma)], key=lambda tr: tr.seed)
        times, mean, std = mean_trace(trs)
        keep = times <= t_end * (1 + 1e-12)
        if not keep.all():
            warnings.warn(f"{model} traces run past the reference horizon {t_end:g}; trimmed",
                          stacklevel=2)
            times, mean, std = times[keep], mean[keep], std[keep]
        ref = reference(times)
        dev = sup_deviation(mean, ref)
        out.entries.append(ModelComparison(model=model, gamma=gamma, n_seeds=len(trs), times=times,
                                           mean=mean, std=std, reference=ref, sup_dev=dev,
                                           norm_sup_dev=dev / psi0 if psi0 else float("inf"),
                                           truncated=any(tr.truncated for tr in trs)))
    return out


def _g(x) -> str:
    return format(float(x), ".17g")


def write_comparison(result: ComparisonResult, path, traces_path=None) -> Path:
    """Summary CSV, plus (optionally) the mean/std/reference curves per model."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["gamma", "model", "n_seeds", "sup_dev", "norm_sup_dev", "truncated"])
        for e in result.entries:
            w.writerow([_g(e.gamma), e.model, e.n_seeds, _g(e.sup_dev), _g(e.norm_sup_dev), int(e.truncated)])
    if traces_path is not None:
        with open(traces_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "gamma", "model", "mean", "std", "psi"])
            for e in result.entries:
                for t, m, s, p in zip(e.times, e.mean, e.std, e.reference):
                    w.writerow([_g(t), _g(e.gamma), e.model, _g(m), _g(s), _g(p)])
    return path
