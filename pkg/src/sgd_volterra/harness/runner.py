"""Orchestration behind the CLI: one function per output kind.

Each ``do_*`` function writes into ``out`` and returns the paths it wrote.
Failures are raised; the CLI turns them into exit codes.
"""
from __future__ import annotations

import glob
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .. import baselines, criticality, datagen, sgd, volterra
from ..spectral import SpectralMeasure, esm_from_eigenvalues, mp_measure
from ..traces import Trace, read_traces, write_traces
from .compare import ComparisonResult, compare, write_comparison
from .config import ExperimentConfig
from .sweep import default_gamma_grid, rate_sweep, write_sweep

__all__ = ["Runner", "TRACE_MODELS"]

TRACE_MODELS = ("sgd", "streaming", "sde", "sme")
log = logging.getLogger("sgd_volterra.harness")


def _g(x) -> str:
    return format(float(x), ".17g")


class Runner:
    """Holds the config, output directory and per-seed caches."""

    def __init__(self, cfg: ExperimentConfig, out, threads: int = 1):
        self.cfg = cfg
        self.out = Path(out)
        self.threads = max(1, int(threads))
        self._instances: dict = {}
        self._eigs: dict = {}
        self._measure: tuple | None = None
        self._gammas: list | None = None

    # -- shared pieces ----------------------------------------------------

    def instance(self, seed: int) -> datagen.ProblemInstance:
        if seed not in self._instances:
            self._instances[seed] = datagen.gen_instance(self.cfg.data_model(), self.cfg["R"],
                                                         self.cfg["R_tilde"], seed)
        return self._instances[seed]

    def eig(self, seed: int):
        if seed not in self._eigs:
            A = self.instance(seed).A
            self._eigs[seed] = np.linalg.eigh(A.T @ A / A.shape[0])
        return self._eigs[seed]

    def measure(self) -> tuple[SpectralMeasure, float]:
        """Spectral measure and ratio r used by the deterministic outputs."""
        if self._measure is None:
            r = self.cfg.r_eff
            if self.cfg.measure_kind() == "mp":
                mu = mp_measure(r)
            else:
                mu = esm_from_eigenvalues(self.eig(self.cfg["seed"])[0])
                log.info("volterra measure: ESM of seed %d (d=%d atoms)", self.cfg["seed"], self.cfg.d)
            self._measure = (mu, r)
        return self._measure

    def gammas(self) -> list[tuple[float, float | None]]:
        if self._gammas is None:
            mu, r = self.measure()
            pairs = self.cfg.resolve_gammas(mu, r)
            if not pairs:
                raise ValueError("config sets neither gamma nor gamma_frac")
            for g, frac in pairs:
                if frac is not None:
                    log.info("gamma = %s (%s * gamma_max, gamma_max = %s)", _g(g), _g(frac),
                             _g(criticality.gamma_max(mu, r)))
            self._gammas = pairs
        return self._gammas

    def _tag(self, k: int) -> str:
        return "" if len(self.gammas()) == 1 else f"_g{k}"

    # -- outputs ------------------------------------------------------------

    def _one_trace(self, model: str, gamma: float, seed: int) -> Trace:
        c = self.cfg
        if model in ("sgd", "streaming"):
            scfg = sgd.SGDConfig(gamma=gamma, beta=c["sgd.beta"], epochs=c["epochs"],
                                 record_every=c["record_every"], seed=seed)
            if model == "sgd":
                return sgd.run_sgd(self.instance(seed), scfg)
            return sgd.run_streaming(c.data_model(), c["R"], c["R_tilde"], scfg)
        dcfg = baselines.DiffusionConfig(gamma=gamma, dt=c["diffusion.dt"], epochs=c["epochs"],
                                         sigma2=c["diffusion.sigma2"], seed=seed,
                                         record_every=c["record_every"])
        if model == "sde":
            return baselines.run_sde(self.instance(seed), dcfg, eig=self.eig(seed))
        return baselines.run_sme(self.instance(seed), dcfg)

    def do_traces(self) -> list[Path]:
        models = [m for m in TRACE_MODELS if m in self.cfg.outputs]
        if not models:
            return []
        if not sgd.theory_batch_ok(self.cfg["sgd.beta"], self.cfg.n):
            log.info("note: beta=%d exceeds n^(1/5)=%.3g, outside the limit theorem's batch range",
                     self.cfg["sgd.beta"], self.cfg.n ** 0.2)
        seeds = self.cfg.seeds
        # instances first, serially, so the cache is not raced
        for s in seeds:
            self.instance(s)
            if "sde" in models:
                self.eig(s)
        tdir = self.out / "traces"
        tdir.mkdir(parents=True, exist_ok=True)
        paths = []
        for model in models:
            jobs = [(g, s) for g, _ in self.gammas() for s in seeds]
            with ThreadPoolExecutor(self.threads) as pool:
                traces = list(pool.map(lambda js: self._one_trace(model, *js), jobs))
            traces.sort(key=lambda tr: (tr.gamma, tr.seed))
            for tr in traces:
                if tr.truncated:
                    log.warning("%s gamma=%s seed=%d diverged (f > 1e12); trace truncated at t=%s",
                                model, _g(tr.gamma), tr.seed, _g(tr.times[-1]))
            paths.append(write_traces(traces, tdir / f"{model}.csv"))
            log.info("wrote %s (%d runs)", paths[-1], len(traces))
        return paths

    def do_volterra(self) -> list[Path]:
        mu, r = self.measure()
        grid = volterra.VolterraGrid(t_max=self.cfg.horizon, dt=self.cfg["volterra.dt"])
        paths = []
        for k, (g, _) in enumerate(self.gammas()):
            sol = volterra.solve(mu, self.cfg["R"], self.cfg["R_tilde"], r, g, grid)
            if sol.divergent:
                log.warning("volterra gamma=%s >= gamma0: solution diverges", _g(g))
            paths.append(volterra.write_solution(sol, self.out / f"volterra{self._tag(k)}.csv"))
            log.info("wrote %s", paths[-1])
        return paths

    def do_closed_form(self) -> list[Path]:
        r = self.cfg.r_eff
        t = volterra.VolterraGrid(t_max=self.cfg.horizon, dt=self.cfg["volterra.dt"]).times
        paths = []
        for k, (g, _) in enumerate(self.gammas()):
            psi = criticality.mp_closed_form(r, g, self.cfg["R"], self.cfg["R_tilde"], t)
            p = self.out / f"closed_form{self._tag(k)}.csv"
            np.savetxt(p, np.column_stack([t, psi]), delimiter=",", header="t,psi", comments="",
                       fmt="%.17g")
            paths.append(p)
            log.info("wrote %s", p)
        return paths

    def do_criticality(self) -> list[Path]:
        mu, r = self.measure()
        lines = [f"measure = {mu.name}", f"r = {_g(r)}"]
        for k, (g, _) in enumerate(self.gammas()):
            rep = criticality.asymptotic_rate(mu, r, g, self.cfg["R"], self.cfg["R_tilde"])
            if rep.regime == "divergent":
                log.warning("gamma=%s is in the divergent regime", _g(g))
            for key, v in rep.as_dict().items():
                v = _g(v) if isinstance(v, float) else ("none" if v is None else v)
                lines.append(f"g{k}.{key} = {v}")
        p = self.out / "criticality.txt"
        p.write_text("\n".join(lines) + "\n")
        log.info("wrote %s", p)
        return [p]

    def do_rate_sweep(self) -> list[Path]:
        mu, r = self.measure()
        c = self.cfg
        gammas = c["sweep.gammas"] or default_gamma_grid(mu, r, c["sweep.count"], c["sweep.lo_frac"],
                                                         c["sweep.hi_frac"])
        rows = rate_sweep(r, gammas, mu, dtau=c["sweep.dtau"], R=c["R"], R_tilde=c["R_tilde"])
        for row in rows:
            if row.flag:
                log.warning("rate sweep gamma=%s: %s", _g(row.gamma), row.flag)
        gs = criticality.gamma_star(mu, r)
        p = write_sweep(rows, self.out / "rate_sweep.csv", gamma_star=gs)
        log.info("wrote %s", p)
        return [p]

    def do_compare(self) -> list[Path]:
        traces = []
        for p in sorted(glob.glob(str(self.out / "traces" / "*.csv"))):
            traces.extend(read_traces(p))
        refs = [volterra.read_solution(p) for p in sorted(self.out.glob("volterra*.csv"))]
        if not traces or not refs:
            raise FileNotFoundError(f"compare needs traces/*.csv and volterra*.csv under {self.out}")
        entries = []
        for ref in refs:
            g = float(ref.params["gamma"])
            mine = [tr for tr in traces if math.isclose(tr.gamma, g, rel_tol=1e-12)]
            if mine:
                entries.extend(compare(mine, ref).entries)
        if not entries:
            raise ValueError("no trace matches the stepsize of any volterra reference")
        res = ComparisonResult(sorted(entries, key=lambda e: (e.gamma, e.model)))
        for e in res.entries:
            log.info("compare gamma=%s %s: sup-dev %s (normalised %s)", _g(e.gamma), e.model,
                     _g(e.sup_dev), _g(e.norm_sup_dev))
        p = write_comparison(res, self.out / "comparison.csv", self.out / "comparison_traces.csv")
        return [p, self.out / "comparison_traces.csv"]
