"""Flat ``key = value`` experiment configs.

One assignment per line, ``#`` starts a comment, dotted keys group related
settings (``sgd.beta = 1``).  List values are comma separated.  Every key
must appear in :data:`SCHEMA`; anything else is a :class:`ConfigError`
naming the key.

Example::

    model = isotropic
    n = 1000
    r = 1.2
    gamma_frac = 0.1, 0.5, 0.9
    sgd.beta = 1
    R = 1
    R_tilde = 0
    epochs = 5
    repeats = 10
    outputs = sgd, streaming, sde, sme, volterra
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from ..criticality import gamma_max
from ..datagen import DataModel, DeepLinear, Isotropic, OneHiddenLayer, Planted
from ..spectral import SpectralMeasure

__all__ = ["ConfigError", "SCHEMA", "ExperimentConfig", "parse_text", "parse_file", "serialize"]


class ConfigError(ValueError):
    pass


def _floats(v: str) -> tuple:
    return tuple(float(x) for x in v.split(",") if x.strip())


def _ints(v: str) -> tuple:
    return tuple(int(x) for x in v.split(",") if x.strip())


def _words(v: str) -> tuple:
    return tuple(x.strip().lower() for x in v.split(",") if x.strip())


MODELS = ("isotropic", "planted", "deeplinear", "onehiddenlayer")
OUTPUTS = ("sgd", "streaming", "sde", "sme", "volterra", "closed_form", "criticality")
MEASURES = ("auto", "mp", "esm")

# key -> (parser, default).  Defaults of None mean "not set".
SCHEMA: dict = {
    "model": (str.lower, "isotropic"),
    "n": (int, 1000),
    "r": (float, 1.2),
    "model.m": (int, None),
    "model.widths": (_ints, ()),
    "model.singular_values": (_floats, (1.0,)),
    "gamma": (_floats, ()),
    "gamma_frac": (_floats, ()),
    "sgd.beta": (int, 1),
    "R": (float, 1.0),
    "R_tilde": (float, 0.0),
    "epochs": (float, 5.0),
    "record_every": (float, 0.05),
    "repeats": (int, 1),
    "seed": (int, 0),
    "outputs": (_words, ("volterra",)),
    "volterra.dt": (float, 1e-3),
    "volterra.t_max": (float, None),
    "volterra.measure": (str.lower, "auto"),
    "diffusion.dt": (float, 1e-3),
    "diffusion.sigma2": (float, 0.1),
    "sweep.gammas": (_floats, ()),
    "sweep.count": (int, 30),
    "sweep.lo_frac": (float, 0.06),
    "sweep.hi_frac": (float, 0.97),
    "sweep.dtau": (float, 0.01),
}


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        if key not in SCHEMA:
            raise KeyError(key)
        return self.values.get(key, SCHEMA[key][1])

    def get(self, key):
        return self[key]

    def set(self, key, value):
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key: {key}")
        self.values[key] = value

    # -- derived --------------------------------------------------------

    @property
    def n(self) -> int:
        return self["n"]

    @property
    def d(self) -> int:
        return max(1, math.ceil(self["r"] * self["n"] - 1e-9))

    @property
    def r_eff(self) -> float:
        """d/n after rounding d up, the ratio the finite problem actually has."""
        return self.d / self.n

    @property
    def seeds(self) -> list[int]:
        return [self["seed"] + k for k in range(self["repeats"])]

    @property
    def outputs(self) -> tuple:
        return self["outputs"]

    @property
    def horizon(self) -> float:
        return self["volterra.t_max"] or self["epochs"]

    def data_model(self) -> DataModel:
        kind, n, d = self["model"], self.n, self.d
        if kind == "isotropic":
            return Isotropic(n, d)
        if kind == "planted":
            sv = self["model.singular_values"]
            k = min(n, d)
            # a single value s means every singular value is s * sqrt(n)
            sv = tuple(sv[0] * math.sqrt(n) for _ in range(k)) if len(sv) == 1 else sv
            return Planted(n, d, sv)
        if kind == "deeplinear":
            return DeepLinear(n, d, self["model.widths"])
        if kind == "onehiddenlayer":
            return OneHiddenLayer(n, self["model.m"] or n, d)
        raise ConfigError(f"model must be one of {MODELS}")

    def measure_kind(self) -> str:
        m = self["volterra.measure"]
        if m == "auto":
            return "mp" if self["model"] == "isotropic" else "esm"
        return m

    def resolve_gammas(self, mu: SpectralMeasure, r: float) -> list[tuple[float, float | None]]:
        """(absolute gamma, fraction of gamma_max or None) pairs."""
        if self["gamma"]:
            return [(g, None) for g in self["gamma"]]
        gmax = gamma_max(mu, r)
        return [(f * gmax, f) for f in self["gamma_frac"]]

    def validate(self):
        if self["model"] not in MODELS:
            raise ConfigError(f"model must be one of {', '.join(MODELS)}, got {self['model']!r}")
        if self["n"] < 1 or not self["r"] > 0:
            raise ConfigError("n must be >= 1 and r > 0")
        if self["repeats"] < 1:
            raise ConfigError("repeats must be >= 1")
        if self["gamma"] and self["gamma_frac"]:
            raise ConfigError("set only one of gamma and gamma_frac")
        bad = [o for o in self.outputs if o not in OUTPUTS]
        if bad:
            raise ConfigError(f"unknown output(s): {', '.join(bad)}")
        if self["volterra.measure"] not in MEASURES:
            raise ConfigError(f"volterra.measure must be one of {', '.join(MEASURES)}")
        if self["sgd.beta"] < 1 or self["sgd.beta"] > self.n:
            raise ConfigError("sgd.beta must lie in [1, n]")
        return self


def parse_text(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown config key: {key}")
        try:
            cfg.values[key] = SCHEMA[key][0](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {val!r} ({exc})") from None
    return cfg.validate()


def parse_file(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_text(text)


def serialize(cfg: ExperimentConfig) -> str:
    """Explicitly set keys in schema order; parse(serialize(c)) == c."""
    return "".join(f"{k} = {_fmt(cfg.values[k])}\n" for k in SCHEMA if k in cfg.values)
