"""Random least-squares instances under four data models.

Every random draw comes from a Philox generator keyed by ``(seed, stream)``
where ``stream`` is one of the named ids below, so a single field of an
instance can be regenerated without touching the others.

    MATRIX=0  SIGNAL=1  INIT=2  NOISE=3  SGD=4  DIFFUSION=5  STREAM=6
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import scipy.stats

from .spectral import InvalidParameterError

__all__ = [
    "Stream",
    "make_rng",
    "Isotropic",
    "Planted",
    "DeepLinear",
    "OneHiddenLayer",
    "DataModel",
    "ProblemInstance",
    "ModelRealization",
    "InvalidModelError",
    "haar_orthogonal",
    "gen_matrix",
    "gen_instance",
    "instance_from_matrix",
    "hinge_shift",
    "save_instance",
    "load_instance",
]


class Stream(IntEnum):
    MATRIX = 0
    SIGNAL = 1
    INIT = 2
    NOISE = 3
    SGD = 4
    DIFFUSION = 5
    STREAM = 6


def make_rng(seed: int, stream: int) -> np.random.Generator:
    """Philox generator for the pair (seed, stream)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


class InvalidModelError(InvalidParameterError):
    pass


def _check_dims(**dims):
    for k, v in dims.items():
        if int(v) != v or v < 1:
            raise InvalidModelError(f"{k} must be a positive integer, got {v!r}")


@dataclass(frozen=True)
class Isotropic:
    n: int
    d: int

    def __post_init__(self):
        _check_dims(n=self.n, d=self.d)


@dataclass(frozen=True)
class Planted:
    """A = U diag(s) V^T with Haar U, V and prescribed singular values ``s``."""

    n: int
    d: int
    singular_values: tuple

    def __post_init__(self):
        _check_dims(n=self.n, d=self.d)
        s = tuple(float(v) for v in self.singular_values)
        if len(s) != min(self.n, self.d):
            raise InvalidModelError(f"need min(n, d) = {min(self.n, self.d)} singular values, got {len(s)}")
        if any(v < 0 for v in s):
            raise InvalidModelError("singular values must be >= 0")
        object.__setattr__(self, "singular_values", s)


@dataclass(frozen=True)
class DeepLinear:
    """A = G1 (G2/sqrt(w1)) ... (GL/sqrt(w_{L-1})) with Gaussian factors.

    ``inner_widths`` are w1, ..., w_{L-1}; an empty tuple gives Isotropic.
    """

    n: int
    d: int
    inner_widths: tuple = ()

    def __post_init__(self):
        _check_dims(n=self.n, d=self.d)
        w = tuple(int(v) for v in self.inner_widths)
        _check_dims(**{f"width{i}": v for i, v in enumerate(w)})
        object.__setattr__(self, "inner_widths", w)


@dataclass(frozen=True)
class OneHiddenLayer:
    """A_ij = g([W Y]_ij / sqrt(m)) with W (n x m), Y (m x d) Gaussian."""

    n: int
    m: int
    d: int

    def __post_init__(self):
        _check_dims(n=self.n, m=self.m, d=self.d)


DataModel = Union[Isotropic, Planted, DeepLinear, OneHiddenLayer]

_SHIFT = 1.0 / math.sqrt(2.0 * math.pi)


def hinge_shift(z):
    """g(z) = max(z, 0) - 1/sqrt(2 pi); E g(Z) = 0 for standard normal Z."""
    return np.maximum(z, 0.0) - _SHIFT


def haar_orthogonal(k: int, seed: int | np.random.Generator) -> np.ndarray:
    """Haar-distributed k x k orthogonal matrix."""
    if k < 1:
        raise InvalidParameterError("k must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed, Stream.MATRIX)
    if k == 1:
        return np.array([[rng.choice([-1.0, 1.0])]])
    return scipy.stats.ortho_group.rvs(k, random_state=rng)


class ModelRealization:
    """The fixed (non-row) randomness of a data model for one seed.

    Rows of the data matrix are i.i.d. given these factors, which is what
    streaming SGD needs: :meth:`rows` draws fresh ones.  For ``Planted`` the
    fresh rows use Gaussian coefficients, the large-n law of a Haar row.
    """

    def __init__(self, model: DataModel, seed: int):
        self.model = model
        rng = make_rng(seed, Stream.MATRIX)
        self._rng = rng
        self.factors: list[np.ndarray] = []
        if isinstance(model, Planted):
            self.U = haar_orthogonal(model.n, rng)
            self.V = haar_orthogonal(model.d, rng)
        elif isinstance(model, DeepLinear):
            widths = list(model.inner_widths) + [model.d]
            for w_in, w_out in zip(widths[:-1], widths[1:]):
                self.factors.append(rng.standard_normal((w_in, w_out)) / math.sqrt(w_in))
        elif isinstance(model, OneHiddenLayer):
            self.Y = rng.standard_normal((model.m, model.d))

    def matrix(self) -> np.ndarray:
        m = self.model
        if isinstance(m, Planted):
            k = min(m.n, m.d)
            return (self.U[:, :k] * np.asarray(m.singular_values)) @ self.V[:, :k].T
        return self.rows(m.n, self._rng)

    def rows(self, k: int, rng: np.random.Generator) -> np.ndarray:
        m = self.model
        if isinstance(m, Isotropic):
            return rng.standard_normal((k, m.d))
        if isinstance(m, Planted):
            kk = min(m.n, m.d)
            g = rng.standard_normal((k, kk)) / math.sqrt(m.n)
            return (g * np.asarray(m.singular_values)) @ self.V[:, :kk].T
        if isinstance(m, DeepLinear):
            first = m.inner_widths[0] if m.inner_widths else m.d
            out = rng.standard_normal((k, first))
            for f in self.factors:
                out = out @ f
            return out
        if isinstance(m, OneHiddenLayer):
            w = rng.standard_normal((k, m.m))
            return hinge_shift(w @ self.Y / math.sqrt(m.m))
        raise InvalidModelError(f"unknown model {m!r}")


def gen_matrix(model: DataModel, seed: int) -> np.ndarray:
    return ModelRealization(model, seed).matrix()


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    A: np.ndarray
    b: np.ndarray
    x_tilde: np.ndarray
    x0: np.ndarray
    eta: np.ndarray
    R: float
    R_tilde: float
    seed: int = 0
    model: str = "custom"

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @property
    def r(self) -> float:
        return self.d / self.n


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def instance_from_matrix(A: np.ndarray, R: float, R_tilde: float, seed: int, *,
                         direction: np.ndarray | None = None, signal_norm: float = 1.0,
                         model: str = "custom") -> ProblemInstance:
    """Signal, initialisation and noise around a given matrix.

    ``direction`` fixes the unit vector along which x0 - x_tilde points;
    by default it is uniform on the sphere.
    """
    if R < 0 or R_tilde < 0:
        raise InvalidParameterError("R and R_tilde must be >= 0")
    A = np.ascontiguousarray(A, dtype=float)
    n, d = A.shape
    x_tilde = signal_norm * _unit(make_rng(seed, Stream.SIGNAL).standard_normal(d))
    if direction is None:
        u = _unit(make_rng(seed, Stream.INIT).standard_normal(d))
    else:
        u = _unit(np.asarray(direction, dtype=float))
    x0 = x_tilde + math.sqrt(R) * u if R > 0 else x_tilde.copy()
    if R_tilde > 0:
        eta = make_rng(seed, Stream.NOISE).standard_normal(n) * math.sqrt(R_tilde / n)
    else:
        eta = np.zeros(n)
    b = A @ x_tilde + math.sqrt(n) * eta
    return ProblemInstance(A=A, b=b, x_tilde=x_tilde, x0=x0, eta=eta, R=float(R),
                           R_tilde=float(R_tilde), seed=int(seed), model=model)


def _model_tag(model: DataModel) -> str:
    return type(model).__name__.lower()


def gen_instance(model: DataModel, R: float, R_tilde: float, seed: int, *,
                 direction: np.ndarray | None = None) -> ProblemInstance:
    return instance_from_matrix(gen_matrix(model, seed), R, R_tilde, seed, direction=direction,
                                model=_model_tag(model))


# -- serialisation ---------------------------------------------------------

def save_instance(inst: ProblemInstance, prefix) -> tuple[Path, Path]:
    """Write ``<prefix>.bin`` and ``<prefix>.meta``.

    The binary file is little-endian float64: A in row-major order, then
    b, x_tilde, x0 and eta.  The metadata file holds ``key = value`` lines.
    """
    prefix = Path(prefix)
    bin_path = prefix.with_name(prefix.name + ".bin")
    meta_path = prefix.with_name(prefix.name + ".meta")
    with open(bin_path, "wb") as fh:
        for arr in (inst.A, inst.b, inst.x_tilde, inst.x0, inst.eta):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    meta = dict(n=inst.n, d=inst.d, R=repr(inst.R), R_tilde=repr(inst.R_tilde), seed=inst.seed,
                model=inst.model, layout="A(n*d),b(n),x_tilde(d),x0(d),eta(n)", dtype="float64-le")
    meta_path.write_text("".join(f"{k} = {v}\n" for k, v in meta.items()))
    return bin_path, meta_path


def load_instance(prefix) -> ProblemInstance:
    prefix = Path(prefix)
    meta = {}
    for line in prefix.with_name(prefix.name + ".meta").read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            meta[k.strip()] = v.strip()
    n, d = int(meta["n"]), int(meta["d"])
    flat = np.fromfile(prefix.with_name(prefix.name + ".bin"), dtype="<f8")
    sizes = [n * d, n, d, d, n]
    if flat.size != sum(sizes):
        raise ValueError(f"binary has {flat.size} values, expected {sum(sizes)}")
    parts = np.split(flat, np.cumsum(sizes)[:-1])
    return ProblemInstance(A=parts[0].reshape(n, d), b=parts[1], x_tilde=parts[2], x0=parts[3],
                           eta=parts[4], R=float(meta["R"]), R_tilde=float(meta["R_tilde"]),
                           seed=int(meta["seed"]), model=meta["model"])
