"""Limiting spectral measures on [0, inf) and the integrals taken against them.

A :class:`SpectralMeasure` is a probability measure made of an atom at zero,
finitely many positive atoms and an optional absolutely continuous part on
``[lo, hi]``.  The continuous part is stored as

    density(x) = smooth(x) * (x - lo)**a * (hi - x)**b

so that Gauss-Jacobi quadrature with weight ``(1+u)**a (1-u)**b`` absorbs the
algebraic edge behaviour exactly and only ``smooth`` has to be resolved by the
nodes.  For the Marchenko-Pastur law with ``r != 1`` this is the Chebyshev
(second kind) substitution ``x = c + h cos(theta)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.special

__all__ = [
    "SpectralMeasure",
    "MarchenkoPasturParams",
    "InvalidParameterError",
    "BranchCutError",
    "SingularIntegralError",
    "mp_params",
    "mp_measure",
    "point_mass",
    "moment",
    "h_k",
    "stieltjes_m",
    "mp_resolvent_integral",
    "esm_from_eigenvalues",
    "ks_distance",
]

DEFAULT_NODES = 512
# Chunk size (in t values) for vectorised Laplace transforms.
_CHUNK = 4096


class InvalidParameterError(ValueError):
    pass


class BranchCutError(ValueError):
    """Raised when the semicircle Stieltjes transform is asked for a point on [-2, 2]."""


class SingularIntegralError(ValueError):
    pass


def _gauss_jacobi(n: int, a: float, b: float):
    """Gauss rule for the weight (1+u)**a (1-u)**b on [-1, 1].

    Returns ``s = (1+u)/2`` rather than ``u`` so that nodes next to the left
    edge keep full relative precision.  The four Chebyshev cases have closed
    forms; scipy's general Jacobi roots lose about five digits for them at
    a few hundred nodes.
    """
    k = np.arange(1, n + 1)
    if (a, b) == (0.5, 0.5):
        th = k * np.pi / (n + 1)
        w = np.pi / (n + 1) * np.sin(th) ** 2
    elif (a, b) == (-0.5, -0.5):
        th = (2 * k - 1) * np.pi / (2 * n)
        w = np.full(n, np.pi / n)
    elif (a, b) == (-0.5, 0.5):
        th = 2 * k * np.pi / (2 * n + 1)
        w = 4 * np.pi / (2 * n + 1) * np.sin(th / 2) ** 2
    elif (a, b) == (0.5, -0.5):
        th = (2 * k - 1) * np.pi / (2 * n + 1)
        w = 4 * np.pi / (2 * n + 1) * np.cos(th / 2) ** 2
    else:
        u, w = scipy.special.roots_jacobi(n, b, a)
        return (1.0 + u) / 2.0, w
    # u = cos(th), so (1+u)/2 = cos(th/2)**2 without cancellation.
    return np.cos(th / 2) ** 2, w


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    """Compactly supported probability measure on [0, inf).

    Parameters
    ----------
    atom_zero_mass : float
        Mass of the atom at 0.
    atom_locs, atom_masses : array_like
        Positive atom locations and their masses.
    smooth : callable, optional
        Smooth factor of the continuous density (see module docstring).
    support : (lo, hi), optional
        Support of the continuous part.
    edge_powers : (a, b)
        Algebraic exponents of the density at ``lo`` and ``hi``.
    edge_exponent : float, optional
        alpha in ``mu((lo, lo + t]) ~ t**alpha`` as ``t -> 0``.
    nodes : int
        Gauss-Jacobi node count for the continuous part.
    gauss_rule : callable, optional
        ``gauss_rule(nodes) -> (x, w)``, an exact Gauss rule for the
        continuous part that replaces the Jacobi construction.  Useful when
        ``smooth`` has a pole close to the support.
    name : str
        Free-form tag carried into metadata.
    """

    atom_zero_mass: float = 0.0
    atom_locs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    atom_masses: np.ndarray = field(default_factory=lambda: np.zeros(0))
    smooth: Callable[[np.ndarray], np.ndarray] | None = None
    support: tuple[float, float] | None = None
    edge_powers: tuple[float, float] = (0.0, 0.0)
    edge_exponent: float | None = None
    nodes: int = DEFAULT_NODES
    name: str = "custom"
    gauss_rule: Callable[[int], tuple] | None = None

    def __post_init__(self):
        locs = np.atleast_1d(np.asarray(self.atom_locs, dtype=float))
        masses = np.atleast_1d(np.asarray(self.atom_masses, dtype=float))
        if locs.shape != masses.shape:
            raise InvalidParameterError("atom locations and masses differ in length")
        if np.any(locs < 0):
            raise InvalidParameterError("atom locations must be >= 0")
        if np.any(masses <= 0):
            raise InvalidParameterError("atom masses must be > 0")
        zero_mass = float(self.atom_zero_mass) + float(masses[locs == 0].sum())
        keep = locs > 0
        object.__setattr__(self, "atom_locs", locs[keep])
        object.__setattr__(self, "atom_masses", masses[keep])
        object.__setattr__(self, "atom_zero_mass", zero_mass)
        if not 0.0 <= zero_mass <= 1.0 + 1e-12:
            raise InvalidParameterError("atom_zero_mass must lie in [0, 1]")
        if self.smooth is not None:
            if self.support is None:
                raise InvalidParameterError("a continuous part needs a support")
            lo, hi = self.support
            if not 0 <= lo < hi:
                raise InvalidParameterError("support must satisfy 0 <= lo < hi")
            a, b = self.edge_powers
            if a <= -1 or b <= -1:
                raise InvalidParameterError("edge powers must exceed -1")

    # -- quadrature -------------------------------------------------------

    @property
    def has_density(self) -> bool:
        return self.smooth is not None

    def _jacobi_rule(self, shift_left: float = 0.0):
        """Nodes/weights for the continuous part, with density power a + shift_left at lo."""
        lo, hi = self.support
        a, b = self.edge_powers
        a = a + shift_left
        if a <= -1:
            raise SingularIntegralError("integrand is not integrable at the left edge")
        s, w = _gauss_jacobi(self.nodes, a, b)
        half = 0.5 * (hi - lo)
        x = lo + (hi - lo) * s
        w = w * half ** (a + b + 1.0) * self.smooth(x)
        return x, w

    @cached_property
    def _rule(self):
        if not self.has_density:
            return np.zeros(0), np.zeros(0)
        if self.gauss_rule is not None:
            return self.gauss_rule(self.nodes)
        return self._jacobi_rule()

    @property
    def quad_nodes(self) -> np.ndarray:
        return self._rule[0]

    @property
    def quad_weights(self) -> np.ndarray:
        return self._rule[1]

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        if not self.has_density:
            return out
        lo, hi = self.support
        a, b = self.edge_powers
        inside = (x > lo) & (x < hi)
        xi = x[inside]
        out[inside] = self.smooth(xi) * (xi - lo) ** a * (hi - xi) ** b
        return out

    def integrate(self, f: Callable[[np.ndarray], np.ndarray], *, include_zero: bool = True) -> float:
        """Integrate ``f`` against the measure; atoms are summed exactly."""
        total = 0.0
        if include_zero and self.atom_zero_mass > 0:
            total += self.atom_zero_mass * float(f(np.zeros(1))[0])
        if self.atom_locs.size:
            total += float(np.dot(self.atom_masses, f(self.atom_locs)))
        return total + self.continuous_integral(f)

    def continuous_integral(self, f, shift_left: float = 0.0) -> float:
        """Integrate ``f * (x - lo)**shift_left`` against the continuous part only."""
        if not self.has_density:
            return 0.0
        x, w = self._rule if shift_left == 0.0 else self._jacobi_rule(shift_left)
        return float(np.dot(w, f(x)))

    # -- basic functionals -----------------------------------------------

    @cached_property
    def continuous_mass(self) -> float:
        return float(self.quad_weights.sum())

    @property
    def total_mass(self) -> float:
        return self.atom_zero_mass + float(self.atom_masses.sum()) + self.continuous_mass

    @property
    def lambda_minus(self) -> float:
        """Leftmost point of the support restricted to (0, inf)."""
        cands = list(self.atom_locs)
        if self.has_density:
            cands.append(self.support[0])
        return float(min(cands)) if cands else 0.0

    @property
    def lambda_plus(self) -> float:
        cands = list(self.atom_locs)
        if self.has_density:
            cands.append(self.support[1])
        return float(max(cands)) if cands else 0.0

    def moment(self, k: int) -> float:
        if k < 0:
            raise InvalidParameterError("k must be >= 0")
        if k == 0:
            return self.total_mass
        return self.integrate(lambda x: x**k, include_zero=False)

    def h(self, k: int, gamma: float, t) -> np.ndarray | float:
        """Laplace-type transform h_k(t) = int x^k exp(-2 gamma t x) dmu(x)."""
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros_like(t)
        if k == 0:
            out += self.atom_zero_mass
        locs = np.concatenate([self.atom_locs, self.quad_nodes])
        wts = np.concatenate([self.atom_masses, self.quad_weights]) * locs**k
        for s in range(0, t.size, _CHUNK):
            tt = t[s:s + _CHUNK]
            out[s:s + _CHUNK] += np.exp(np.multiply.outer(-2.0 * gamma * tt, locs)) @ wts
        return float(out[0]) if scalar else out

    def resolvent_moment(self, lam: float, k: int = 2) -> float:
        """int x^k / (x - lam) dmu(x) for lam <= lambda_minus.

        Returns ``inf`` when the integral diverges at ``lam = lambda_minus``.
        """
        lm = self.lambda_minus
        if lam > lm:
            raise SingularIntegralError("lam lies inside the support")
        total = 0.0
        if self.atom_zero_mass > 0 and k == 0:
            if lam == 0:
                return math.inf
            total += self.atom_zero_mass / (0.0 - lam)
        if self.atom_locs.size:
            d = self.atom_locs - lam
            if np.any(d == 0):
                return math.inf
            total += float(np.sum(self.atom_masses * self.atom_locs**k / d))
        if not self.has_density:
            return total
        lo, hi = self.support
        a, b = self.edge_powers
        if lam == lo:
            if lo == 0:
                # x^k / x is regular for k >= 1.
                if k == 0:
                    return math.inf
                return total + float(np.dot(self.quad_weights, self.quad_nodes ** (k - 1)))
            if a <= 0:
                return math.inf
            return total + self.continuous_integral(lambda x: x**k, shift_left=-1.0)
        smooth = self.smooth
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.integrate.IntegrationWarning)
            val, _ = scipy.integrate.quad(
                lambda x: smooth(np.array([x]))[0] * x**k / (x - lam),
                lo, hi, weight="alg", wvar=(a, b), epsabs=0.0, epsrel=1e-13, limit=400)
        return total + val

    def cdf(self, x) -> np.ndarray:
        """Cumulative distribution function, evaluated pointwise."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.where(x >= 0, self.atom_zero_mass, 0.0)
        for loc, m in zip(self.atom_locs, self.atom_masses):
            out = out + np.where(x >= loc, m, 0.0)
        if self.has_density:
            out = out + self._continuous_cdf(x)
        return out

    @cached_property
    def _cdf_table(self):
        # Exact integrals of the density on a fine grid, interpolated linearly.
        lo, hi = self.support
        a, b = self.edge_powers
        grid = lo + (hi - lo) * 0.5 * (1 - np.cos(np.linspace(0, np.pi, 2049)))
        smooth = self.smooth
        pieces = np.zeros(grid.size)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.integrate.IntegrationWarning)
            for i in range(1, grid.size):
                pieces[i], _ = scipy.integrate.quad(
                    lambda s: smooth(np.array([s]))[0] * (s - lo) ** a * (hi - s) ** b,
                    grid[i - 1], grid[i], epsabs=1e-14, limit=100)
        return grid, np.cumsum(pieces)

    def _continuous_cdf(self, x):
        grid, cum = self._cdf_table
        return np.interp(x, grid, cum, left=0.0, right=cum[-1])

    def __repr__(self):
        return (f"SpectralMeasure(name={self.name!r}, atom_zero_mass={self.atom_zero_mass:.6g}, "
                f"n_atoms={self.atom_locs.size}, support={self.support})")


@dataclass(frozen=True)
class MarchenkoPasturParams:
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise InvalidParameterError(f"MP ratio must be > 0, got {self.r}")

    @property
    def lambda_minus(self) -> float:
        return (1.0 - math.sqrt(self.r)) ** 2

    @property
    def lambda_plus(self) -> float:
        return (1.0 + math.sqrt(self.r)) ** 2

    @property
    def atom_zero_mass(self) -> float:
        return max(1.0 - 1.0 / self.r, 0.0)


def mp_params(r: float) -> MarchenkoPasturParams:
    return MarchenkoPasturParams(float(r))


def _mp_gauss_rule(r: float, n: int):
    """Gauss rule for the continuous part of MP(r), r != 1, by Golub-Welsch.

    For r < 1 the law is free Poisson and its Jacobi matrix is explicit:
    diagonal 1, 1 + r, 1 + r, ... and off-diagonal sqrt(r).  For r > 1 the
    continuous part is MP(1/r) dilated by r, with mass 1/r.  The density's
    1/x factor has a pole at distance (1 - sqrt r)^2 from the support, which
    a Jacobi rule with 1/x in the smooth factor cannot resolve when r ~ 1.
    """
    q = r if r < 1 else 1.0 / r
    diag = np.full(n, 1.0 + q)
    diag[0] = 1.0
    x, v = scipy.linalg.eigh_tridiagonal(diag, np.full(n - 1, math.sqrt(q)))
    w = v[0] ** 2
    if r > 1:
        x, w = r * x, w / r
    return x, w


def mp_measure(r: float, nodes: int = DEFAULT_NODES) -> SpectralMeasure:
    """Marchenko-Pastur law with ratio ``r = d/n`` and unit variance.

    For ``r != 1`` the density vanishes like a square root at both edges, so
    ``mu((lo, lo+t]) ~ t**1.5``.  At ``r = 1`` the left edge sits at 0 where
    the density blows up like ``x**-0.5`` and the edge exponent is 1/2.
    """
    p = mp_params(r)
    r = p.r
    lo, hi = p.lambda_minus, p.lambda_plus
    if r == 1.0:
        smooth = lambda x: np.full_like(np.asarray(x, dtype=float), 1.0 / (2.0 * np.pi))
        powers, alpha = (-0.5, 0.5), 0.5
    else:
        smooth = lambda x: 1.0 / (2.0 * np.pi * r * np.asarray(x, dtype=float))
        powers, alpha = (0.5, 0.5), 1.5
    rule = None if r == 1.0 else (lambda n: _mp_gauss_rule(r, n))
    return SpectralMeasure(atom_zero_mass=p.atom_zero_mass, smooth=smooth, support=(lo, hi),
                           edge_powers=powers, edge_exponent=alpha, nodes=nodes,
                           name=f"mp(r={r:g})", gauss_rule=rule)


def point_mass(loc: float, mass: float = 1.0) -> SpectralMeasure:
    """delta_loc, optionally mixed with an atom at zero carrying 1 - mass."""
    if loc == 0:
        return SpectralMeasure(atom_zero_mass=1.0, name="delta(0)")
    return SpectralMeasure(atom_zero_mass=1.0 - mass, atom_locs=[loc], atom_masses=[mass],
                           name=f"delta({loc:g})")


def moment(mu: SpectralMeasure, k: int) -> float:
    return mu.moment(k)


def h_k(mu: SpectralMeasure, k: int, gamma: float, t):
    if gamma <= 0:
        raise InvalidParameterError("gamma must be > 0")
    if np.any(np.asarray(t) < 0):
        raise InvalidParameterError("t must be >= 0")
    return mu.h(k, gamma, t)


def stieltjes_m(z):
    """Stieltjes transform of the semicircle law on [-2, 2].

    Uses the branch with ``|m| <= 1``; ``m(z) + 1/m(z) = -z``.
    """
    z = np.asarray(z, dtype=complex)
    on_cut = (z.imag == 0) & (np.abs(z.real) <= 2)
    if np.any(on_cut):
        raise BranchCutError("z lies on the branch cut [-2, 2]")
    s = np.sqrt(z - 2) * np.sqrt(z + 2)
    # 1/m = (-z - s)/2 has no cancellation, so invert it.
    m = -2.0 / (z + s)
    return complex(m) if m.ndim == 0 else m


def mp_resolvent_integral(r: float, p):
    """int x/(x+p) dmu_MP(x) via the semicircle transform at q = -(p+1+r)/sqrt(r)."""
    pr = mp_params(r)
    p = np.asarray(p, dtype=complex)
    inside = (p.imag == 0) & (-p.real >= pr.lambda_minus) & (-p.real <= pr.lambda_plus)
    if np.any(inside):
        raise SingularIntegralError("-p lies inside the MP support")
    sr = math.sqrt(pr.r)
    q = -(p + 1.0 + pr.r) / sr
    out = stieltjes_m(q) / sr
    return out


def _snap_zeros(eigs, zero_tol: float) -> np.ndarray:
    e = np.asarray(eigs, dtype=float).ravel()
    if e.size == 0:
        raise InvalidParameterError("empty eigenvalue list")
    tol = zero_tol * max(1.0, np.abs(e).max())
    if np.any(e < -tol):
        raise InvalidParameterError("eigenvalues must be non-negative")
    return np.where(e <= tol, 0.0, e)


def esm_from_eigenvalues(eigs: Sequence[float], zero_tol: float = 1e-10) -> SpectralMeasure:
    """Empirical spectral measure (1/d) sum delta_{lambda_i}.

    Entries in ``[-zero_tol, zero_tol * max(1, max|eig|)]`` are treated as
    exact zeros; anything more negative is rejected.
    """
    e = _snap_zeros(eigs, zero_tol)
    locs, counts = np.unique(e, return_counts=True)
    masses = counts / e.size
    return SpectralMeasure(atom_locs=locs, atom_masses=masses, name=f"esm(d={e.size})")


def ks_distance(mu: SpectralMeasure, eigs, zero_tol: float = 1e-10) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF of ``eigs`` and ``mu``.

    Rounding noise around zero is snapped to 0 as in :func:`esm_from_eigenvalues`,
    so a rank-deficient H matches the atom of ``mu`` at the origin.
    """
    e = np.sort(_snap_zeros(eigs, zero_tol))
    u = np.unique(e)
    n = e.size
    upper = np.searchsorted(e, u, side="right") / n
    lower = np.searchsorted(e, u, side="left") / n
    ref = mu.cdf(u)
    # left limits of the reference CDF differ from ref only at its atoms
    ref_left = mu.cdf(u - 1e-12 * np.maximum(1.0, np.abs(u)))
    return float(max(np.max(np.abs(upper - ref)), np.max(np.abs(lower - ref_left))))
