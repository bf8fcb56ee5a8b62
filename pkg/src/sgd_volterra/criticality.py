"""Stepsize thresholds, Malthusian rates and Marchenko-Pastur closed forms.

All quantities here describe the deterministic limit ``psi(t)`` of the SGD
objective.  Two thresholds organise everything:

* ``gamma0 = 2 / (r m1)`` where ``m1`` is the first moment of the spectral
  measure.  Below it ``psi`` stays bounded, above it ``psi`` blows up.
* ``gamma_star = 1 / ((r/2) int x^2/(x - lambda_minus) dmu)``.  Below it the
  asymptotic rate is frozen at ``2 gamma lambda_minus``; above it the rate is
  ``2 gamma lambda_star`` with ``lambda_star`` the Malthusian exponent.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .spectral import InvalidParameterError, SpectralMeasure, mp_measure, mp_params

__all__ = [
    "CriticalityWarning",
    "RegimeError",
    "MPClosedFormParams",
    "Envelope",
    "CriticalityReport",
    "gamma_max",
    "reaches_gamma_max",
    "gamma_star",
    "malthusian_lambda",
    "psi_infinity",
    "mp_constants",
    "mp_gamma_star",
    "mp_closed_form",
    "asymptotic_rate",
    "fit_decay_rate",
]

# Relative tolerance for declaring gamma == gamma_star.
CRITICAL_RTOL = 1e-9


class CriticalityWarning(UserWarning):
    pass


class RegimeError(ValueError):
    """The requested quantity does not exist for this stepsize."""


def gamma_max(mu: SpectralMeasure, r: float) -> float:
    """Divergence threshold 2 / (r m1); ``inf`` when mu has no mass off zero."""
    if r <= 0:
        raise InvalidParameterError("r must be > 0")
    m1 = mu.moment(1)
    if m1 <= 0:
        return math.inf
    return 2.0 / (r * m1)


def reaches_gamma_max(gamma: float, g0: float) -> bool:
    """gamma >= gamma0, with quadrature rounding in m1 forgiven."""
    return gamma >= g0 * (1.0 - CRITICAL_RTOL)


def gamma_star(mu: SpectralMeasure, r: float) -> float:
    """Critical stepsize; 0 (with a warning) when the edge integral diverges."""
    if r <= 0:
        raise InvalidParameterError("r must be > 0")
    integral = mu.resolvent_moment(mu.lambda_minus, k=2)
    if not math.isfinite(integral):
        warnings.warn(f"int x^2/(x - lambda_minus) dmu diverges for {mu.name}; "
                      "no supercritical window, gamma_star reported as 0",
                      CriticalityWarning, stacklevel=2)
        return 0.0
    if integral <= 0:
        return math.inf
    return 1.0 / (0.5 * r * integral)


def malthusian_lambda(mu: SpectralMeasure, r: float, gamma: float, *, xtol: float = 1e-14) -> float:
    """Root in [0, lambda_minus) of (r/2) int x^2/(x - lam) dmu = 1/gamma."""
    g0 = gamma_max(mu, r)
    gs = gamma_star(mu, r)
    if not gs < gamma or reaches_gamma_max(gamma, g0):
        raise RegimeError(f"gamma={gamma:g} is outside the supercritical window ({gs:g}, {g0:g}); "
                          f"the rate is frozen at lambda_minus={mu.lambda_minus:g} below it")
    target = 1.0 / gamma

    def excess(lam):
        return 0.5 * r * mu.resolvent_moment(lam, k=2) - target

    return scipy.optimize.bisect(excess, 0.0, mu.lambda_minus, xtol=xtol, rtol=4 * np.finfo(float).eps,
                                 maxiter=200)


def psi_infinity(mu: SpectralMeasure, R_tilde: float, r: float, gamma: float) -> float:
    """Limit of psi(t) as t -> inf for gamma below gamma0."""
    g0 = gamma_max(mu, r)
    if reaches_gamma_max(gamma, g0):
        raise RegimeError(f"gamma={gamma:g} >= gamma0={g0:g}: psi diverges")
    num = r * mu.atom_zero_mass + (1.0 - r)
    val = 0.5 * R_tilde * num / (1.0 - 0.5 * gamma * r * mu.moment(1))
    # rounding can leave -1e-17 when the atom cancels 1 - r exactly
    return max(val, 0.0) if abs(val) < 1e-14 else val


# -- Marchenko-Pastur closed forms ------------------------------------------

def mp_gamma_star(r: float) -> float:
    sr = math.sqrt(r)
    return 2.0 / (sr * (r - sr + 1.0))


@dataclass(frozen=True)
class MPClosedFormParams:
    """rho, omega and gamma_star for MP(r) at a given stepsize."""

    rho: float
    omega: float
    gamma_star: float
    r: float
    gamma: float

    @property
    def c(self) -> float:
        return 1.0 - 0.5 * self.r * self.gamma

    @property
    def sqrt_abs_omega(self) -> float:
        return math.sqrt(abs(self.omega))

    @property
    def signed_root(self) -> float:
        """sqrt|omega|, negated past gamma = 2/r where the other root is the physical one."""
        return self.sqrt_abs_omega if self.c > 0 else -self.sqrt_abs_omega

    @property
    def jamming_rate(self) -> float:
        """rho + sqrt|omega|, which equals lambda_star above gamma_star.

        Past 2/r it is rho - sqrt|omega| < 0 and psi grows at rate
        ``-2 gamma (rho - sqrt|omega|)``.
        """
        return self.rho + self.signed_root


def mp_constants(r: float, gamma: float, *, allow_divergent: bool = False) -> MPClosedFormParams:
    r = mp_params(r).r
    if gamma <= 0:
        raise InvalidParameterError("gamma must be > 0")
    if gamma >= 2.0 / r and not allow_divergent:
        raise InvalidParameterError(f"gamma={gamma:g} must be < 2/r={2.0 / r:g}")
    if gamma == 2.0 / r:
        raise InvalidParameterError("gamma = 2/r is degenerate (rho = omega = 0)")
    c = 1.0 - 0.5 * r * gamma
    rho = 0.5 * (1.0 + r) * c
    omega = 0.25 * c * c * (8.0 / gamma - (1.0 + r) ** 2)
    return MPClosedFormParams(rho=rho, omega=omega, gamma_star=mp_gamma_star(r), r=r, gamma=gamma)


def _laplace_over_quadratic(mu, num, rho, omega, gamma, t, singular_edge):
    """int num(x) e^{-2 gamma x t} / ((x - rho)^2 + omega) dmu(x) for every t.

    With ``singular_edge`` the quadratic vanishes at lambda_minus and factors
    as (x - lambda_minus)(x - other); the first factor is absorbed by the
    Jacobi weight.
    """
    locs, wts = [], []
    if mu.atom_zero_mass > 0:
        locs.append(np.zeros(1))
        wts.append(np.array([mu.atom_zero_mass]) * num(np.zeros(1)) / (rho * rho + omega))
    if singular_edge:
        other = 2.0 * rho - mu.lambda_minus
        x, w = mu._jacobi_rule(-1.0)
        locs.append(x)
        wts.append(w * num(x) / (x - other))
    else:
        x, w = mu.quad_nodes, mu.quad_weights
        locs.append(x)
        wts.append(w * num(x) / ((x - rho) ** 2 + omega))
    locs = np.concatenate(locs)
    wts = np.concatenate(wts)
    out = np.empty_like(t)
    for s in range(0, t.size, 4096):
        tt = t[s:s + 4096]
        out[s:s + 4096] = np.exp(np.multiply.outer(-2.0 * gamma * tt, locs)) @ wts
    return out


def mp_closed_form(r: float, gamma: float, R: float, R_tilde: float, t, *,
                   nodes: int = 1024, allow_divergent: bool = False):
    """Explicit psi(t) for isotropic data (MP spectrum), noisy or not.

    Below (or at) gamma_star the answer is a pair of Laplace-type integrals
    against MP; above it an extra "jamming" exponential
    ``exp(-2 gamma (rho + sqrt|omega|) t)`` appears.

    Parameters
    ----------
    allow_divergent : bool
        Also accept gamma > 2/r.  The expression continues analytically
        there provided the jamming root is taken as rho - sqrt|omega| (the
        growing mode); every coefficient keeps its form with sqrt|omega|
        replaced by that signed root.
    """
    p = mp_constants(r, gamma, allow_divergent=allow_divergent)
    r = p.r
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise InvalidParameterError("t must be >= 0")
    mu = mp_measure(r, nodes=nodes)
    c, rho, omega, s = p.c, p.rho, p.omega, p.signed_root
    gs = p.gamma_star
    lam = rho + s
    at_critical = r != 1.0 and abs(gamma - gs) <= CRITICAL_RTOL * gs
    jamming = gamma > gs and not at_critical
    # The quadratic has a root on the left edge only at gamma_star (r != 1).
    singular = at_critical

    out = np.zeros_like(t)
    if R:
        integral = _laplace_over_quadratic(mu, lambda x: x, rho, omega, gamma, t, singular)
        out += R * (c / gamma) * integral
        if jamming:
            coef = (lam - (4.0 / gamma**2) * c * c * (rho - s) / (r * (rho * rho - s * s))) / (4.0 * s)
            out += R * coef * np.exp(-2.0 * gamma * lam * t)
    if R_tilde:
        q = 2.0 / gamma * c
        const = q * (1.0 - r) / (rho * rho + omega)
        integral = _laplace_over_quadratic(mu, lambda x: -r * x + r * q, rho, omega, gamma, t, singular)
        noise = const + integral
        if jamming:
            coef = (-2.0 * s) * r * (q - lam) / (4.0 * omega * lam)
            coef *= lam / q - q * (rho - s) / (r * (rho * rho + omega))
            noise = noise + coef * np.exp(-2.0 * gamma * lam * t)
        out += 0.5 * R_tilde * noise
    return float(out[0]) if scalar else out


# -- asymptotics ------------------------------------------------------------

@dataclass(frozen=True)
class Envelope:
    """psi(t) - psi_inf ~ prefactor * t**(-poly_power) * exp(-exp_rate * t)."""

    exp_rate: float
    poly_power: float
    prefactor: float | None = None
    terms: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CriticalityReport:
    gamma: float
    r: float
    gamma0: float
    gamma_star: float
    lambda_minus: float
    lambda_plus: float
    regime: str
    lambda_star: float | None
    psi_inf: float
    envelope: Envelope

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("gamma", "r", "gamma0", "gamma_star", "lambda_minus",
                                            "lambda_plus", "regime", "lambda_star", "psi_inf")}
        d["exp_rate"] = self.envelope.exp_rate
        d["poly_power"] = self.envelope.poly_power
        d["prefactor"] = self.envelope.prefactor
        for k, v in self.envelope.terms.items():
            d[f"envelope.{k}"] = v
        return d


def _is_mp(mu: SpectralMeasure, r: float) -> bool:
    return mu.name == f"mp(r={r:g})"


def asymptotic_rate(mu: SpectralMeasure, r: float, gamma: float, R: float = 1.0,
                    R_tilde: float = 0.0) -> CriticalityReport:
    """Classify the long-time behaviour of psi and report its envelope.

    MP measures additionally get the explicit prefactors; other measures
    only get the regime, the exponential rate and the polynomial power.
    """
    g0 = gamma_max(mu, r)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CriticalityWarning)
        gs = gamma_star(mu, r)
    lm, lp = mu.lambda_minus, mu.lambda_plus
    alpha = mu.edge_exponent
    base = dict(gamma=gamma, r=r, gamma0=g0, gamma_star=gs, lambda_minus=lm, lambda_plus=lp)

    if reaches_gamma_max(gamma, g0):
        return CriticalityReport(**base, regime="divergent", lambda_star=None, psi_inf=math.inf,
                                 envelope=Envelope(exp_rate=math.nan, poly_power=math.nan))

    pinf = psi_infinity(mu, R_tilde, r, gamma)
    mp = _is_mp(mu, r)
    pc = mp_constants(r, gamma) if mp else None

    if lm == 0.0:
        a = 0.5 if alpha is None else alpha
        # R term decays like t^{-1-alpha}, the noise term like t^{-alpha}.
        power = a if R_tilde else 1.0 + a
        terms, pref = {}, None
        if mp and r == 1.0:
            k = gamma**-1.5 * pc.c * math.sqrt(lp) / (2 * math.sqrt(2 * math.pi)) / (pc.rho**2 + pc.omega)
            terms = {"coef_t^-3/2": k * R / (4 * gamma), "coef_t^-1/2": k * R_tilde * r}
            pref = terms["coef_t^-1/2"] if R_tilde else terms["coef_t^-3/2"]
        return CriticalityReport(**base, regime="convex", lambda_star=None, psi_inf=pinf,
                                 envelope=Envelope(0.0, power, pref, terms))

    if abs(gamma - gs) <= CRITICAL_RTOL * gs:
        # Infinite-mean renewal at the edge: power 2 - alpha for 1 < alpha < 2.
        power = 0.5 if alpha is None else max(2.0 - alpha, 0.0)
        return CriticalityReport(**base, regime="critical", lambda_star=lm, psi_inf=pinf,
                                 envelope=Envelope(2 * gamma * lm, power))

    if gamma < gs:
        power = 1.5 if alpha is None else alpha
        pref = None
        if mp:
            c, rho, om = pc.c, pc.rho, pc.omega
            pref = (math.sqrt(lp - lm) / (8 * math.sqrt(2 * math.pi) * r * gamma**1.5 * ((lm - rho) ** 2 + om))
                    * (R * c / gamma + 0.5 * R_tilde * (2 * r * c / (gamma * lm) - r)))
        return CriticalityReport(**base, regime="subcritical", lambda_star=None, psi_inf=pinf,
                                 envelope=Envelope(2 * gamma * lm, power, pref))

    lam = malthusian_lambda(mu, r, gamma)
    pref = None
    if mp:
        c, rho, om, s = pc.c, pc.rho, pc.omega, pc.sqrt_abs_omega
        jam = rho + s
        pref_R = (jam - (4 / gamma**2) * c * c * (rho - s) / (r * (rho * rho - s * s))) / (4 * s)
        q = 2 / gamma * c
        pref_N = (-2 * s) * r * (q - jam) / (8 * om * jam) * (jam / q - q * (rho - s) / (r * (rho * rho + om)))
        pref = R * pref_R + R_tilde * pref_N
    return CriticalityReport(**base, regime="supercritical", lambda_star=lam, psi_inf=pinf,
                             envelope=Envelope(2 * gamma * lam, 0.0, pref))


def fit_decay_rate(t, psi, psi_inf: float = 0.0, poly_power: float = 0.0,
                   window: tuple[float, float] = (0.5, 1.0)) -> float:
    """Least-squares exponential rate of psi - psi_inf on a window of the horizon.

    ``t**poly_power`` is multiplied back in first so that a pure
    ``t^{-a} e^{-kt}`` tail returns ``k``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(psi, dtype=float) - psi_inf
    T = t[-1]
    sel = (t >= window[0] * T) & (t <= window[1] * T) & (y > 0) & (t > 0)
    if sel.sum() < 3:
        raise ValueError("not enough positive samples in the fitting window")
    logy = np.log(y[sel]) + poly_power * np.log(t[sel])
    slope = np.polyfit(t[sel], logy, 1)[0]
    return -float(slope)
