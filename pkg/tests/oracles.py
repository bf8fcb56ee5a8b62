"""Independent reference computations for the test-suite.

Nothing here imports the package.  Every oracle uses a different route from
the implementation: raw adaptive quadrature on the textbook densities,
closed-form ODE solutions, or hand algebra.
"""
import math

import numpy as np
from scipy import integrate


def mp_edges(r):
    return (1 - math.sqrt(r)) ** 2, (1 + math.sqrt(r)) ** 2


def mp_density(x, r):
    lo, hi = mp_edges(r)
    if x <= lo or x >= hi:
        return 0.0
    return math.sqrt((x - lo) * (hi - x)) / (2 * math.pi * x * r)


def mp_integral(f, r, points=None):
    """int f dmu_MP including the atom at 0, by adaptive quadrature."""
    lo, hi = mp_edges(r)
    val, _ = integrate.quad(lambda x: f(x) * mp_density(x, r), lo, hi, limit=500,
                            epsabs=1e-13, epsrel=1e-12, points=points)
    atom = max(1 - 1 / r, 0.0)
    return val + atom * f(0.0)


def mp_moment(k, r):
    return mp_integral(lambda x: x**k, r)


def semicircle_stieltjes(z):
    """m(z) = int sqrt(4 - y^2)/(2 pi) / (y - z) dy, real and imaginary parts separately."""
    dens = lambda y: math.sqrt(max(4 - y * y, 0.0)) / (2 * math.pi)
    re = integrate.quad(lambda y: (dens(y) / (y - z)).real, -2, 2, limit=400, epsabs=1e-13)[0]
    im = integrate.quad(lambda y: (dens(y) / (y - z)).imag, -2, 2, limit=400, epsabs=1e-13)[0]
    return complex(re, im)


def gamma_star_closed(r):
    return 2 / (math.sqrt(r) * (r - math.sqrt(r) + 1))


def rho_omega(r, gamma):
    c = 1 - r * gamma / 2
    return (1 + r) / 2 * c, 0.25 * c * c * (8 / gamma - (1 + r) ** 2)


def delta1_psi(gamma, r, t):
    """psi for mu = delta_1, R = 1, R_tilde = 0.

    psi' = (gamma^2 r - 2 gamma) psi with psi(0) = 1/2, from differentiating
    the renewal equation with an exponential kernel.
    """
    return 0.5 * np.exp((gamma * gamma * r - 2 * gamma) * np.asarray(t))


def psi_inf_formula(atom0, m1, R_tilde, r, gamma):
    return R_tilde / 2 * (r * atom0 + 1 - r) / (1 - gamma * r * m1 / 2)


def gradient_flow_f(A, b, x0, gamma, t):
    """Exact f(x(t)) for x' = -gamma grad f(x), via the SVD of A."""
    n = A.shape[0]
    H = A.T @ A / n
    lam, Q = np.linalg.eigh(H)
    c = Q.T @ (A.T @ b) / n
    y0 = Q.T @ x0
    out = []
    for tt in np.atleast_1d(t):
        e = np.exp(-gamma * lam * tt)
        # y_j(t) solves y' = -gamma (lam_j y - c_j)
        with np.errstate(divide="ignore", invalid="ignore"):
            ystar = np.where(lam > 1e-14, c / np.where(lam > 1e-14, lam, 1.0), 0.0)
        y = np.where(lam > 1e-14, ystar + (y0 - ystar) * e, y0 + gamma * c * tt)
        x = Q @ y
        res = A @ x - b
        out.append(0.5 * res @ res / n)
    return np.array(out)


def plain_gd(A, b, x0, gamma, steps):
    """Full-gradient descent x <- x - (gamma/n) A^T (A x - b), written out directly."""
    n = A.shape[0]
    x = np.array(x0, dtype=float)
    for _ in range(steps):
        g = np.zeros_like(x)
        for i in range(n):
            g += A[i] * (A[i] @ x - b[i])
        x = x - gamma / n * g
    return x
