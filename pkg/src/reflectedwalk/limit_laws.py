"""Closed-form limit densities and integral identities, with quadrature oracles.

These are the continuum references every lattice/Monte Carlo quantity is
checked against: the half-normal marginals of reflected Brownian motion, the
Rayleigh endpoint law of the Brownian meander, the Maxwell midpoint law of a
positive bridge (normalized excursion), the two-time joint density of |B|,
and the Laplace-type integral identity used to collapse the renewal-window
integrals.  All integrals are evaluated by adaptive quadrature under a
declared absolute tolerance; sub-Gaussian integrands are truncated where the
Gaussian factor falls below 1e-16.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import dblquad, quad

from .errors import QuadratureFailure

_GAUSS_CUT = 2.0 * 37.0  # exp(-37) ~ 8.5e-17; u^2/(2 theta) <= 37


@dataclass(frozen=True)
class QuadratureSpec:
    """Contract for one adaptive integral."""

    integrand: str
    lower: float
    upper: float
    abs_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if self.abs_tol <= 0:
            raise ValueError("tolerance must be positive")


def integrate(func, spec: QuadratureSpec) -> float:
    val, err = quad(func, spec.lower, spec.upper,
                    epsabs=spec.abs_tol * 0.1, epsrel=1e-12,
                    limit=spec.max_subdivisions)
    if err > spec.abs_tol:
        raise QuadratureFailure(
            f"{spec.integrand}: error estimate {err:.2e} > {spec.abs_tol:g}")
    return float(val)


def gaussian_tail_cutoff(scale2: float, extra: float = 0.0) -> float:
    """Upper limit where exp(-u^2 / (2 scale2)) drops below 1e-16."""
    return math.sqrt(_GAUSS_CUT * scale2) + extra


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------

def half_normal_density(u: float, t: float) -> float:
    """Density of |B_t|: 2 exp(-u^2/(2t)) / sqrt(2 pi t) on u >= 0."""
    if t <= 0:
        raise ValueError("t must be positive")
    if u < 0:
        raise ValueError("u must be non-negative")
    return 2.0 * math.exp(-u * u / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)


def half_normal_cdf(u: float, t: float) -> float:
    if t <= 0:
        raise ValueError("t must be positive")
    if u < 0:
        raise ValueError("u must be non-negative")
    return math.erf(u / math.sqrt(2.0 * t))


def rayleigh_meander_density(z: float) -> float:
    """Brownian-meander endpoint law: z exp(-z^2/2) on z >= 0."""
    if z < 0:
        raise ValueError("z must be non-negative")
    return z * math.exp(-z * z / 2.0)


def reflected_bm_joint_density(y: float, z: float, s: float, t: float) -> float:
    """Joint density of (|B_s|, |B_t|) for 0 < s < t, by the image method."""
    if not (0.0 < s < t):
        raise ValueError("need 0 < s < t")
    if y < 0 or z < 0:
        raise ValueError("arguments must be non-negative")
    u = t - s
    return (1.0 / (math.pi * math.sqrt(s * u))) * math.exp(-y * y / (2.0 * s)) * (
        math.exp(-((z - y) ** 2) / (2.0 * u)) + math.exp(-((z + y) ** 2) / (2.0 * u)))


def bridge_marginal_density(u: float, s: float, t: float) -> float:
    """Midpoint law at time s of a positive bridge over [0, t] (from/to 0).

    Maxwell density with scale parameter theta = s (t-s) / t, written in the
    argument of the test function itself (the rescaled walk value).
    """
    if not (0.0 < s < t):
        raise ValueError("need 0 < s < t")
    if u < 0:
        raise ValueError("u must be non-negative")
    theta = s * (t - s) / t
    return math.sqrt(2.0 / math.pi) * u * u * math.exp(-u * u / (2.0 * theta)) / theta**1.5


# ---------------------------------------------------------------------------
# expectation oracles
# ---------------------------------------------------------------------------

def half_normal_expectation(phi, t: float, *, abs_tol: float = 1e-10) -> float:
    spec = QuadratureSpec("half_normal_expectation", 0.0,
                          gaussian_tail_cutoff(t), abs_tol)
    return integrate(lambda u: phi(u) * half_normal_density(u, t), spec)


def meander_limit_expectation(phi, *, abs_tol: float = 1e-10) -> float:
    spec = QuadratureSpec("meander_limit_expectation", 0.0,
                          gaussian_tail_cutoff(1.0, extra=2.0), abs_tol)
    return integrate(lambda z: phi(z) * rayleigh_meander_density(z), spec)


def bridge_limit_expectation(phi, s: float, t: float, *, abs_tol: float = 1e-10) -> float:
    theta = s * (t - s) / t
    spec = QuadratureSpec("bridge_limit_expectation", 0.0,
                          gaussian_tail_cutoff(theta, extra=2.0), abs_tol)
    return integrate(lambda u: phi(u) * bridge_marginal_density(u, s, t), spec)


def joint_limit_expectation(phi1, phi2, s: float, t: float,
                            *, abs_tol: float = 1e-9) -> float:
    """E[phi1(|B_s|) phi2(|B_t|)] by two-dimensional adaptive quadrature."""
    ub_y = gaussian_tail_cutoff(s)
    ub_z = gaussian_tail_cutoff(t) + ub_y
    val, err = dblquad(
        lambda z, y: phi1(y) * phi2(z) * reflected_bm_joint_density(y, z, s, t),
        0.0, ub_y, 0.0, ub_z, epsabs=abs_tol * 0.1, epsrel=1e-10)
    if err > abs_tol:
        raise QuadratureFailure(f"joint expectation error estimate {err:.2e} > {abs_tol:g}")
    return float(val)


# ---------------------------------------------------------------------------
# integral identity
# ---------------------------------------------------------------------------

def imk_identity(alpha: float, beta: float, *, abs_tol: float = 1e-10,
                 max_subdivisions: int = 300) -> tuple[float, float, float]:
    """integral_0^inf t^(-1/2) exp(-alpha t - beta / t) dt vs its closed form.

    Returns (quadrature value, sqrt(pi/alpha) exp(-2 sqrt(alpha beta)), gap).
    """
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    # substitute u = v^2 to remove the inverse-square-root endpoint
    val, err = quad(lambda v: 2.0 * math.exp(-alpha * v * v - beta / (v * v)),
                    0.0, math.inf, epsabs=abs_tol * 1e-2, epsrel=1e-13,
                    limit=max_subdivisions)
    if err > abs_tol:
        raise QuadratureFailure(f"imk identity error estimate {err:.2e} > {abs_tol:g}")
    rhs = math.sqrt(math.pi / alpha) * math.exp(-2.0 * math.sqrt(alpha * beta))
    return float(val), rhs, abs(float(val) - rhs)
