"""Closed-form stability analysis on the test system x' = mu x + a y, y' = b x + lambda y.

For all three methods the characteristic polynomial of the one-step recursion is
s^2 - (alpha + beta + gamma (alpha - 1)(beta - 1)) s + alpha beta, with the
midpoint/trapezoid stability functions for the discrete methods and exponentials
for Strang's splitting. Roots lie inside the unit disk iff
-(1 + alpha)(1 + beta) / ((1 - alpha)(1 - beta)) < gamma < 1.
"""

from __future__ import annotations

import logging
import math
from typing import Literal

import numpy as np
import scipy.linalg
import scipy.optimize

from parthines.core.errors import PreconditionError, StabilityDomainError
from parthines.schemas.stability import (
    RecursionMethod,
    StabilityFunctions,
    StabilityVerdict,
    TestSystemParams,
)
from parthines.services.splitting import strang_linear_propagator

logger = logging.getLogger(__name__)

Flavor = Literal["discrete", "strang"]
Assembly = Literal["closed_form", "pencil"]

BRACKET = (1e-8, 1e8)
BOUNDARY_RTOL = 1e-12


def _flavor_of(method: RecursionMethod) -> Flavor:
    return "strang" if method == "strang" else "discrete"


def _check_h(h: float) -> None:
    if not h > 0.0:
        raise PreconditionError(f"step size must be positive, got {h!r}")


def stability_functions(params: TestSystemParams, h: float, flavor: Flavor) -> StabilityFunctions:
    """alpha, beta: trapezoid/midpoint factors, or the exact exponentials for Strang."""
    _check_h(h)
    if flavor == "strang":
        return StabilityFunctions(
            alpha=math.exp(params.mu * h), beta=math.exp(params.lam * h), flavor=flavor
        )
    p, q = 1.0 - 0.5 * h * params.mu, 1.0 - 0.5 * h * params.lam
    if p == 0.0 or q == 0.0:
        raise StabilityDomainError(f"stability function has a pole at h = {h!r}")
    return StabilityFunctions(
        alpha=(1.0 + 0.5 * h * params.mu) / p,
        beta=(1.0 + 0.5 * h * params.lam) / q,
        flavor=flavor,
    )


def pencil_matrices(params: TestSystemParams, h: float) -> tuple[np.ndarray, np.ndarray]:
    """(A, B) with A z_{n+1} = B z_n for one modified step."""
    _check_h(h)
    mu, lam, a, b = params.mu, params.lam, params.a, params.b
    lhs = np.array([[1.0 - 0.5 * h * mu, -0.5 * h * a], [0.0, 1.0 - 0.5 * h * lam]])
    rhs = np.array(
        [
            [1.0 + 0.5 * h * mu, 0.5 * h * a],
            [h * b * (1.0 + 0.5 * h * mu), 1.0 + 0.5 * h * lam + 0.5 * a * b * h * h],
        ]
    )
    return lhs, rhs


def recursion_matrix(
    params: TestSystemParams,
    h: float,
    method: RecursionMethod,
    assembly: Assembly = "closed_form",
) -> np.ndarray:
    """One-step propagator of the given method on the test system.

    For ``hines`` the propagator maps (x_n, y_{n+1/2}) to (x_{n+1}, y_{n+3/2}).
    """
    if method == "strang":
        return strang_linear_propagator(params, h)
    sf = stability_functions(params, h, "discrete")
    alpha, beta, gamma = sf.alpha, sf.beta, params.gamma
    mu, lam, a, b = params.mu, params.lam, params.a, params.b
    p, q = 1.0 - 0.5 * h * mu, 1.0 - 0.5 * h * lam
    if method == "hines":
        return np.array(
            [
                [alpha, h * a / p],
                [alpha * h * b / q, beta + gamma * (1.0 - alpha) * (1.0 - beta)],
            ]
        )
    if assembly == "pencil":
        lhs, rhs = pencil_matrices(params, h)
        return np.asarray(scipy.linalg.solve(lhs, rhs))
    return np.array(
        [
            [
                alpha * (1.0 + gamma * 0.5 * h * mu * (beta - 1.0)),
                h * a * (1.0 / (p * q) + 0.25 * gamma * (alpha - 1.0) * (beta - 1.0)),
            ],
            [h * b * (1.0 + 0.5 * h * mu) / q, beta + gamma * (beta - 1.0) * 0.5 * h * mu],
        ]
    )


def char_poly(alpha: float, beta: float, gamma: float) -> tuple[float, float]:
    """Coefficients (c1, c0) of s^2 + c1 s + c0."""
    return -(alpha + beta + gamma * (alpha - 1.0) * (beta - 1.0)), alpha * beta


def char_roots(alpha: float, beta: float, gamma: float) -> tuple[complex, complex]:
    c1, c0 = char_poly(alpha, beta, gamma)
    w = complex(c1 * c1 - 4.0 * c0) ** 0.5
    # pick the sign that avoids cancellation in c1 + w
    if (c1 * w.conjugate()).real < 0.0:
        w = -w
    big = -0.5 * (c1 + w)
    if big == 0.0:
        return 0j, 0j
    return big, c0 / big


def spectral_radius(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(scipy.linalg.eigvals(matrix))))


def lower_gamma_bound(alpha: float, beta: float) -> float:
    return -(1.0 + alpha) * (1.0 + beta) / ((1.0 - alpha) * (1.0 - beta))


def is_stable(alpha: float, beta: float, gamma: float) -> tuple[bool, float]:
    """Root-location criterion; margin is the signed distance of gamma to the interval ends."""
    if abs(alpha) >= 1.0 or abs(beta) >= 1.0:
        raise PreconditionError(f"criterion needs |alpha|, |beta| < 1, got {alpha!r}, {beta!r}")
    margin = min(gamma - lower_gamma_bound(alpha, beta), 1.0 - gamma)
    return margin > 0.0, margin


def verdict(params: TestSystemParams, h: float, method: RecursionMethod) -> StabilityVerdict:
    sf = stability_functions(params, h, _flavor_of(method))
    stable, margin = is_stable(sf.alpha, sf.beta, params.gamma)
    return StabilityVerdict(
        method=method,
        h=h,
        alpha=sf.alpha,
        beta=sf.beta,
        gamma=params.gamma,
        stable=stable,
        margin=margin,
        spectral_radius=spectral_radius(recursion_matrix(params, h, method)),
    )


def bound_function(params: TestSystemParams, h: np.ndarray, method: RecursionMethod) -> np.ndarray:
    """(1 + alpha)(1 + beta) / ((1 - alpha)(1 - beta)) as a function of h.

    Discrete methods: phi(h) = 4 / (h^2 mu lambda), decreasing to 0.
    Strang: coth(-mu h / 2) coth(-lambda h / 2), decreasing to 1.
    """
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0.0):
        raise PreconditionError("step sizes must be positive")
    if _flavor_of(method) == "strang":
        # (1 + e^z) / (1 - e^z) = -1 / tanh(z / 2)
        return (-1.0 / np.tanh(0.5 * params.mu * h)) * (-1.0 / np.tanh(0.5 * params.lam * h))
    return (2.0 / (-params.mu * h)) * (2.0 / (-params.lam * h))


def stability_boundary_h(params: TestSystemParams, method: RecursionMethod) -> float:
    """Step size beyond which the recursion is unstable, or ``inf`` when there is none.

    The bound function is monotone in h, so the crossing gamma = -bound(h) is unique
    and located by bisection.
    """
    if not (params.mu < 0.0 and params.lam < 0.0):
        raise StabilityDomainError("boundary step sizes need mu, lambda < 0")
    gamma = params.gamma
    if gamma >= 1.0:
        raise StabilityDomainError(f"gamma = {gamma!r} is outside (-inf, 1)")
    limit = 1.0 if method == "strang" else 0.0
    if -gamma <= limit:
        return math.inf

    def excess(h: float) -> float:
        return float(bound_function(params, np.array([h]), method)[0]) + gamma

    lo, hi = BRACKET
    while excess(lo) <= 0.0:
        lo *= 1e-2
    while excess(hi) >= 0.0:
        hi *= 1e2
        if not math.isfinite(hi):
            raise StabilityDomainError("boundary bracket did not close")
    h_crit = scipy.optimize.bisect(
        excess, lo, hi, xtol=np.finfo(float).tiny, rtol=BOUNDARY_RTOL, maxiter=2000
    )
    logger.debug("boundary %s gamma=%.6g: h_crit=%.15g", method, gamma, h_crit)
    return float(h_crit)


def monotonicity_nu(params: TestSystemParams) -> tuple[float, float]:
    """One-sided Lipschitz constants of (mu x + a y, 0) and (0, b x + lambda y)."""
    nu_f = 0.5 * (params.mu + math.hypot(params.mu, params.a))
    nu_g = 0.5 * (params.lam + math.hypot(params.lam, params.b))
    return nu_f, nu_g
