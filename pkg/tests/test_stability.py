"""Stability criterion, recursion matrices and boundary step sizes."""

from __future__ import annotations

import math

import numpy as np
import pytest

from parthines.core.errors import PreconditionError, StabilityDomainError
from parthines.schemas.stability import TestSystemParams
from parthines.services.stability import (
    bound_function,
    char_roots,
    is_stable,
    monotonicity_nu,
    recursion_matrix,
    spectral_radius,
    stability_boundary_h,
    stability_functions,
    verdict,
)

BAND = 1e-10


def _admissible(rng: np.random.Generator) -> TestSystemParams:
    mu, lam = -(10.0 ** rng.uniform(-2, 2, size=2))
    gamma = rng.uniform(-50.0, 0.999)
    a = math.sqrt(abs(gamma * mu * lam)) * rng.choice([-1.0, 1.0])
    b = gamma * mu * lam / a if a != 0.0 else 0.0
    return TestSystemParams(mu=mu, lam=lam, a=a, b=b)


def test_textbook_example_is_stable() -> None:
    params = TestSystemParams.model_validate({"mu": -2, "lambda": -2, "a": 1, "b": 1})
    v = verdict(params, 1.0, "modified")
    assert v.alpha == 0.0 and v.beta == 0.0
    assert v.gamma == 0.25
    assert v.stable
    assert v.spectral_radius < 1.0


@pytest.mark.parametrize("method", ["modified", "hines", "strang"])
def test_criterion_agrees_with_spectral_radius(rng: np.random.Generator, method: str) -> None:
    checked = 0
    for _ in range(10_000):
        params = _admissible(rng)
        h = 10.0 ** rng.uniform(-3, 2)
        flavor = "strang" if method == "strang" else "discrete"
        sf = stability_functions(params, h, flavor)
        stable, margin = is_stable(sf.alpha, sf.beta, params.gamma)
        rho = spectral_radius(recursion_matrix(params, h, method))
        if abs(margin) < BAND or abs(rho - 1.0) < BAND:
            continue
        assert stable == (rho < 1.0), (params, h)
        checked += 1
    assert checked > 9_000


def test_modified_and_hines_share_trace_and_determinant(rng: np.random.Generator) -> None:
    for _ in range(10_000):
        params = _admissible(rng)
        h = 10.0 ** rng.uniform(-3, 2)
        c_mod = recursion_matrix(params, h, "modified")
        c_hines = recursion_matrix(params, h, "hines")
        scale = max(1.0, np.max(np.abs(c_mod)), np.max(np.abs(c_hines)))
        assert abs(np.trace(c_mod) - np.trace(c_hines)) <= 1e-12 * scale
        assert abs(np.linalg.det(c_mod) - np.linalg.det(c_hines)) <= 1e-12 * scale**2


def test_pencil_assembly_matches_closed_form(rng: np.random.Generator) -> None:
    for _ in range(500):
        params = _admissible(rng)
        h = 10.0 ** rng.uniform(-3, 1)
        closed = recursion_matrix(params, h, "modified")
        pencil = recursion_matrix(params, h, "modified", assembly="pencil")
        scale = max(1.0, np.max(np.abs(closed)))
        assert np.max(np.abs(closed - pencil)) <= 1e-10 * scale


def test_char_roots_are_accurate_for_tiny_products() -> None:
    small, big = sorted(char_roots(0.5, 1e-12, 0.0), key=abs)
    assert abs(big) == pytest.approx(0.5, rel=1e-14)
    assert abs(small) == pytest.approx(1e-12, rel=1e-12)


def test_is_stable_requires_contractive_factors() -> None:
    with pytest.raises(PreconditionError):
        is_stable(1.0, 0.5, 0.0)


def test_stability_function_pole() -> None:
    params = TestSystemParams(mu=2.0, lam=-1.0)
    with pytest.raises(StabilityDomainError):
        stability_functions(params, 1.0, "discrete")


# ---------------------------------------------------------------- Boundaries
def test_discrete_boundary_closed_form() -> None:
    params = TestSystemParams(mu=-2.0, lam=-2.0, a=2.0, b=-2.0)
    assert params.gamma == -1.0
    h_crit = stability_boundary_h(params, "modified")
    assert h_crit == pytest.approx(2.0 / math.sqrt(-params.gamma * 4.0), rel=1e-10)
    assert verdict(params, 0.9 * h_crit, "modified").stable
    assert not verdict(params, 1.1 * h_crit, "modified").stable


def test_strang_boundary_closed_form() -> None:
    params = TestSystemParams(mu=-2.0, lam=-2.0, a=4.0, b=-4.0)
    assert params.gamma == -4.0
    # coth(h)^2 = 4
    assert stability_boundary_h(params, "strang") == pytest.approx(math.atanh(0.5), rel=1e-10)


@pytest.mark.parametrize(
    ("gamma_ab", "method"),
    [((1.0, 1.0), "modified"), ((0.0, 0.0), "hines"), ((2.0, -2.0), "strang")],
)
def test_unbounded_cases_return_inf(gamma_ab: tuple[float, float], method: str) -> None:
    a, b = gamma_ab
    params = TestSystemParams(mu=-2.0, lam=-2.0, a=a, b=b)
    assert stability_boundary_h(params, method) == math.inf


def test_boundary_domain_errors() -> None:
    with pytest.raises(StabilityDomainError):
        stability_boundary_h(TestSystemParams(mu=1.0, lam=-1.0), "modified")
    with pytest.raises(StabilityDomainError):
        stability_boundary_h(TestSystemParams(mu=-1.0, lam=-1.0, a=2.0, b=1.0), "modified")


def test_bound_function_is_decreasing() -> None:
    params = TestSystemParams(mu=-1.0, lam=-3.0)
    h = np.geomspace(1e-3, 1e3, 50)
    for method in ("modified", "strang"):
        values = bound_function(params, h, method)
        assert np.all(np.diff(values) < 0.0)
    assert bound_function(params, np.array([1e3]), "strang")[0] == pytest.approx(1.0)
    with pytest.raises(PreconditionError):
        bound_function(params, np.array([0.0]), "modified")


# ---------------------------------------------------------------- Monotonicity
def test_monotonicity_constants_bound_rayleigh_quotients(rng: np.random.Generator) -> None:
    theta = np.linspace(0.0, np.pi, 20_001)
    v = np.stack([np.cos(theta), np.sin(theta)])
    for _ in range(100):
        params = _admissible(rng)
        nu_f, nu_g = monotonicity_nu(params)
        jf = np.array([[params.mu, params.a], [0.0, 0.0]])
        jg = np.array([[0.0, 0.0], [params.b, params.lam]])
        for jac, nu in ((jf, nu_f), (jg, nu_g)):
            quotients = np.einsum("in,ij,jn->n", v, jac, v)
            scale = max(1.0, abs(nu))
            assert np.max(quotients) <= nu + 1e-9 * scale
            assert np.max(quotients) >= nu - 1e-3 * scale
