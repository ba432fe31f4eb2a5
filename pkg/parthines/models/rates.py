"""Channel opening/closing rates.

Hodgkin-Huxley rates use the 1952 sign convention (V in mV, depolarisation negative).
The compartment model rates are in SI units (V in volts, rates in 1/s).
"""

from __future__ import annotations

from typing import Union, overload

import numpy as np
from scipy.special import expit

ArrayLike = Union[float, np.ndarray]

SERIES_CUTOFF = 1e-5


@overload
def psi(x: float) -> float: ...


@overload
def psi(x: np.ndarray) -> np.ndarray: ...


def psi(x: ArrayLike) -> ArrayLike:
    """x / (e^x - 1), continuous through x = 0.

    Tends to 0 for x -> +inf and behaves like -x for x -> -inf.
    """
    arr = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        direct = arr / np.expm1(arr)
    series = 1.0 - arr / 2.0 + arr * arr / 12.0
    out = np.where(np.abs(arr) < SERIES_CUTOFF, series, direct)
    return float(out) if out.ndim == 0 else out


# ---- Hodgkin-Huxley (mV, ms)
def hh_alpha_n(v: ArrayLike) -> ArrayLike:
    return 0.1 * psi(0.1 * (np.asarray(v) + 10.0))


def hh_beta_n(v: ArrayLike) -> ArrayLike:
    return 0.125 * np.exp(np.asarray(v) / 80.0)


def hh_alpha_m(v: ArrayLike) -> ArrayLike:
    return psi(0.1 * (np.asarray(v) + 25.0))


def hh_beta_m(v: ArrayLike) -> ArrayLike:
    return 4.0 * np.exp(np.asarray(v) / 18.0)


def hh_alpha_h(v: ArrayLike) -> ArrayLike:
    return 0.07 * np.exp(0.05 * np.asarray(v))


def hh_beta_h(v: ArrayLike) -> ArrayLike:
    return expit(-0.1 * (np.asarray(v) + 30.0))


# ---- soma-dendrite-spine (V, s); n, m, h follow V1 and r, s follow V3
def sds_alpha_h(v1: ArrayLike) -> ArrayLike:
    return 70.0 * np.exp(-50.0 * (np.asarray(v1) + 0.07))


def sds_beta_h(v1: ArrayLike) -> ArrayLike:
    return 1000.0 * expit(100.0 * (np.asarray(v1) + 0.04))


def sds_alpha_m(v1: ArrayLike) -> ArrayLike:
    return 1e3 * psi(-100.0 * (np.asarray(v1) + 0.045))


def sds_beta_m(v1: ArrayLike) -> ArrayLike:
    return 4000.0 * np.exp(-(np.asarray(v1) + 0.07) / 0.018)


def sds_alpha_n(v1: ArrayLike) -> ArrayLike:
    return 100.0 * psi(-100.0 * (np.asarray(v1) + 0.06))


def sds_beta_n(v1: ArrayLike) -> ArrayLike:
    return 125.0 * np.exp(-12.5 * (np.asarray(v1) + 0.07))


def sds_alpha_r(v3: ArrayLike) -> ArrayLike:
    v3 = np.asarray(v3, dtype=float)
    # clamp the exponent so the unused branch cannot overflow
    decayed = 5.0 * np.exp(-50.0 * np.maximum(v3 + 0.07, 0.0))
    out = np.where(v3 <= -0.07, 5.0, decayed)
    return float(out) if out.ndim == 0 else out


def sds_beta_r(v3: ArrayLike) -> ArrayLike:
    return 5.0 - sds_alpha_r(v3)


def sds_alpha_s(v3: ArrayLike) -> ArrayLike:
    return 1600.0 * expit(72.0 * (np.asarray(v3) + 0.005))


def sds_beta_s(v3: ArrayLike) -> ArrayLike:
    return 100.0 * psi(200.0 * (np.asarray(v3) + 0.0189))
