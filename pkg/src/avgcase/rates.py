"""Closed-form expected errors on the uniform disk, as fractions of ``init_scale**2``.

With ``q = (R/C)^2`` and ``K_{k,R}^2 / C^{2k} = q^k / (k + 1)``:

* optimal averaged method: ``1 / sum_{k<=t} (k + 1) q^{-k}``
* constant-weight averaging: ``(1 - q)^2 sum_{k=1}^t q^k/(k+1) q^{2(t-k)} + q^{2t}``
* gradient descent with step ``1/C``: ``q^t / (t + 1)``

Every quantity has a ``log_`` twin so long horizons do not underflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "RatePrediction",
    "xi_opt",
    "xi_asymp",
    "xi_gd",
    "log_xi_opt",
    "log_xi_asymp",
    "log_xi_gd",
    "limiting_ratio",
    "predict",
]


def _log_q(center: float, radius: float) -> float:
    if not (center > 0 and radius >= 0):
        raise ValueError("center must be positive and radius nonnegative")
    if not radius < center:
        raise ValueError(f"radius must be below center (R={radius}, C={center})")
    return 2 * math.log(radius / center) if radius > 0 else -math.inf


def _check_t(t):
    if t < 0 or int(t) != t:
        raise ValueError(f"t must be a nonnegative integer, got {t}")
    return int(t)


def log_xi_opt(center: float, radius: float, t: int) -> float:
    lq = _log_q(center, radius)
    t = _check_t(t)
    if lq == -math.inf:
        return -math.inf if t else 0.0
    k = np.arange(t + 1)
    return -float(logsumexp(np.log1p(k) - k * lq))


def log_xi_asymp(center: float, radius: float, t: int) -> float:
    lq = _log_q(center, radius)
    t = _check_t(t)
    if lq == -math.inf:
        return -math.inf if t else 0.0
    if t == 0:
        return 0.0
    k = np.arange(1, t + 1)
    terms = k * lq - np.log1p(k) + 2 * (t - k) * lq
    head = 2 * math.log1p(-math.exp(lq)) + logsumexp(terms)
    return float(np.logaddexp(head, 2 * t * lq))


def log_xi_gd(center: float, radius: float, t: int) -> float:
    lq = _log_q(center, radius)
    t = _check_t(t)
    if lq == -math.inf:
        return -math.inf if t else 0.0
    return t * lq - math.log1p(t)


def xi_opt(center: float, radius: float, t: int) -> float:
    return math.exp(log_xi_opt(center, radius, t))


def xi_asymp(center: float, radius: float, t: int) -> float:
    return math.exp(log_xi_asymp(center, radius, t))


def xi_gd(center: float, radius: float, t: int) -> float:
    return math.exp(log_xi_gd(center, radius, t))


def limiting_ratio(center: float, radius: float) -> float:
    """Long-run ratio of the averaged methods' error to gradient descent's: ``1 - R^2/C^2``."""
    _log_q(center, radius)
    return 1.0 - (radius / center) ** 2


@dataclass(frozen=True)
class RatePrediction:
    t: int
    xi_opt: float
    xi_asymp: float
    xi_gd: float


def predict(center: float, radius: float, iters: int) -> list[RatePrediction]:
    return [
        RatePrediction(
            t,
            xi_opt(center, radius, t),
            xi_asymp(center, radius, t),
            xi_gd(center, radius, t),
        )
        for t in range(iters + 1)
    ]
