"""Per-iteration coefficients of the average-case optimal methods.

Also builds the optimal residual polynomials explicitly, both from the
closed-form recurrences and by direct weighted least squares over a
discretized spectral measure.  The explicit polynomials are only used to
cross-check the iterations; the solvers never materialize them.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .spectra import horner

__all__ = [
    "MPCoefficients",
    "ThreeTermRecurrence",
    "AveragingWeights",
    "ResidualPolynomial",
    "mp_coefficients",
    "polyak_coefficients",
    "disk_recurrence",
    "disk_weights",
    "optimal_polynomial_from_recurrence",
    "brute_force_optimal_polynomial",
    "mp_polynomials",
    "write_coefficients_csv",
]


@dataclass(frozen=True, eq=False)
class MPCoefficients:
    """Hamiltonian momentum coefficients for Marchenko-Pastur games.

    Arrays are indexed by ``t = 0..horizon``; the step from ``x_t`` to
    ``x_{t+1}`` uses ``h[t+1]`` and ``m[t+1]``.
    """

    sigma2: float
    r: float
    rho: float
    delta: np.ndarray
    h: np.ndarray
    m: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.delta) - 1


def mp_coefficients(sigma2: float, r: float, horizon: int) -> MPCoefficients:
    """``delta_t = 1 / (-rho - delta_{t-1})``, ``h_t = -delta_t / (sigma2 sqrt r)``,
    ``m_t = 1 + rho delta_t`` with ``rho = (1 + r) / sqrt r`` and ``delta_0 = 0``.

    The momentum enters as ``m_t (x_{t-1} - x_t)``.  Since ``m_t -> -r`` this is
    heavy ball with a positive momentum ``r`` in the limit.
    """
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    if r > 1:
        raise ValueError("r > 1: order the players so that d1 <= d2")
    if not r > 0:
        raise ValueError("r must be positive")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    sr = math.sqrt(r)
    rho = (1 + r) / sr
    delta = np.zeros(horizon + 1)
    for t in range(1, horizon + 1):
        delta[t] = 1.0 / (-rho - delta[t - 1])
    h = -delta / (sigma2 * sr) + 0.0
    m = 1 + rho * delta
    return MPCoefficients(float(sigma2), float(r), rho, delta, h, m)


def polyak_coefficients(edge_low: float, edge_high: float) -> tuple[float, float]:
    """Momentum ``((sqrt L - sqrt l)/(sqrt L + sqrt l))^2`` and step ``(2/(sqrt L + sqrt l))^2``.

    These are the limits of :func:`mp_coefficients` (``-m_t`` and ``h_t``) for
    the edges of the corresponding MP law.
    """
    if not 0 <= edge_low < edge_high:
        raise ValueError(f"need 0 <= edge_low < edge_high, got ({edge_low}, {edge_high})")
    sl, sL = math.sqrt(edge_low), math.sqrt(edge_high)
    return ((sL - sl) / (sL + sl)) ** 2, (2 / (sL + sl)) ** 2


@dataclass(frozen=True, eq=False)
class ThreeTermRecurrence:
    """``psi_t = (a_t + b_t lam) psi_{t-1} + (1 - a_t) psi_{t-2}``, ``psi_{-1} = psi_0 = 1``.

    ``psi_{-1} = 1`` matches the iteration's start ``y_{-1} = y_0`` and makes
    every ``psi_t`` residual whatever the coefficients.

    ``a[t]`` and ``b[t]`` are meaningful for ``t >= 1``; index 0 is padding.
    """

    a: np.ndarray
    b: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.a) - 1

    def residual_polynomials(self, t: int) -> list[np.ndarray]:
        if t > self.horizon:
            raise ValueError(f"degree {t} exceeds recurrence horizon {self.horizon}")
        prev, cur = np.ones(1), np.ones(1)
        out = [cur]
        for k in range(1, t + 1):
            nxt = np.zeros(k + 1)
            nxt[:k] += self.a[k] * cur
            nxt[1:] += self.b[k] * cur
            nxt[: len(prev)] += (1 - self.a[k]) * prev
            prev, cur = cur, nxt
            out.append(cur)
        return out


def disk_recurrence(center: float, horizon: int = 1000) -> ThreeTermRecurrence:
    """Residual orthogonal polynomials ``(1 - lam/C)^t`` of any circular measure."""
    if not center > 0:
        raise ValueError("center must be positive")
    a = np.ones(horizon + 1)
    b = np.full(horizon + 1, -1.0 / center)
    b[0] = 0.0
    return ThreeTermRecurrence(a, b)


@dataclass(frozen=True, eq=False)
class AveragingWeights:
    """Weights ``beta_t = phi_t(0)^2`` and partial sums ``B_t = sum_{k<t} beta_k``.

    Stored as ``log(beta_t)`` since ``beta_t`` grows geometrically; ``beta``
    and ``big_b`` may overflow to ``inf`` for long horizons, while
    :meth:`mix_fraction` and :meth:`log_big_b` stay finite.
    """

    log_beta: np.ndarray

    @classmethod
    def from_beta(cls, beta) -> "AveragingWeights":
        beta = np.asarray(beta, dtype=float)
        if np.any(beta <= 0):
            raise ValueError("averaging weights must be positive")
        return cls(np.log(beta))

    @property
    def horizon(self) -> int:
        return len(self.log_beta) - 1

    @property
    def beta(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_beta)

    @property
    def big_b(self) -> np.ndarray:
        """``B_0 .. B_{horizon+1}``."""
        with np.errstate(over="ignore"):
            return np.exp(self.log_big_b())

    def log_big_b(self) -> np.ndarray:
        out = np.full(len(self.log_beta) + 1, -np.inf)
        out[1:] = np.logaddexp.accumulate(self.log_beta)
        return out

    def mix_fraction(self) -> np.ndarray:
        """``beta_t / (B_t + beta_t)`` for ``t = 0..horizon`` (so entry 0 is 1)."""
        lb = self.log_big_b()[:-1]
        return np.exp(self.log_beta - np.logaddexp(lb, self.log_beta))


def disk_weights(center: float, radius: float, horizon: int) -> AveragingWeights:
    """``beta_t = C^{2t} / K_{t,R}^2 = (C/R)^{2t} (t + 1)`` for the uniform disk."""
    if not (center > 0 and radius > 0):
        raise ValueError("center and radius must be positive")
    if not radius < center:
        raise ValueError(f"radius must be below center (R={radius}, C={center})")
    t = np.arange(horizon + 1)
    return AveragingWeights(2 * t * math.log(center / radius) + np.log1p(t))


@dataclass(frozen=True, eq=False)
class ResidualPolynomial:
    """Monomial coefficients ``c_0..c_t`` with ``c_0 = 1``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0 or c[0] != 1.0:
            raise ValueError("residual polynomial needs c_0 = 1")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, z):
        return horner(self.coeffs, z)

    def of_matrix(self, A: np.ndarray, v: np.ndarray) -> np.ndarray:
        """``P(A) v`` by Horner's rule on vectors."""
        out = np.zeros_like(v, dtype=float)
        for c in self.coeffs[::-1]:
            out = A @ out + c * v
        return out


def optimal_polynomial_from_recurrence(
    rec: ThreeTermRecurrence, weights: AveragingWeights, t: int
) -> ResidualPolynomial:
    """``P*_t = sum_k beta_k psi_k / sum_k beta_k`` over ``k <= t``."""
    if t > min(rec.horizon, weights.horizon):
        raise ValueError(f"degree {t} exceeds the coefficient horizon")
    psis = rec.residual_polynomials(t)
    lb = weights.log_beta[: t + 1]
    w = np.exp(lb - lb.max())
    w /= w.sum()
    coeffs = np.zeros(t + 1)
    for wk, psi in zip(w, psis):
        coeffs[: len(psi)] += wk * psi
    coeffs[0] = 1.0
    return ResidualPolynomial(coeffs)


def brute_force_optimal_polynomial(samples, t: int) -> ResidualPolynomial:
    """Minimize ``sum_i w_i |P(lam_i)|^2`` over real residual polynomials of degree <= t.

    ``samples`` is either a ``(nodes, weights)`` pair of arrays or a sequence
    of ``(node, weight)`` pairs.  The constraint ``P(0) = 1`` is eliminated by
    fixing ``c_0 = 1``; real and imaginary parts are stacked as separate rows.
    """
    if isinstance(samples, tuple) and len(samples) == 2 and np.ndim(samples[0]) == 1:
        nodes, weights = samples
    else:
        pairs = list(samples)
        nodes = [p for p, _ in pairs]
        weights = [w for _, w in pairs]
    nodes = np.asarray(nodes, dtype=complex)
    weights = np.asarray(weights, dtype=float)
    if t == 0:
        return ResidualPolynomial(np.ones(1))
    sw = np.sqrt(weights)
    V = nodes[:, None] ** np.arange(1, t + 1)[None, :] * sw[:, None]
    M = np.vstack([V.real, V.imag])
    rhs = -np.concatenate([sw, np.zeros_like(sw)])
    scale = np.linalg.norm(M, axis=0)
    if np.any(scale == 0):
        raise np.linalg.LinAlgError("Vandermonde system is rank deficient")
    Ms = M / scale
    sol, _, rank, sv = np.linalg.lstsq(Ms, rhs, rcond=None)
    if rank < t or sv[-1] <= 1e-13 * sv[0]:
        raise np.linalg.LinAlgError(
            f"Vandermonde system is rank deficient (rank {rank} < {t})"
        )
    return ResidualPolynomial(np.concatenate([[1.0], sol / scale]))


def mp_polynomials(coeffs: MPCoefficients, s: int) -> list[np.ndarray]:
    """Residual polynomials ``Q_0..Q_s`` in the Hamiltonian-spectrum variable.

    ``Q_k = Q_{k-1} - h_k lam Q_{k-1} + m_k (Q_{k-2} - Q_{k-1})`` with
    ``Q_{-1} = Q_0 = 1``, mirroring the bilinear iteration on ``A^T A``.
    """
    if s > coeffs.horizon:
        raise ValueError("degree exceeds coefficient horizon")
    prev, cur = np.ones(1), np.ones(1)
    out = [cur]
    for k in range(1, s + 1):
        nxt = np.zeros(k + 1)
        nxt[:k] += cur
        nxt[1:] -= coeffs.h[k] * cur
        nxt[: len(prev)] += coeffs.m[k] * prev
        nxt[:k] -= coeffs.m[k] * cur
        prev, cur = cur, nxt
        out.append(cur)
    return out


def write_coefficients_csv(table, path, rec: ThreeTermRecurrence | None = None) -> None:
    """Dump a coefficient table as CSV.

    ``MPCoefficients`` gives columns ``t,delta,h,m``; ``AveragingWeights``
    (with the matching ``rec``) gives ``t,a,b,beta,big_b``.
    """
    fmt = lambda x: format(float(x), ".17g")  # noqa: E731
    close = False
    if hasattr(path, "write"):
        fh = path
    else:
        fh = open(path, "w", newline="")
        close = True
    try:
        w = csv.writer(fh, lineterminator="\n")
        if isinstance(table, MPCoefficients):
            w.writerow(["t", "delta", "h", "m"])
            for t in range(table.horizon + 1):
                w.writerow([t, fmt(table.delta[t]), fmt(table.h[t]), fmt(table.m[t])])
        elif isinstance(table, AveragingWeights):
            if rec is None:
                raise ValueError("averaging weights need the matching recurrence")
            beta, big_b = table.beta, table.big_b
            w.writerow(["t", "a", "b", "beta", "big_b"])
            for t in range(table.horizon + 1):
                a = fmt(rec.a[t]) if t else ""
                b = fmt(rec.b[t]) if t else ""
                w.writerow([t, a, b, fmt(beta[t]), fmt(big_b[t])])
        else:
            raise TypeError(f"cannot export {type(table).__name__}")
    finally:
        if close:
            fh.close()
