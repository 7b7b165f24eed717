"""Closed-form spectral models and the expected-error integral.

The expected squared distance of a first-order method with residual
polynomial ``P`` is ``init_scale**2 * integral |P|^2 dmu`` over the nonzero
spectrum.  This module evaluates that integral for the Marchenko-Pastur law
(optionally pushed onto the imaginary axis, as for bilinear games) and for
the uniform disk.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.optimize import linear_sum_assignment

__all__ = [
    "MarchenkoPastur",
    "DiskDistribution",
    "EmpiricalSpectrum",
    "mp_edges",
    "mp_density",
    "pushforward_bilinear",
    "disk_moment",
    "horner",
    "mp_quadrature",
    "bilinear_quadrature",
    "disk_quadrature",
    "expected_error_quadrature",
    "match_spectra",
]


def mp_edges(sigma2: float, r: float) -> tuple[float, float]:
    """Support ``(sigma2 (1 - sqrt r)^2, sigma2 (1 + sqrt r)^2)`` of the MP law."""
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    if not 0 < r <= 1:
        raise ValueError(f"ratio r must lie in (0, 1], got {r}")
    s = math.sqrt(r)
    return sigma2 * (1 - s) ** 2, sigma2 * (1 + s) ** 2


@dataclass(frozen=True)
class MarchenkoPastur:
    sigma2: float
    r: float

    def __post_init__(self):
        mp_edges(self.sigma2, self.r)

    @property
    def edge_low(self) -> float:
        return mp_edges(self.sigma2, self.r)[0]

    @property
    def edge_high(self) -> float:
        return mp_edges(self.sigma2, self.r)[1]


class RadialLaw(str, enum.Enum):
    UNIFORM_DISK = "uniform"


@dataclass(frozen=True)
class DiskDistribution:
    """Uniform distribution on the disk of center ``C`` and radius ``R < C``.

    The radial law is ``dmu_R(r) = 2 r / R^2 dr`` on ``[0, R]``.
    """

    center: float
    radius: float
    radial_law: RadialLaw = RadialLaw.UNIFORM_DISK

    def __post_init__(self):
        if not (self.center > 0 and self.radius > 0):
            raise ValueError("center and radius must be positive")
        if not self.radius < self.center:
            raise ValueError(f"radius must be below center (R={self.radius}, C={self.center})")
        object.__setattr__(self, "radial_law", RadialLaw(self.radial_law))


@dataclass(frozen=True, eq=False)
class EmpiricalSpectrum:
    eigenvalues: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        n = len(self.eigenvalues)
        return np.full(n, 1.0 / n)

    @classmethod
    def of_matrix(cls, A) -> "EmpiricalSpectrum":
        return cls(np.linalg.eigvals(np.asarray(A)))

    def is_conjugate_closed(self, tol: float = 1e-8) -> bool:
        return match_spectra(self.eigenvalues, self.eigenvalues.conj()) <= tol


def match_spectra(a, b) -> float:
    """Largest distance between two multisets under the optimal pairing."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("spectra have different sizes")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max()) if a.size else 0.0


def mp_density(model: MarchenkoPastur, lam):
    """Marchenko-Pastur density; zero outside the open support ``(l, L)``."""
    lam = np.asarray(lam, dtype=float)
    lo, hi = model.edge_low, model.edge_high
    inside = (lam > lo) & (lam < hi) & (lam > 0)
    safe = np.where(inside, lam, 1.0)
    val = np.sqrt(np.clip((hi - safe) * (safe - lo), 0.0, None)) / (
        2 * np.pi * model.sigma2 * model.r * safe
    )
    out = np.where(inside, val, 0.0)
    return out if out.ndim else float(out)


def _mp_u_weight(model: MarchenkoPastur, u):
    # lam = l + (L - l) sin^2 u maps [0, pi/2] onto [l, L]; the density times
    # the Jacobian is smooth in u, including the r = 1 origin singularity.
    lo, hi = model.edge_low, model.edge_high
    s, c = np.sin(u), np.cos(u)
    lam = lo + (hi - lo) * s**2
    w = (hi - lo) ** 2 * 2 * s**2 * c**2 / (2 * np.pi * model.sigma2 * model.r * lam)
    return lam, w


def pushforward_bilinear(mmT_eigenvalues, d1: int, d2: int) -> EmpiricalSpectrum:
    """Predicted spectrum ``{+-i sqrt(lam_j)} + {0}*(d2 - d1)`` of the game matrix."""
    lam = np.asarray(mmT_eigenvalues, dtype=float)
    if d1 < 1 or d2 < 1:
        raise ValueError("d1 and d2 must be positive")
    if d1 > d2:
        raise ValueError("d1 > d2: swap the players so that d1 <= d2")
    if lam.shape != (d1,):
        raise ValueError(f"expected {d1} eigenvalues of M M^T, got {lam.shape}")
    if np.any(lam < 0):
        raise ValueError("eigenvalues of M M^T must be nonnegative")
    root = np.sqrt(lam)
    eig = np.concatenate([1j * root, -1j * root, np.zeros(d2 - d1, dtype=complex)])
    return EmpiricalSpectrum(eig)


def disk_moment(dist: DiskDistribution, t: int) -> float:
    """``K_{t,R} = sqrt(int r^{2t} dmu_R)``; equals ``R^t / sqrt(t + 1)`` here."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return dist.radius**t / math.sqrt(t + 1)


def horner(coeffs, z):
    """Evaluate ``sum_k coeffs[k] z^k`` at real or complex ``z``."""
    z = np.asarray(z)
    out = np.zeros(z.shape, dtype=np.result_type(z, float))
    for c in np.asarray(coeffs)[::-1]:
        out = out * z + c
    return out


def mp_quadrature(model: MarchenkoPastur, n: int = 400):
    """Gauss nodes and weights for the MP law (weights sum to one)."""
    u, w = np.polynomial.legendre.leggauss(n)
    u = (u + 1) * np.pi / 4
    lam, dens = _mp_u_weight(model, u)
    return lam, w * np.pi / 4 * dens


def bilinear_quadrature(model: MarchenkoPastur, n: int = 400):
    """Nodes on the imaginary axis for the game-matrix spectrum, zero atom dropped.

    Each MP node ``lam`` contributes ``+- i sqrt(lam)`` with weight
    ``r / (1 + r)`` times its MP weight, so the total mass is ``2r/(1+r)``.
    """
    lam, w = mp_quadrature(model, n)
    root = np.sqrt(lam)
    frac = model.r / (1 + model.r)
    nodes = np.concatenate([1j * root, -1j * root])
    return nodes, np.concatenate([w, w]) * frac


def disk_quadrature(dist: DiskDistribution, n_radial: int = 64, n_angle: int = 64):
    """Polar product rule for the uniform disk (weights sum to one).

    Exact for ``|P|^2`` whenever ``deg P < min(n_radial, n_angle)``.
    """
    x, w = np.polynomial.legendre.leggauss(n_radial)
    rad = (x + 1) * dist.radius / 2
    # dmu_R(r) = 2 r / R^2 dr on [0, R]
    wr = w * dist.radius / 2 * 2 * rad / dist.radius**2
    theta = 2 * np.pi * np.arange(n_angle) / n_angle
    nodes = dist.center + rad[:, None] * np.exp(1j * theta)[None, :]
    weights = wr[:, None] * np.full(n_angle, 1.0 / n_angle)[None, :]
    return nodes.ravel(), weights.ravel()


def expected_error_quadrature(
    residual_poly, model, init_scale: float = 1.0, bilinear: bool = False
) -> float:
    """``init_scale^2 * integral |P|^2 dmu`` for MP (optionally bilinear) or disk models.

    ``residual_poly`` is a sequence of monomial coefficients (or anything with
    a ``coeffs`` attribute) satisfying ``P(0) = 1``.
    """
    coeffs = np.asarray(getattr(residual_poly, "coeffs", residual_poly), dtype=float)
    if coeffs.size == 0 or abs(coeffs[0] - 1.0) > 1e-12:
        raise ValueError("residual polynomial must satisfy P(0) = 1")
    scale = init_scale**2
    if isinstance(model, MarchenkoPastur):
        frac = model.r / (1 + model.r)

        def integrand(u):
            lam, w = _mp_u_weight(model, u)
            if bilinear:
                z = 1j * math.sqrt(lam)
                val = frac * (abs(horner(coeffs, z)) ** 2 + abs(horner(coeffs, -z)) ** 2)
            else:
                val = horner(coeffs, lam) ** 2
            return float(val * w)

        # Split by the degree so the oscillatory integrand stays well resolved.
        pieces = max(1, coeffs.size // 4)
        edges = np.linspace(0.0, np.pi / 2, pieces + 1)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=1e-11, limit=200)
            total += val
        return scale * total
    if isinstance(model, DiskDistribution):
        if bilinear:
            raise ValueError("bilinear weighting only applies to the MP model")
        n = max(64, coeffs.size + 1)
        nodes, w = disk_quadrature(model, n, n)
        return scale * float(np.sum(w * np.abs(horner(coeffs, nodes)) ** 2))
    raise TypeError(f"unsupported spectral model {type(model).__name__}")
