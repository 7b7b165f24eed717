"""Iterative methods for ``F(x) = A (x - x_star) = 0`` with distance tracking.

All runners return a :class:`Trajectory` whose ``dist[t]`` is the squared
distance of the t-th (outer) iterate to the solution set and whose
``field_evals[t]`` counts operator evaluations spent to reach it.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field
from typing import Any

import numpy as np

from .problem import ProblemInstance, distance_to_solution, field, hamiltonian_field
from .recurrence import (
    AveragingWeights,
    MPCoefficients,
    ThreeTermRecurrence,
    disk_recurrence,
    disk_weights,
    polyak_coefficients,
)

__all__ = [
    "Variant",
    "MethodSpec",
    "Trajectory",
    "DIVERGENCE_FACTOR",
    "run_avg_opt_bilinear",
    "run_asymp_bilinear",
    "run_generic_avg_opt",
    "run_asymp_disk",
    "run_gradient_descent",
    "run_extragradient",
    "run_method",
]

DIVERGENCE_FACTOR = 1e12


class Variant(str, enum.Enum):
    AVG_OPT_BILINEAR = "avg_opt_bilinear"
    ASYMP_BILINEAR = "asymp_bilinear"
    AVG_OPT_GENERIC = "avg_opt_generic"
    ASYMP_DISK = "asymp_disk"
    GRADIENT_DESCENT = "gd"
    EXTRAGRADIENT = "extragradient"


@dataclass(frozen=True)
class MethodSpec:
    """A method variant plus its parameters.

    ``params`` by variant: ``coeffs`` (MPCoefficients); ``edge_low``/``edge_high``;
    ``rec``/``weights``; ``center``/``radius``; ``step`` (plus optional
    ``hamiltonian`` for gradient descent); ``step``.
    """

    variant: Variant
    params: dict[str, Any] = dc_field(default_factory=dict, hash=False)
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        step = self.params.get("step")
        if step is not None and not (math.isfinite(step) and step > 0):
            raise ValueError(f"step size must be finite and positive, got {step}")

    @property
    def label(self) -> str:
        return self.name or self.variant.value


@dataclass(eq=False)
class Trajectory:
    method: str
    dist: np.ndarray
    field_evals: np.ndarray
    diverged: bool = False
    iterates: np.ndarray | None = None
    inner_dist: np.ndarray | None = None

    @property
    def iters(self) -> int:
        return len(self.dist) - 1


class _Recorder:
    def __init__(self, instance, method, T, evals_per_iter, keep_iterates, inner=False):
        self.instance = instance
        self.method = method
        self.evals_per_iter = evals_per_iter
        self.dist = []
        self.inner = [] if inner else None
        self.iterates = [] if keep_iterates else None
        self.diverged = False
        self.limit = None

    def push(self, x, y=None) -> bool:
        """Record an iterate; returns False once the run must stop."""
        d = distance_to_solution(self.instance, x)
        if self.limit is None:
            self.limit = DIVERGENCE_FACTOR * d if d > 0 else math.inf
        if not math.isfinite(d) or d > self.limit:
            self.diverged = True
            return False
        self.dist.append(d)
        if self.inner is not None:
            self.inner.append(distance_to_solution(self.instance, y))
        if self.iterates is not None:
            self.iterates.append(np.array(x))
        return True

    def result(self) -> Trajectory:
        n = len(self.dist)
        return Trajectory(
            self.method,
            np.asarray(self.dist),
            np.arange(n) * self.evals_per_iter,
            self.diverged,
            np.asarray(self.iterates) if self.iterates is not None else None,
            np.asarray(self.inner) if self.inner is not None else None,
        )


def _check_iters(T):
    if T < 0 or int(T) != T:
        raise ValueError(f"iteration count must be a nonnegative integer, got {T}")
    return int(T)


def _momentum_loop(instance, rec, T, step, momentum):
    # x_{t+1} = x_t - step(t+1) g_t + momentum(t+1) (x_{t-1} - x_t), x_{-1} = x_0
    x_prev = x = np.array(instance.x0, dtype=float)
    if not rec.push(x):
        return rec.result()
    for t in range(T):
        g = hamiltonian_field(instance, x)
        x_prev, x = x, x - step(t + 1) * g + momentum(t + 1) * (x_prev - x)
        if not rec.push(x):
            break
    return rec.result()


def run_avg_opt_bilinear(
    instance: ProblemInstance, coeffs: MPCoefficients, T: int, *, keep_iterates=False
) -> Trajectory:
    """Hamiltonian gradient descent with the average-case optimal momentum schedule."""
    T = _check_iters(T)
    if not instance.is_skew():
        raise ValueError("average-case bilinear method needs a skew-symmetric operator")
    if coeffs.horizon < T:
        raise ValueError(f"coefficient horizon {coeffs.horizon} < {T} iterations")
    rec = _Recorder(instance, Variant.AVG_OPT_BILINEAR.value, T, 2, keep_iterates)
    return _momentum_loop(instance, rec, T, lambda t: coeffs.h[t], lambda t: coeffs.m[t])


def run_asymp_bilinear(
    instance: ProblemInstance, edge_low: float, edge_high: float, T: int, *, keep_iterates=False
) -> Trajectory:
    """Constant-coefficient limit: Polyak heavy ball on the Hamiltonian.

    ``x_{t+1} = x_t - h g_t + m (x_t - x_{t-1})`` with the momentum ``m`` and
    step ``h`` of :func:`~avgcase.recurrence.polyak_coefficients`.
    """
    T = _check_iters(T)
    momentum, step = polyak_coefficients(edge_low, edge_high)
    rec = _Recorder(instance, Variant.ASYMP_BILINEAR.value, T, 2, keep_iterates)
    return _momentum_loop(instance, rec, T, lambda t: step, lambda t: -momentum)


def run_generic_avg_opt(
    instance: ProblemInstance,
    rec: ThreeTermRecurrence,
    weights: AveragingWeights,
    T: int,
    *,
    keep_iterates=False,
) -> Trajectory:
    """Running weighted average of a three-term residual recurrence.

    ``y_t = a_t y_{t-1} + (1 - a_t) y_{t-2} + b_t F(y_{t-1})`` and
    ``x_t = (B_t x_{t-1} + beta_t y_t) / (B_t + beta_t)``.  ``inner_dist``
    holds the distances of the ``y_t``.
    """
    T = _check_iters(T)
    if min(rec.horizon, weights.horizon) < T:
        raise ValueError("recurrence or weight horizon shorter than the iteration count")
    frac = weights.mix_fraction()
    if not np.all(np.isfinite(frac)) or np.any(frac[: T + 1] <= 0):
        raise ValueError("averaging weights must be positive")
    out = _Recorder(instance, Variant.AVG_OPT_GENERIC.value, T, 1, keep_iterates, inner=True)
    y_prev = y = x = np.array(instance.x0, dtype=float)
    if not out.push(x, y):
        return out.result()
    for t in range(1, T + 1):
        a, b = rec.a[t], rec.b[t]
        y_prev, y = y, a * y + (1 - a) * y_prev + b * field(instance, y)
        w = frac[t]
        x = x + w * (y - x)
        if not out.push(x, y):
            break
    return out.result()


def run_asymp_disk(
    instance: ProblemInstance, center: float, radius: float, T: int, *, keep_iterates=False
) -> Trajectory:
    """Gradient descent with step ``1/C`` averaged with constant weight ``1 - (R/C)^2``."""
    T = _check_iters(T)
    if not (0 < radius < center):
        raise ValueError(f"need 0 < R < C, got R={radius}, C={center}")
    q = (radius / center) ** 2
    out = _Recorder(instance, Variant.ASYMP_DISK.value, T, 1, keep_iterates, inner=True)
    y = x = np.array(instance.x0, dtype=float)
    if not out.push(x, y):
        return out.result()
    for _ in range(T):
        y = y - field(instance, y) / center
        x = x + (1 - q) * (y - x)
        if not out.push(x, y):
            break
    return out.result()


def run_gradient_descent(
    instance: ProblemInstance,
    step: float,
    T: int,
    *,
    hamiltonian: bool | None = None,
    keep_iterates=False,
) -> Trajectory:
    """``x_{t+1} = x_t - step * F(x_t)``.

    On skew-symmetric operators the plain field never decreases the distance,
    so by default (``hamiltonian=None``) such instances descend the Hamiltonian
    gradient instead, at two field evaluations per step.
    """
    T = _check_iters(T)
    if not (math.isfinite(step) and step > 0):
        raise ValueError("step must be finite and positive")
    if hamiltonian is None:
        hamiltonian = instance.is_skew()
    direction = hamiltonian_field if hamiltonian else field
    out = _Recorder(instance, Variant.GRADIENT_DESCENT.value, T, 2 if hamiltonian else 1,
                    keep_iterates)
    x = np.array(instance.x0, dtype=float)
    if not out.push(x):
        return out.result()
    for _ in range(T):
        x = x - step * direction(instance, x)
        if not out.push(x):
            break
    return out.result()


def run_extragradient(
    instance: ProblemInstance, step: float, T: int, *, keep_iterates=False
) -> Trajectory:
    """``x_{t+1} = x_t - step * F(x_t - step * F(x_t))``."""
    T = _check_iters(T)
    if not (math.isfinite(step) and step > 0):
        raise ValueError("step must be finite and positive")
    out = _Recorder(instance, Variant.EXTRAGRADIENT.value, T, 2, keep_iterates)
    x = np.array(instance.x0, dtype=float)
    if not out.push(x):
        return out.result()
    for _ in range(T):
        x_half = x - step * field(instance, x)
        x = x - step * field(instance, x_half)
        if not out.push(x):
            break
    return out.result()


def run_method(instance: ProblemInstance, spec: MethodSpec, T: int) -> Trajectory:
    """Dispatch on ``spec.variant``; the trajectory is labelled with ``spec.label``."""
    p = spec.params
    v = spec.variant
    if v is Variant.AVG_OPT_BILINEAR:
        traj = run_avg_opt_bilinear(instance, p["coeffs"], T)
    elif v is Variant.ASYMP_BILINEAR:
        traj = run_asymp_bilinear(instance, p["edge_low"], p["edge_high"], T)
    elif v is Variant.AVG_OPT_GENERIC:
        if "rec" in p:
            rec, weights = p["rec"], p["weights"]
        else:
            rec = disk_recurrence(p["center"], T)
            weights = disk_weights(p["center"], p["radius"], T)
        traj = run_generic_avg_opt(instance, rec, weights, T)
    elif v is Variant.ASYMP_DISK:
        traj = run_asymp_disk(instance, p["center"], p["radius"], T)
    elif v is Variant.GRADIENT_DESCENT:
        traj = run_gradient_descent(instance, p["step"], T, hamiltonian=p.get("hamiltonian"))
    elif v is Variant.EXTRAGRADIENT:
        traj = run_extragradient(instance, p["step"], T)
    else:  # pragma: no cover
        raise ValueError(f"unknown variant {v}")
    traj.method = spec.label
    return traj
