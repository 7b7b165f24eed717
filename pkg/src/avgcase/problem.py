"""Random affine root-finding problems ``F(x) = A (x - x_star)``.

Two ensembles are provided: zero-sum bilinear games, whose operator is the
skew-symmetric block embedding of a Gaussian payoff matrix, and disk
ensembles whose eigenvalues fill the disk of center ``C`` and radius ``R``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.stats import ortho_group

__all__ = [
    "ProblemInstance",
    "BilinearGameSpec",
    "DiskMode",
    "DiskEnsembleSpec",
    "kernel_projector",
    "make_instance",
    "make_bilinear_instance",
    "make_disk_instance",
    "field",
    "hamiltonian_field",
    "hamiltonian_value",
    "distance_to_solution",
]

KERNEL_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A concrete problem: operator matrix, solution, start and kernel projector.

    ``eigenvalues`` is only set when the spectrum was prescribed at
    construction (disk ensemble in normal mode).
    """

    matrix: np.ndarray
    x_star: np.ndarray
    x0: np.ndarray
    kernel_projector: np.ndarray
    init_scale: float = 1.0
    eigenvalues: np.ndarray | None = dc_field(default=None, repr=False)

    def __post_init__(self):
        d = self.matrix.shape[0]
        if self.matrix.shape != (d, d):
            raise ValueError(f"matrix must be square, got {self.matrix.shape}")
        for name in ("x_star", "x0"):
            if getattr(self, name).shape != (d,):
                raise ValueError(f"{name} must have shape ({d},)")
        if self.kernel_projector.shape != (d, d):
            raise ValueError("kernel_projector must match matrix shape")
        if not self.init_scale > 0:
            raise ValueError("init_scale must be positive")
        for arr in (self.matrix, self.x_star, self.x0, self.kernel_projector):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_skew(self, tol: float = 1e-12) -> bool:
        A = self.matrix
        scale = max(1.0, np.abs(A).max())
        return bool(np.abs(A + A.T).max() <= tol * scale)

    def shifted(self, c: np.ndarray) -> "ProblemInstance":
        """Same operator with solution and start translated by ``c``."""
        return ProblemInstance(
            self.matrix, self.x_star + c, self.x0 + c, self.kernel_projector,
            self.init_scale, self.eigenvalues,
        )


@dataclass(frozen=True)
class BilinearGameSpec:
    d1: int
    d2: int
    sigma2: float = 1.0
    init_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if int(self.d1) < 1 or int(self.d2) < 1:
            raise ValueError(f"d1 and d2 must be >= 1, got ({self.d1}, {self.d2})")
        if not np.isfinite(self.sigma2) or self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be finite and positive, got {self.sigma2}")
        if not np.isfinite(self.init_scale) or self.init_scale <= 0:
            raise ValueError("init_scale must be finite and positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def ratio(self) -> float:
        return self.d1 / self.d2


class DiskMode(str, enum.Enum):
    NORMAL_PRESCRIBED = "normal"
    IID_GAUSSIAN = "iid"


@dataclass(frozen=True)
class DiskEnsembleSpec:
    d: int
    center: float = 2.0
    radius: float = 1.0
    mode: DiskMode = DiskMode.NORMAL_PRESCRIBED
    init_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", DiskMode(self.mode))
        if int(self.d) < 2 or int(self.d) % 2:
            raise ValueError(f"d must be an even positive integer, got {self.d}")
        if not (self.center > 0 and self.radius > 0):
            raise ValueError("center and radius must be positive")
        if not self.radius < self.center:
            raise ValueError(
                f"radius must be strictly below center (R={self.radius}, C={self.center})"
            )
        if not np.isfinite(self.init_scale) or self.init_scale <= 0:
            raise ValueError("init_scale must be finite and positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def kernel_projector(A: np.ndarray, rtol: float = KERNEL_RTOL) -> np.ndarray:
    """Orthogonal projector onto ``ker(A)`` from the right singular vectors."""
    _, s, vt = np.linalg.svd(A)
    smax = s[0] if s.size else 0.0
    null = vt[s <= rtol * smax] if smax > 0 else vt
    return null.T @ null


def _draw_solution_and_start(rng, d, init_scale):
    x_star = rng.standard_normal(d)
    x0 = x_star + init_scale / np.sqrt(d) * rng.standard_normal(d)
    return x_star, x0


def make_bilinear_instance(spec: BilinearGameSpec) -> ProblemInstance:
    """Bilinear game ``A = [[0, M], [-M^T, 0]]`` with Gaussian ``M``.

    Entries of ``M`` have variance ``sigma2 / d2`` so that ``M M^T`` itself
    follows the Marchenko-Pastur law with parameters ``(sigma2, d1/d2)``.
    """
    d1, d2 = int(spec.d1), int(spec.d2)
    rng = np.random.default_rng(int(spec.seed))
    M = rng.standard_normal((d1, d2)) * np.sqrt(spec.sigma2 / d2)
    d = d1 + d2
    A = np.zeros((d, d))
    A[:d1, d1:] = M
    A[d1:, :d1] = -M.T
    x_star, x0 = _draw_solution_and_start(rng, d, spec.init_scale)
    return ProblemInstance(A, x_star, x0, kernel_projector(A), float(spec.init_scale))


def _uniform_upper_half_disk(rng, n, center, radius):
    rad = radius * np.sqrt(rng.uniform(size=n))
    theta = np.pi * rng.uniform(size=n)
    return center + rad * np.exp(1j * theta)


def make_disk_instance(spec: DiskEnsembleSpec) -> ProblemInstance:
    """Operator whose spectrum (approximately) fills the disk ``D(C, R)``.

    ``NORMAL_PRESCRIBED`` builds a real normal matrix from ``d/2`` conjugate
    pairs drawn uniformly on the disk; ``IID_GAUSSIAN`` is the circular-law
    matrix ``C I + R/sqrt(d) G``, which is not normal.
    """
    d = int(spec.d)
    rng = np.random.default_rng(int(spec.seed))
    eigs = None
    if spec.mode is DiskMode.NORMAL_PRESCRIBED:
        lam = _uniform_upper_half_disk(rng, d // 2, spec.center, spec.radius)
        blocks = np.zeros((d, d))
        for k, z in enumerate(lam):
            i = 2 * k
            blocks[i:i + 2, i:i + 2] = [[z.real, z.imag], [-z.imag, z.real]]
        Q = ortho_group.rvs(d, random_state=rng)
        A = Q @ blocks @ Q.T
        eigs = np.concatenate([lam, lam.conj()])
    else:
        A = spec.center * np.eye(d) + spec.radius / np.sqrt(d) * rng.standard_normal((d, d))
    x_star, x0 = _draw_solution_and_start(rng, d, spec.init_scale)
    return ProblemInstance(
        A, x_star, x0, kernel_projector(A), float(spec.init_scale), eigenvalues=eigs
    )


def make_instance(spec) -> ProblemInstance:
    if isinstance(spec, BilinearGameSpec):
        return make_bilinear_instance(spec)
    if isinstance(spec, DiskEnsembleSpec):
        return make_disk_instance(spec)
    raise TypeError(f"unsupported ensemble spec {type(spec).__name__}")


def _check(instance: ProblemInstance, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.dim,):
        raise ValueError(f"expected vector of length {instance.dim}, got shape {x.shape}")
    return x


def field(instance: ProblemInstance, x) -> np.ndarray:
    """The operator ``F(x) = A (x - x_star)``."""
    x = _check(instance, x)
    return instance.matrix @ (x - instance.x_star)


def hamiltonian_field(instance: ProblemInstance, x) -> np.ndarray:
    """Gradient of ``1/2 |F(x)|^2`` from two field evaluations.

    Uses ``F(x - F(x)) - F(x)``, which equals ``A^T A (x - x_star)`` whenever
    ``A`` is skew-symmetric.
    """
    fx = field(instance, x)
    return field(instance, x - fx) - fx


def hamiltonian_value(instance: ProblemInstance, x) -> float:
    fx = field(instance, x)
    return 0.5 * float(fx @ fx)


def distance_to_solution(instance: ProblemInstance, x) -> float:
    """Squared distance from ``x`` to the solution set ``x_star + ker(A)``."""
    e = _check(instance, x) - instance.x_star
    r = e - instance.kernel_projector @ e
    return float(r @ r)
