"""Stationary kernels with unit variance and their Gram matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from kermab.errors import ConfigError, InputError

SQUARED_EXPONENTIAL = "se"
MATERN = "matern"
FAMILIES = (SQUARED_EXPONENTIAL, MATERN)
MATERN_NUS = (0.5, 1.5, 2.5)

_FAMILY_ALIASES = {
    "se": SQUARED_EXPONENTIAL,
    "rbf": SQUARED_EXPONENTIAL,
    "squared_exponential": SQUARED_EXPONENTIAL,
    "squaredexponential": SQUARED_EXPONENTIAL,
    "matern": MATERN,
}


def canonical_family(name: str) -> str:
    try:
        return _FAMILY_ALIASES[name.strip().lower()]
    except KeyError:
        raise ConfigError(f"unknown kernel family {name!r}; expected one of {FAMILIES}") from None


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and hyperparameters.

    The variance is fixed at 1 so that ``k(x, x) == 1`` everywhere.
    ``nu`` is only read for the Matern family.
    """

    family: str = SQUARED_EXPONENTIAL
    lengthscale: float = 0.1
    nu: float = 2.5

    def __post_init__(self):
        object.__setattr__(self, "family", canonical_family(self.family))
        if not (self.lengthscale > 0 and math.isfinite(self.lengthscale)):
            raise ConfigError(f"lengthscale must be positive, got {self.lengthscale}")
        if self.family == MATERN and float(self.nu) not in MATERN_NUS:
            raise ConfigError(f"unsupported Matern nu={self.nu}; supported: {MATERN_NUS}")

    @property
    def variance(self) -> float:
        return 1.0

    def from_sqdist(self, sqdist):
        """Kernel value as a function of squared Euclidean distance (elementwise)."""
        sqdist = np.asarray(sqdist, dtype=float)
        if self.family == SQUARED_EXPONENTIAL:
            return np.exp(-0.5 * sqdist / self.lengthscale**2)
        r = np.sqrt(sqdist) / self.lengthscale
        if self.nu == 0.5:
            return np.exp(-r)
        if self.nu == 1.5:
            s = math.sqrt(3.0) * r
            return (1.0 + s) * np.exp(-s)
        s = math.sqrt(5.0) * r
        return (1.0 + s + s * s / 3.0) * np.exp(-s)


def as_points(points) -> np.ndarray:
    """Coerce a point sequence to a float array of shape (n, d).

    A flat sequence of scalars is read as n one-dimensional points.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr[:, None]
    elif arr.ndim != 2:
        raise InputError(f"points must be 1-d or 2-d, got shape {arr.shape}")
    return arr


def as_point(x) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise InputError(f"a point must be a scalar or 1-d vector, got shape {arr.shape}")
    return arr


def eval_kernel(spec: KernelSpec, x, x_prime) -> float:
    a, b = as_point(x), as_point(x_prime)
    if a.shape != b.shape:
        raise InputError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    diff = a - b
    return float(spec.from_sqdist(np.dot(diff, diff)))


def sq_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] != b.shape[1]:
        raise InputError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    # explicit differences (not the |a|^2 - 2ab + |b|^2 expansion) keep the result exactly symmetric
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def cross_kernel(spec: KernelSpec, a, b) -> np.ndarray:
    """Matrix of k(a_i, b_j)."""
    return spec.from_sqdist(sq_distances(as_points(a), as_points(b)))


def gram_matrix(spec: KernelSpec, points) -> np.ndarray:
    pts = as_points(points)
    if pts.shape[0] == 0:
        raise InputError("gram_matrix needs at least one point")
    return cross_kernel(spec, pts, pts)
