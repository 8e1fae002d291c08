"""Gaussian-process posterior with incremental (bordered) Cholesky updates.

A :class:`GpState` holds the history of one agent and the lower Cholesky
factor ``L`` of ``K_t + lam*I``.  Each observation appends one row to ``L``
in O(t^2) (or O(t*m) on a tracked grid) instead of refactorizing.

When a grid of anchor points is supplied, the state also keeps
``V = L^{-1} k_t(grid)`` row by row, which turns the full-grid posterior
into an O(m) read and lets grid observations skip the triangular solve.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import cho_factor, solve_triangular

from kermab.errors import InputError, NumericalError
from kermab.kernel import MATERN, SQUARED_EXPONENTIAL, KernelSpec, as_point, as_points, canonical_family, cross_kernel

# below this the variance is treated as rounding noise
_NEG_VAR_TOL = 1e-10


def _grow(arr: np.ndarray, rows: int, square: bool = False) -> np.ndarray:
    shape = (rows, rows) if square else (rows,) + arr.shape[1:]
    out = np.zeros(shape, dtype=arr.dtype)
    if square:
        n = arr.shape[0]
        out[:n, :n] = arr
    else:
        out[: arr.shape[0]] = arr
    return out


def _clamp_var(var):
    if np.any(var < -_NEG_VAR_TOL):
        raise NumericalError(f"posterior variance {np.min(var):.3e} is negative beyond rounding")
    return np.clip(var, 0.0, 1.0)


class GpState:
    """Posterior over one unknown function, conditioned on noisy samples.

    Parameters
    ----------
    kernel : KernelSpec
    lam : float
        Regularizer added to the Gram diagonal, ``(K_t + lam*I)``.
    dim : int, optional
        Input dimension; inferred from ``grid`` or the first observation.
    grid : array_like, optional
        Anchor points whose posterior is kept up to date after every observation.
    store_chol : bool
        Keep the full Cholesky factor.  With a grid and only grid observations
        it can be dropped to save memory (t^2 floats per agent); ``chol`` is
        then rebuilt on demand.
    """

    def __init__(self, kernel: KernelSpec, lam: float, dim: int | None = None, grid=None,
                 store_chol: bool = True, capacity: int = 32):
        if not lam > 0:
            raise InputError(f"lam must be positive, got {lam}")
        self.kernel = kernel
        self.lam = float(lam)
        self.grid = None if grid is None else as_points(grid)
        if self.grid is not None:
            if dim is not None and dim != self.grid.shape[1]:
                raise InputError(f"dim={dim} does not match grid dimension {self.grid.shape[1]}")
            dim = self.grid.shape[1]
        self.dim = dim
        self.store_chol = store_chol
        self.t = 0
        self._info_gain = 0.0
        self.sampled_variances: list[float] = []

        cap = max(int(capacity), 1)
        self._x = np.zeros((cap, dim if dim is not None else 1))
        self._y = np.zeros(cap)
        self._alpha = np.zeros(cap)  # L^{-1} y
        self._chol = np.zeros((cap, cap)) if store_chol else None
        self._chol_cache = None
        if self.grid is not None:
            m = self.grid.shape[0]
            self._v = np.zeros((cap, m))
            self._mu_grid = np.zeros(m)
            self._var_grid = np.ones(m)

    # -- read access -------------------------------------------------------

    @property
    def inputs(self) -> np.ndarray:
        return self._x[: self.t].copy()

    @property
    def targets(self) -> np.ndarray:
        return self._y[: self.t].copy()

    @property
    def chol(self) -> np.ndarray:
        """Lower Cholesky factor of ``K_t + lam*I``."""
        if self._chol is not None:
            return self._chol[: self.t, : self.t].copy()
        if self._chol_cache is None or self._chol_cache.shape[0] != self.t:
            gram = cross_kernel(self.kernel, self.inputs, self.inputs) + self.lam * np.eye(self.t)
            self._chol_cache = np.linalg.cholesky(gram) if self.t else np.zeros((0, 0))
        return self._chol_cache.copy()

    @property
    def realized_info_gain(self) -> float:
        return self._info_gain

    def _check_point(self, x) -> np.ndarray:
        x = as_point(x)
        if self.dim is not None and x.shape[0] != self.dim:
            raise InputError(f"point has dimension {x.shape[0]}, state expects {self.dim}")
        return x

    def _whiten(self, kvec: np.ndarray) -> np.ndarray:
        if self.t == 0:
            return np.zeros(0)
        if self._chol is not None:
            return solve_triangular(self._chol[: self.t, : self.t], kvec, lower=True, check_finite=False)
        return solve_triangular(self.chol, kvec, lower=True, check_finite=False)

    def posterior(self, x) -> tuple[float, float]:
        """Posterior mean and standard deviation at a single point."""
        x = self._check_point(x)
        if self.t == 0:
            return 0.0, 1.0
        kvec = cross_kernel(self.kernel, self._x[: self.t], x[None, :])[:, 0]
        w = self._whiten(kvec)
        mu = float(w @ self._alpha[: self.t])
        var = float(_clamp_var(1.0 - w @ w))
        return mu, math.sqrt(var)

    def posterior_batch(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Posterior at many points via one matrix triangular solve."""
        pts = as_points(points)
        if self.dim is not None and pts.shape[1] != self.dim:
            raise InputError(f"points have dimension {pts.shape[1]}, state expects {self.dim}")
        if self.t == 0:
            return np.zeros(len(pts)), np.ones(len(pts))
        w = self._whiten(cross_kernel(self.kernel, self._x[: self.t], pts))
        mu = w.T @ self._alpha[: self.t]
        var = _clamp_var(1.0 - np.einsum("ij,ij->j", w, w))
        return mu, np.sqrt(var)

    def grid_posterior(self) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and deviation on the tracked grid (copies)."""
        if self.grid is None:
            raise InputError("state was built without a grid")
        return self._mu_grid.copy(), np.sqrt(_clamp_var(self._var_grid))

    # -- updates -----------------------------------------------------------

    def _reserve(self):
        cap = self._y.shape[0]
        if self.t < cap:
            return
        new = 2 * cap
        self._x = _grow(self._x, new)
        self._y = _grow(self._y, new)
        self._alpha = _grow(self._alpha, new)
        if self._chol is not None:
            self._chol = _grow(self._chol, new, square=True)
        if self.grid is not None:
            self._v = _grow(self._v, new)

    def observe(self, x, y: float, grid_index: int | None = None) -> "GpState":
        """Condition on one sample ``(x, y)``; updates in place and returns ``self``.

        ``grid_index`` marks ``x`` as a tracked grid point, which avoids the
        O(t^2) triangular solve.
        """
        if grid_index is not None:
            if self.grid is None:
                raise InputError("grid_index given but state has no grid")
            x = self.grid[grid_index]
        x = as_point(x)
        if self.dim is None:
            self.dim = x.shape[0]
            self._x = np.zeros((self._x.shape[0], self.dim))
        x = self._check_point(x)
        y = float(y)
        t = self.t

        if grid_index is not None:
            row = self._v[:t, grid_index].copy()
        elif self._chol is None:
            raise InputError("off-grid observations need store_chol=True")
        else:
            kvec = cross_kernel(self.kernel, self._x[:t], x[None, :])[:, 0]
            row = self._whiten(kvec)

        prior_var = 1.0 - row @ row
        pivot_sq = prior_var + self.lam
        if not pivot_sq > 0:
            raise NumericalError(
                f"Cholesky breakdown at observation {t + 1}: pivot^2 = {pivot_sq:.3e} (lam={self.lam})")
        if prior_var < -_NEG_VAR_TOL:
            raise NumericalError(f"negative prior variance {prior_var:.3e} at observation {t + 1}")
        prior_var = max(prior_var, 0.0)
        pivot = math.sqrt(pivot_sq)

        self._reserve()
        a_new = (y - row @ self._alpha[:t]) / pivot
        self._x[t] = x
        self._y[t] = y
        self._alpha[t] = a_new
        if self._chol is not None:
            self._chol[t, :t] = row
            self._chol[t, t] = pivot
        if self.grid is not None:
            k_grid = cross_kernel(self.kernel, x[None, :], self.grid)[0]
            v_new = (k_grid - row @ self._v[:t]) / pivot
            self._v[t] = v_new
            self._mu_grid += v_new * a_new
            self._var_grid -= v_new * v_new

        self.t = t + 1
        self._chol_cache = None
        self._info_gain += 0.5 * math.log1p(prior_var / self.lam)
        self.sampled_variances.append(prior_var)
        return self

    def copy(self) -> "GpState":
        other = object.__new__(GpState)
        other.__dict__.update(self.__dict__)
        for name in ("_x", "_y", "_alpha", "_chol", "_v", "_mu_grid", "_var_grid", "_chol_cache"):
            val = getattr(self, name, None)
            if isinstance(val, np.ndarray):
                setattr(other, name, val.copy())
        other.sampled_variances = list(self.sampled_variances)
        return other


def posterior(state: GpState, x) -> tuple[float, float]:
    return state.posterior(x)


def observe(state: GpState, x, y: float) -> GpState:
    return state.observe(x, y)


def realized_info_gain(state: GpState) -> float:
    """Half log-determinant of ``I + K_t/lam``, accumulated one sample at a time."""
    return state.realized_info_gain


def info_gain_logdet(kernel: KernelSpec, lam: float, points) -> float:
    """Direct evaluation of ``0.5 * log det(I + K/lam)``."""
    pts = as_points(points)
    if pts.shape[0] == 0:
        return 0.0
    gram = cross_kernel(kernel, pts, pts)
    c, _ = cho_factor(np.eye(len(pts)) + gram / lam, lower=True)
    return float(np.sum(np.log(np.diag(c))))


def potential_constant(lam: float) -> float:
    """Smallest C with ``s/lam <= C*log(1 + s/lam)`` for every ``s`` in [0, 1]."""
    return (1.0 / lam) / math.log1p(1.0 / lam)


def gamma_bound(family: str, t: int, d: int = 1, nu: float = 2.5, c_gamma: float = 1.0) -> float:
    """Order-of-growth proxy for the maximum information gain after ``t`` samples.

    ``t = 0`` returns 0 so that schedules can ask for ``gamma(t - 1)`` at the first round.
    """
    if t < 0:
        raise InputError(f"t must be >= 0, got {t}")
    if t == 0 or c_gamma == 0:
        return 0.0
    family = canonical_family(family)
    log_term = math.log(t + 1)
    if family == SQUARED_EXPONENTIAL:
        return c_gamma * log_term ** (d + 1)
    if family == MATERN:
        denom = 2 * nu + d
        return c_gamma * t ** (d / denom) * log_term ** (2 * nu / denom)
    raise InputError(f"unknown family {family}")
