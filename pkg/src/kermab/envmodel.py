"""Synthetic multi-agent environment on a discretized action domain."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from kermab.errors import InputError, NumericalError
from kermab.kernel import KernelSpec, as_points, gram_matrix
from kermab.seeding import substream


@dataclass(frozen=True)
class ActionGrid:
    points: np.ndarray

    def __post_init__(self):
        pts = as_points(self.points)
        if pts.shape[0] < 2:
            raise InputError(f"action grid needs at least 2 points, got {pts.shape[0]}")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise InputError("action grid points must be distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def uniform_grid(m: int = 100, lo: float = 0.0, hi: float = 1.0) -> ActionGrid:
    if not hi > lo:
        raise InputError(f"domain upper bound {hi} must exceed lower bound {lo}")
    return ActionGrid(np.linspace(lo, hi, m)[:, None])


def sample_test_functions(kernel: KernelSpec, grid: ActionGrid, n_agents: int, jitter: float = 1e-8,
                          seed: int = 0) -> np.ndarray:
    """Draw ``n_agents`` independent functions from N(0, K + jitter*I) on the grid.

    Returns an ``(n_agents, m)`` array.
    """
    if n_agents < 1:
        raise InputError(f"n_agents must be >= 1, got {n_agents}")
    cov = gram_matrix(kernel, grid.points) + jitter * np.eye(grid.m)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise NumericalError(f"K + {jitter:g}*I is not positive definite; increase env.jitter") from None
    # one substream per agent: growing N leaves existing agents' functions unchanged
    return np.stack([chol @ substream(seed, "test_function", i).standard_normal(grid.m) for i in range(n_agents)])


@dataclass
class Environment:
    """True local functions on the grid plus a per-agent noise source."""

    grid: ActionGrid
    locals: np.ndarray
    eta: float
    seed: int = 0
    global_vals: np.ndarray = field(init=False)
    opt_index: int = field(init=False)
    opt_value: float = field(init=False)

    def __post_init__(self):
        self.locals = np.asarray(self.locals, dtype=float)
        if self.locals.ndim != 2 or self.locals.shape[1] != self.grid.m:
            raise InputError(f"locals must be (N, {self.grid.m}), got {self.locals.shape}")
        if self.eta < 0:
            raise InputError(f"noise scale must be >= 0, got {self.eta}")
        self.global_vals = self.locals.mean(axis=0)
        self.opt_index = int(np.argmax(self.global_vals))  # argmax returns the lowest tied index
        self.opt_value = float(self.global_vals[self.opt_index])
        self._noise = [substream(self.seed, "noise", i) for i in range(self.n_agents)]

    @property
    def n_agents(self) -> int:
        return self.locals.shape[0]

    def reward(self, agent: int, action: int) -> float:
        value = self.locals[agent, action]
        # the draw happens even when eta == 0 so the stream position does not depend on eta
        return float(value + self.eta * self._noise[agent].standard_normal())

    def inst_regret(self, actions) -> float:
        actions = np.asarray(actions, dtype=int)
        if actions.shape != (self.n_agents,):
            raise InputError(f"need one action per agent ({self.n_agents}), got shape {actions.shape}")
        # rounding in the mean can dip a hair below zero when every agent sits at the optimum
        return max(0.0, float(self.opt_value - self.global_vals[actions].mean()))


def make_environment(kernel: KernelSpec, grid: ActionGrid, n_agents: int, eta: float, jitter: float,
                     seed: int) -> Environment:
    locals_ = sample_test_functions(kernel, grid, n_agents, jitter, seed)
    return Environment(grid=grid, locals=locals_, eta=eta, seed=seed)


def reward(env: Environment, agent: int, action: int) -> float:
    return env.reward(agent, action)


def inst_regret(env: Environment, actions) -> float:
    return env.inst_regret(actions)
