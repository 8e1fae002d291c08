"""UCB bandit agents: independent IGP-UCB, running-consensus (MA) and staged (MAD).

All estimates live on the action grid as length-m vectors.  An agent's
round-t step only sees the round-(t-1) messages of its neighbours; nothing
about actions, rewards or local posteriors ever leaves the agent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Callable, Mapping

import numpy as np

from kermab.errors import InputError, NumericalError, ProtocolError
from kermab.gp import GpState, gamma_bound
from kermab.kernel import KernelSpec

POLICIES = ("igp_ucb", "ma", "mad")


@dataclass(frozen=True)
class BetaSchedule:
    """Confidence width ``beta_t = scale * (B + eta*sqrt(2*(gamma_{t-1} + 1 + ln(N/delta))))``."""

    B: float = 1.0
    eta: float = 0.2
    n_agents: int = 1
    delta: float = 0.1
    beta_scale: float = 1.0
    family: str = "se"
    d: int = 1
    nu: float = 2.5
    c_gamma: float = 1.0

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise InputError(f"delta must be in (0, 1], got {self.delta}")
        if self.n_agents < 1:
            raise InputError(f"n_agents must be >= 1, got {self.n_agents}")
        if self.beta_scale < 0:
            raise InputError(f"beta_scale must be >= 0, got {self.beta_scale}")

    def gamma(self, t: int) -> float:
        return gamma_bound(self.family, t, self.d, self.nu, self.c_gamma)

    def __call__(self, t: int) -> float:
        return beta_t(self, t)


def beta_t(sched: BetaSchedule, t: int) -> float:
    if t < 1:
        raise InputError(f"beta_t is defined for t >= 1, got {t}")
    inner = 2.0 * (sched.gamma(t - 1) + 1.0 + math.log(sched.n_agents / sched.delta))
    return sched.beta_scale * (sched.B + sched.eta * math.sqrt(inner))


def select_action(mu_vec, sigma_vec, beta: float) -> int:
    """Lowest grid index maximizing ``mu + beta*sigma``."""
    ucb = np.asarray(mu_vec, dtype=float) + beta * np.asarray(sigma_vec, dtype=float)
    if np.isnan(ucb).any():
        raise NumericalError("NaN in UCB inputs")
    return int(np.argmax(ucb))


@dataclass(frozen=True)
class EstimateMessage:
    """What one agent broadcasts after a round: global-function estimates only."""

    sender: int
    round: int
    mu_bar: np.ndarray
    sigma_bar: np.ndarray
    mu_mix: np.ndarray | None = None
    sigma_mix: np.ndarray | None = None


MESSAGE_FIELDS = frozenset(f.name for f in fields(EstimateMessage))


def _frozen(v: np.ndarray) -> np.ndarray:
    v = np.array(v, dtype=float)
    v.setflags(write=False)
    return v


@dataclass
class AgentRuntime:
    id: int
    gp: GpState
    mu_bar: np.ndarray
    sigma_bar: np.ndarray
    prev_mu: np.ndarray
    prev_sigma: np.ndarray
    mode: str = "ma"
    c: int = 2
    stage: int = 0
    mu_mix: np.ndarray | None = None
    sigma_mix: np.ndarray | None = None
    mu_mixed: np.ndarray | None = None
    sigma_mixed: np.ndarray | None = None
    round: int = 0

    @property
    def m(self) -> int:
        return self.mu_bar.shape[0]

    def message(self) -> EstimateMessage:
        if self.mode == "mad":
            return EstimateMessage(self.id, self.round, _frozen(self.mu_bar), _frozen(self.sigma_bar),
                                   _frozen(self.mu_mix), _frozen(self.sigma_mix))
        return EstimateMessage(self.id, self.round, _frozen(self.mu_bar), _frozen(self.sigma_bar))


def new_agent(agent_id: int, kernel: KernelSpec, lam: float, grid, mode: str = "ma", c: int = 2,
              store_chol: bool = False) -> AgentRuntime:
    """Agent at t=0: running estimates equal the prior (mean 0, deviation 1)."""
    if mode not in POLICIES:
        raise InputError(f"unknown policy {mode!r}; expected one of {POLICIES}")
    if mode == "mad" and c < 1:
        raise InputError(f"stage length c must be >= 1, got {c}")
    gp = GpState(kernel, lam, grid=grid, store_chol=store_chol)
    mu0, sigma0 = gp.grid_posterior()
    agent = AgentRuntime(id=agent_id, gp=gp, mu_bar=mu0.copy(), sigma_bar=sigma0.copy(),
                         prev_mu=mu0, prev_sigma=sigma0, mode=mode, c=c)
    if mode == "mad":
        agent.mu_mix, agent.sigma_mix = mu0.copy(), sigma0.copy()
        agent.mu_mixed, agent.sigma_mixed = mu0.copy(), sigma0.copy()
    return agent


def _check_inbox(agent: AgentRuntime, inbox: Mapping[int, EstimateMessage], weights: np.ndarray, t: int):
    expected = {int(j) for j in np.flatnonzero(weights) if j != agent.id}
    got = set(inbox)
    if got != expected:
        raise ProtocolError(
            f"agent {agent.id} round {t}: expected messages from {sorted(expected)}, got {sorted(got)}")
    for j, msg in inbox.items():
        if msg.sender != j:
            raise ProtocolError(f"agent {agent.id} round {t}: message keyed {j} was sent by {msg.sender}")
        if msg.round != t - 1:
            raise ProtocolError(
                f"agent {agent.id} round {t}: message from {j} is from round {msg.round}, expected {t - 1}")
    if agent.round != t - 1:
        raise ProtocolError(f"agent {agent.id} is at round {agent.round}, cannot step round {t}")


def _consensus(own: np.ndarray, others: list[tuple[float, np.ndarray]]) -> np.ndarray:
    out = np.zeros_like(own)
    for w, v in others:
        out += w * (v - own)
    return out


def _learn(agent: AgentRuntime, action: int, y: float, inbox, weights):
    """Local Bayesian update followed by the running-consensus update of mu_bar/sigma_bar."""
    agent.gp.observe(None, y, grid_index=action)
    mu, sigma = agent.gp.grid_posterior()
    nbrs = [(weights[j], msg) for j, msg in sorted(inbox.items())]
    cons_mu = _consensus(agent.mu_bar, [(w, msg.mu_bar) for w, msg in nbrs])
    cons_sigma = _consensus(agent.sigma_bar, [(w, msg.sigma_bar) for w, msg in nbrs])
    # grouped as mu + (offset + consensus): an isolated agent then tracks its posterior bit-exactly
    agent.mu_bar = mu + ((agent.mu_bar - agent.prev_mu) + cons_mu)
    agent.sigma_bar = sigma + ((agent.sigma_bar - agent.prev_sigma) + cons_sigma)
    agent.prev_mu, agent.prev_sigma = mu, sigma


RewardFn = Callable[[int], float]


def igp_step(agent: AgentRuntime, sched: BetaSchedule, reward_fn: RewardFn, t: int):
    """Single-agent IGP-UCB on the agent's own posterior; no communication."""
    if agent.round != t - 1:
        raise ProtocolError(f"agent {agent.id} is at round {agent.round}, cannot step round {t}")
    action = select_action(agent.prev_mu, agent.prev_sigma, sched(t))
    y = reward_fn(action)
    agent.gp.observe(None, y, grid_index=action)
    agent.prev_mu, agent.prev_sigma = agent.gp.grid_posterior()
    agent.mu_bar, agent.sigma_bar = agent.prev_mu.copy(), agent.prev_sigma.copy()
    agent.round = t
    return agent, agent.message(), action, y


def ma_step(agent: AgentRuntime, inbox: Mapping[int, EstimateMessage], weights, sched: BetaSchedule,
            reward_fn: RewardFn, t: int):
    """One round of the running-consensus UCB agent.

    ``inbox`` maps neighbour id to its round-(t-1) message; ``weights`` is
    this agent's row of the consensus matrix.  Returns
    ``(agent, message, action, reward)``; the agent is updated in place.
    """
    weights = np.asarray(weights, dtype=float)
    _check_inbox(agent, inbox, weights, t)
    action = select_action(agent.mu_bar, agent.sigma_bar, sched(t))
    y = reward_fn(action)
    _learn(agent, action, y, inbox, weights)
    agent.round = t
    return agent, agent.message(), action, y


def stage_of(t: int, c: int) -> int:
    """1-based stage containing round ``t``; stage s covers rounds (s-1)c+1 .. sc."""
    return (t - 1) // c + 1


def mad_step(agent: AgentRuntime, inbox: Mapping[int, EstimateMessage], weights, sched: BetaSchedule,
             reward_fn: RewardFn, t: int):
    """One round of the staged (delayed) agent.

    Stage ``s`` starts after round ``t_s = (s-1)c``.  At that boundary the
    mixing estimate (mixed for a whole stage) becomes the decision estimate
    when ``s >= 3``, and the mixing estimate restarts from the running
    estimate when ``s >= 2``.  Stages 1 and 2 have nothing mixed yet, so the
    agent decides on its running estimates exactly like the MA agent.
    """
    weights = np.asarray(weights, dtype=float)
    _check_inbox(agent, inbox, weights, t)
    c = agent.c
    s = stage_of(t, c)
    t_s = (s - 1) * c
    boundary = t == t_s + 1
    if agent.stage != (s - 1 if boundary else s):
        raise ProtocolError(f"agent {agent.id} round {t}: stage counter {agent.stage} inconsistent with stage {s}")
    if boundary:
        agent.stage = s
        if s >= 3:
            agent.mu_mixed, agent.sigma_mixed = agent.mu_mix.copy(), agent.sigma_mix.copy()
        if s >= 2:
            agent.mu_mix, agent.sigma_mix = agent.mu_bar.copy(), agent.sigma_bar.copy()

    if s >= 3:
        action = select_action(agent.mu_mixed, agent.sigma_mixed, sched(t_s))
    else:
        action = select_action(agent.mu_bar, agent.sigma_bar, sched(t))
    y = reward_fn(action)

    if s >= 2:
        # neighbours restarted their mixing estimate from mu_bar at the same boundary
        if boundary:
            nbr_mu = {j: msg.mu_bar for j, msg in inbox.items()}
            nbr_sigma = {j: msg.sigma_bar for j, msg in inbox.items()}
        else:
            nbr_mu = {j: msg.mu_mix for j, msg in inbox.items()}
            nbr_sigma = {j: msg.sigma_mix for j, msg in inbox.items()}
        order = sorted(inbox)
        agent.mu_mix = agent.mu_mix + _consensus(agent.mu_mix, [(weights[j], nbr_mu[j]) for j in order])
        agent.sigma_mix = agent.sigma_mix + _consensus(agent.sigma_mix, [(weights[j], nbr_sigma[j]) for j in order])

    _learn(agent, action, y, inbox, weights)
    agent.round = t
    return agent, agent.message(), action, y


def step(agent: AgentRuntime, inbox, weights, sched: BetaSchedule, reward_fn: RewardFn, t: int):
    if agent.mode == "ma":
        return ma_step(agent, inbox, weights, sched, reward_fn, t)
    if agent.mode == "mad":
        return mad_step(agent, inbox, weights, sched, reward_fn, t)
    return igp_step(agent, sched, reward_fn, t)
