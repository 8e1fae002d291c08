"""Bulk-synchronous trial execution and aggregation over repeated trials."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from kermab import agents as ag
from kermab.config import ExperimentConfig
from kermab.envmodel import Environment, make_environment, uniform_grid
from kermab.errors import InputError, KermabError
from kermab.netgraph import CommGraph, ConsensusMatrices, gen_graph, load_edge_list, perron_matrix, \
    sample_connected_subgraph
from kermab.seeding import split

log = logging.getLogger(__name__)


class TrialError(KermabError):
    """A module error raised inside a trial, annotated with where it happened."""


@dataclass(frozen=True)
class TrialConfig:
    experiment: ExperimentConfig
    trial_seed: int

    @property
    def T(self) -> int:
        return self.experiment.sim.T


@dataclass
class TrialRecord:
    actions: np.ndarray  # (T, N) grid indices
    rewards: np.ndarray  # (T, N)
    inst_regret: np.ndarray  # (T,)
    cum_regret: np.ndarray  # (T,)
    lambda2: float
    trial_seed: int
    policy: str
    trial: int = 0
    wall_time: float = 0.0

    @property
    def T(self) -> int:
        return self.inst_regret.shape[0]

    def same_outcome(self, other: "TrialRecord") -> bool:
        """Bitwise equality of everything except timing."""
        return (np.array_equal(self.actions, other.actions)
                and np.array_equal(self.rewards, other.rewards)
                and np.array_equal(self.inst_regret, other.inst_regret)
                and np.array_equal(self.cum_regret, other.cum_regret))


@dataclass
class TrialFailure:
    trial: int
    trial_seed: int
    error: str


@dataclass
class Curves:
    t: np.ndarray
    mean_cum_regret: np.ndarray
    std_cum_regret: np.ndarray
    mean_inst_regret: np.ndarray


def build_graph(cfg: ExperimentConfig) -> CommGraph:
    gcfg = cfg.graph
    if gcfg.edge_list_path is not None:
        with open(gcfg.edge_list_path) as fh:
            g = load_edge_list(fh)
        if gcfg.subsample_k is not None:
            g = sample_connected_subgraph(g, gcfg.subsample_k, gcfg.seed)
        return g
    g = gen_graph(gcfg.kind, gcfg.n, gcfg.p, gcfg.seed)
    if gcfg.subsample_k is not None:
        g = sample_connected_subgraph(g, gcfg.subsample_k, gcfg.seed)
    return g


def beta_schedule(cfg: ExperimentConfig, n_agents: int, d: int = 1) -> ag.BetaSchedule:
    return ag.BetaSchedule(B=cfg.agent.B, eta=cfg.env.eta, n_agents=n_agents, delta=cfg.agent.delta,
                           beta_scale=cfg.agent.beta_scale, family=cfg.kernel.family, d=d,
                           nu=cfg.kernel.nu, c_gamma=cfg.gp.c_gamma)


@dataclass
class Trial:
    """Everything one trial is built from; useful for inspecting intermediate state."""

    graph: CommGraph
    consensus: ConsensusMatrices
    env: Environment
    sched: ag.BetaSchedule
    agents: list[ag.AgentRuntime]
    neighbors: list[list[int]] = field(default_factory=list)


def setup_trial(cfg: ExperimentConfig, trial_seed: int, graph: CommGraph | None = None) -> Trial:
    graph = build_graph(cfg) if graph is None else graph
    cm = perron_matrix(graph)
    grid = uniform_grid(cfg.env.grid_m, cfg.env.domain_lo, cfg.env.domain_hi)
    kernel = cfg.kernel.spec()
    env = make_environment(kernel, grid, graph.n, cfg.env.eta, cfg.env.jitter, trial_seed)
    sched = beta_schedule(cfg, graph.n, grid.d)
    agents = [ag.new_agent(i, kernel, cfg.lam, grid.points, cfg.agent.policy, cfg.agent.c)
              for i in range(graph.n)]
    neighbors = [graph.neighbors(i) for i in range(graph.n)]
    return Trial(graph, cm, env, sched, agents, neighbors)


RoundHook = Callable[[int, Trial], None]


def run_trial(cfg: TrialConfig | ExperimentConfig, trial_seed: int | None = None, *,
              on_round: RoundHook | None = None, trial: int = 0, graph: CommGraph | None = None) -> TrialRecord:
    """Run one seeded trial for ``T`` synchronous rounds.

    Each round every agent receives exactly the round-(t-1) messages of its
    neighbours, then all agents act.  ``on_round(t, trial)`` is called after
    every round with the live trial state.
    """
    if isinstance(cfg, TrialConfig):
        trial_seed = cfg.trial_seed if trial_seed is None else trial_seed
        cfg = cfg.experiment
    if trial_seed is None:
        raise InputError("run_trial needs a trial seed")
    start = time.perf_counter()
    tr = setup_trial(cfg, trial_seed, graph)
    n, T = tr.graph.n, cfg.sim.T
    weights = tr.consensus.weights
    actions = np.zeros((T, n), dtype=np.int64)
    rewards = np.zeros((T, n))
    inst = np.zeros(T)
    outbox = {a.id: a.message() for a in tr.agents}
    for t in range(1, T + 1):
        inbox_all, outbox = outbox, {}
        for i, agent in enumerate(tr.agents):
            inbox = {j: inbox_all[j] for j in tr.neighbors[i]}

            def reward_fn(action, _i=i):
                return tr.env.reward(_i, action)

            try:
                _, msg, a, y = ag.step(agent, inbox, weights[i], tr.sched, reward_fn, t)
            except KermabError as exc:
                raise TrialError(f"round {t}, agent {i}: {exc}") from exc
            outbox[i] = msg
            actions[t - 1, i] = a
            rewards[t - 1, i] = y
        inst[t - 1] = tr.env.inst_regret(actions[t - 1])
        if on_round is not None:
            on_round(t, tr)
    return TrialRecord(actions=actions, rewards=rewards, inst_regret=inst, cum_regret=np.cumsum(inst),
                       lambda2=tr.consensus.lambda2, trial_seed=trial_seed, policy=cfg.agent.policy,
                       trial=trial, wall_time=time.perf_counter() - start)


def _run_indexed(args):
    cfg, index, seed, graph = args
    try:
        return run_trial(cfg, seed, trial=index, graph=graph)
    except Exception as exc:  # one bad trial must not sink a sweep
        log.warning("trial %d (seed %d) failed: %s", index, seed, exc)
        return TrialFailure(trial=index, trial_seed=seed, error=f"{type(exc).__name__}: {exc}")


def trial_seeds(base_seed: int, n_trials: int) -> list[int]:
    return [split(base_seed, i) for i in range(n_trials)]


def run_experiment(cfg: ExperimentConfig, n_trials: int | None = None, base_seed: int | None = None,
                   parallel: int | None = None) -> list[TrialRecord | TrialFailure]:
    """Run independent trials; results come back in trial order whatever the scheduling.

    The communication graph is built once from ``graph.seed`` and shared by
    all trials; environments and noise differ per trial.
    """
    n_trials = cfg.sim.n_trials if n_trials is None else n_trials
    base_seed = cfg.sim.base_seed if base_seed is None else base_seed
    parallel = cfg.sim.parallel if parallel is None else parallel
    if n_trials < 1:
        raise InputError(f"n_trials must be >= 1, got {n_trials}")
    graph = build_graph(cfg)
    jobs = [(cfg, i, seed, graph) for i, seed in enumerate(trial_seeds(base_seed, n_trials))]
    if parallel <= 1 or n_trials == 1:
        return [_run_indexed(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(_run_indexed, jobs))


def aggregate(records: list[TrialRecord]) -> Curves:
    """Pointwise mean and population standard deviation of cumulative regret."""
    if not records:
        raise InputError("aggregate needs at least one record")
    lengths = {r.T for r in records}
    if len(lengths) != 1:
        raise InputError(f"records have different horizons: {sorted(lengths)}")
    cum = np.stack([r.cum_regret for r in records])
    inst = np.stack([r.inst_regret for r in records])
    return Curves(t=np.arange(1, cum.shape[1] + 1), mean_cum_regret=cum.mean(axis=0),
                  std_cum_regret=cum.std(axis=0), mean_inst_regret=inst.mean(axis=0))
