"""Experiment configuration: typed sections, defaults, presets and YAML loading."""

from __future__ import annotations

import copy
import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from kermab.agents import POLICIES
from kermab.errors import ConfigError
from kermab.kernel import KernelSpec, canonical_family
from kermab.netgraph import GRAPH_KINDS

SEED_ENV_VAR = "KERMAB_SEED"


@dataclass
class KernelConfig:
    family: str = "se"
    lengthscale: float = 0.1
    nu: float = 2.5

    def spec(self) -> KernelSpec:
        return KernelSpec(self.family, self.lengthscale, self.nu)


@dataclass
class GpConfig:
    # None resolves to eta**2
    lambda_: float | None = None
    c_gamma: float = 1.0


@dataclass
class GraphConfig:
    kind: str = "cycle"
    n: int = 5
    p: float = 0.04
    edge_list_path: str | None = None
    subsample_k: int | None = None
    seed: int = 0


@dataclass
class EnvConfig:
    grid_m: int = 100
    domain_lo: float = 0.0
    domain_hi: float = 1.0
    eta: float = 0.2
    jitter: float = 1e-8


@dataclass
class AgentConfig:
    policy: str = "ma"
    B: float = 1.0
    delta: float = 0.1
    beta_scale: float = 1.0
    c: int = 2


@dataclass
class SimConfig:
    T: int = 1000
    n_trials: int = 10
    base_seed: int = 0
    parallel: int = 1


@dataclass
class ExperimentConfig:
    kernel: KernelConfig = field(default_factory=KernelConfig)
    gp: GpConfig = field(default_factory=GpConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    sim: SimConfig = field(default_factory=SimConfig)

    @property
    def lam(self) -> float:
        return self.gp.lambda_ if self.gp.lambda_ is not None else self.env.eta ** 2

    def validate(self) -> "ExperimentConfig":
        canonical_family(self.kernel.family)
        self.kernel.spec()
        if self.gp.lambda_ is None and self.env.eta == 0:
            raise ConfigError("gp.lambda must be set explicitly when env.eta is 0")
        if not self.lam > 0:
            raise ConfigError(f"gp.lambda must be positive, got {self.lam}")
        if self.graph.edge_list_path is None and self.graph.kind not in GRAPH_KINDS:
            raise ConfigError(f"graph.kind must be one of {GRAPH_KINDS}, got {self.graph.kind!r}")
        if self.graph.n < 1:
            raise ConfigError(f"graph.n must be >= 1, got {self.graph.n}")
        if not 0 <= self.graph.p <= 1:
            raise ConfigError(f"graph.p must be in [0, 1], got {self.graph.p}")
        if self.graph.edge_list_path is not None and not Path(self.graph.edge_list_path).is_file():
            raise ConfigError(f"graph.edge_list_path {self.graph.edge_list_path!r} is not a readable file")
        if self.graph.subsample_k is not None and self.graph.subsample_k < 1:
            raise ConfigError(f"graph.subsample_k must be >= 1, got {self.graph.subsample_k}")
        if self.env.grid_m < 2:
            raise ConfigError(f"env.grid_m must be >= 2, got {self.env.grid_m}")
        if not self.env.domain_hi > self.env.domain_lo:
            raise ConfigError("env.domain_hi must exceed env.domain_lo")
        if self.env.eta < 0 or self.env.jitter < 0:
            raise ConfigError("env.eta and env.jitter must be non-negative")
        if self.agent.policy not in POLICIES:
            raise ConfigError(f"agent.policy must be one of {POLICIES}, got {self.agent.policy!r}")
        if not 0 < self.agent.delta <= 1:
            raise ConfigError(f"agent.delta must be in (0, 1], got {self.agent.delta}")
        if self.agent.beta_scale < 0:
            raise ConfigError("agent.beta_scale must be >= 0")
        if self.agent.c < 1:
            raise ConfigError(f"agent.c must be >= 1, got {self.agent.c}")
        if self.sim.T < 1 or self.sim.n_trials < 1 or self.sim.parallel < 1:
            raise ConfigError("sim.T, sim.n_trials and sim.parallel must all be >= 1")
        return self


def _keys(section) -> dict[str, str]:
    """Config-file key -> dataclass attribute for one section (``lambda`` is a keyword)."""
    return {f.name.rstrip("_"): f.name for f in dataclasses.fields(section)}


# keys whose default is None, with the type they hold when set
_OPTIONAL_TYPES = {"gp.lambda": float, "graph.edge_list_path": str, "graph.subsample_k": int}


def _coerce(value, kind: type, key: str):
    if kind is str:
        return str(value)
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    try:
        num = float(value)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {value!r}") from None
    if kind is int:
        if num != int(num):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return int(num)
    return num


def set_value(cfg: ExperimentConfig, dotted: str, value) -> None:
    """Assign ``section.key`` on ``cfg`` with type coercion; unknown keys raise ConfigError."""
    sec_name, _, key = dotted.partition(".")
    if sec_name not in {f.name for f in dataclasses.fields(cfg)}:
        raise ConfigError(f"unknown config section {sec_name!r}")
    section = getattr(cfg, sec_name)
    attr = _keys(section).get(key)
    if attr is None:
        raise ConfigError(f"unknown config key {dotted!r}")
    if dotted in _OPTIONAL_TYPES:
        value = None if value is None else _coerce(value, _OPTIONAL_TYPES[dotted], dotted)
    else:
        default = getattr(type(section)(), attr)
        if value is None:
            raise ConfigError(f"{dotted} may not be null")
        value = value if isinstance(default, str) else _coerce(value, type(default), dotted)
        if isinstance(default, str) and not isinstance(value, str):
            raise ConfigError(f"{dotted} must be a string, got {value!r}")
    setattr(section, attr, value)


def apply_mapping(cfg: ExperimentConfig, data: dict[str, Any]) -> ExperimentConfig:
    for sec_name, body in data.items():
        if sec_name == "preset":
            continue
        if not isinstance(body, dict):
            raise ConfigError(f"config section {sec_name!r} must be a mapping")
        for key, value in body.items():
            set_value(cfg, f"{sec_name}.{key}", value)
    return cfg


def flatten(cfg: ExperimentConfig) -> dict[str, Any]:
    """Every resolved ``section.key`` with its value, in declaration order."""
    out = {}
    for sec in dataclasses.fields(cfg):
        section = getattr(cfg, sec.name)
        for key, attr in _keys(section).items():
            out[f"{sec.name}.{key}"] = getattr(section, attr)
    out["gp.lambda"] = cfg.lam
    return out


PRESETS: dict[str, dict[str, dict[str, Any]]] = {
    # 5-agent ring, squared-exponential kernel
    "paper_small": {
        "kernel": {"family": "se", "lengthscale": 0.1},
        "gp": {"lambda": 0.04},
        "graph": {"kind": "cycle", "n": 5},
        "env": {"grid_m": 100, "eta": 0.2},
        "agent": {"policy": "ma", "B": 1.0, "delta": 0.1, "beta_scale": 0.2, "c": 2},
        "sim": {"T": 1000, "n_trials": 10},
    },
    # sparse random network with 100 agents
    "paper_er": {
        "kernel": {"family": "se", "lengthscale": 0.1},
        "gp": {"lambda": 0.04},
        "graph": {"kind": "erdos_renyi", "n": 100, "p": 0.04},
        "env": {"grid_m": 100, "eta": 0.2},
        "agent": {"policy": "ma", "B": 1.0, "delta": 0.1, "beta_scale": 0.2, "c": 2},
        "sim": {"T": 1500, "n_trials": 100},
    },
    # fully connected baseline
    "paper_complete": {
        "kernel": {"family": "se", "lengthscale": 0.1},
        "gp": {"lambda": 0.04},
        "graph": {"kind": "complete", "n": 100},
        "env": {"grid_m": 100, "eta": 0.2},
        "agent": {"policy": "ma", "B": 1.0, "delta": 0.1, "beta_scale": 0.2, "c": 2},
        "sim": {"T": 1500, "n_trials": 100},
    },
}


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return apply_mapping(ExperimentConfig(), copy.deepcopy(PRESETS[name]))


def parse_config(data: dict[str, Any] | None) -> ExperimentConfig:
    data = dict(data or {})
    name = data.get("preset")
    cfg = preset(name) if name is not None else ExperimentConfig()
    return apply_mapping(cfg, data)


def load_config(path: str | os.PathLike | None = None, preset_name: str | None = None,
                overrides: list[str] | None = None, env: dict[str, str] | None = None) -> ExperimentConfig:
    """Resolve a config from an optional file, preset, ``key=value`` overrides and the environment.

    Precedence, lowest first: defaults, preset, file, overrides, ``KERMAB_SEED``.
    Relative ``graph.edge_list_path`` values are resolved against the config file's directory.
    """
    data: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a mapping at top level")
    if preset_name is not None:
        if data.get("preset") not in (None, preset_name):
            raise ConfigError(f"--preset {preset_name} conflicts with preset {data['preset']} in {path}")
        data["preset"] = preset_name
    cfg = parse_config(data)
    if path is not None and cfg.graph.edge_list_path is not None:
        elp = Path(cfg.graph.edge_list_path)
        if not elp.is_absolute():
            cfg.graph.edge_list_path = str(path.parent / elp)
    for item in overrides or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        set_value(cfg, key.strip(), yaml.safe_load(raw))
    env = os.environ if env is None else env
    if env.get(SEED_ENV_VAR):
        try:
            cfg.sim.base_seed = int(env[SEED_ENV_VAR])
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env[SEED_ENV_VAR]!r}") from None
    return cfg.validate()
