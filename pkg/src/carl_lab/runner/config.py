"""Experiment configuration files.

INI-style: ``[section]`` headers, ``key = value`` pairs, ``#`` comments,
comma-separated lists. A ``[grid]`` section sweeps settings: each key names
``section.key`` and lists alternatives separated by ``|``; every combination
becomes one experiment cell with its own results file.

Example::

    [experiment]
    id = q1
    env = pendulum
    agent = td3
    conditioning = hidden
    total_steps = 30000
    eval_period = 5000
    seeds = 0, 1, 2

    [sampler]
    kind = gaussian
    varying = dt
    sigma_rel = 0.1

    [grid]
    sampler.sigma_rel = 0.1 | 0.25 | 0.5
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import itertools
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..agents import DQNConfig, TD3Config
from ..context import VisibilityMode
from ..envs import ENVS, get_space
from ..errors import ConfigError

SEED_ENV_VAR = "CARL_LAB_SEED"

AGENTS = {"td3": TD3Config, "dqn": DQNConfig}
SAMPLER_KINDS = ("none", "gaussian", "interval", "compounding", "protocol")

# desk-scale defaults per environment: (total_steps, eval_period)
DESK_SCALE = {"pendulum": (30_000, 5_000), "cartpole": (60_000, 10_000), "mountaincar": (60_000, 10_000)}


def _split_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError(f"expected a range 'lo:hi', got {text!r}") from None
    return lo, hi


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


@dataclass
class SamplerSpec:
    kind: str = "gaussian"
    varying: tuple[str, ...] = ()
    sigma_rel: float = 0.1
    order: tuple[str, ...] = ()
    k: int = 0
    feature: str = ""
    intervals: tuple[tuple[float, float], ...] = ()
    weights: tuple[float, ...] | None = None
    x: str = ""
    y: str = ""
    mode: str = "A"
    train_range_x: tuple[float, float] | None = None
    train_range_y: tuple[float, float] | None = None
    rel_width: float = 0.5
    band_fraction: float = 0.1
    n_test_per_region: int = 100


@dataclass
class ExperimentConfig:
    experiment_id: str
    env: str
    agent: str
    conditioning: VisibilityMode
    sampler: SamplerSpec
    n_contexts: int = 100
    seeds: tuple[int, ...] = (0, 1, 2)
    total_steps: int = 30_000
    eval_period: int = 5_000
    eval_episodes: int = 1
    output: Path = Path("results")
    trig_obs: bool = False
    max_episode_steps: int | None = None
    agent_config: TD3Config | DQNConfig | None = None
    checkpoints: bool = True
    source: dict = field(default_factory=dict, repr=False)

    def fingerprint(self) -> str:
        text = repr(sorted((k, sorted(v.items())) for k, v in self.source.items()))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]

    @property
    def varying_indices(self) -> tuple[int, ...]:
        space = get_space(self.env)
        s = self.sampler
        if s.kind == "gaussian":
            return space.indices(s.varying)
        if s.kind == "compounding":
            return space.indices(s.order[: s.k])
        if s.kind == "interval":
            return (space.index(s.feature),)
        if s.kind == "protocol":
            return space.indices((s.x, s.y))
        return ()


def _coerce(value: str, target):
    if isinstance(target, bool):
        return _bool(value)
    if isinstance(target, int):
        return int(float(value))
    if isinstance(target, float):
        return float(value)
    if isinstance(target, tuple):
        return tuple(int(v) for v in _split_list(value))
    return value


def _agent_config(kind: str, section: dict) -> TD3Config | DQNConfig:
    cls = AGENTS[kind]
    defaults = cls()
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in section.items():
        if key not in names:
            raise ConfigError(f"[agent] has no setting {key!r} for {kind}; known: {sorted(names)}")
        kwargs[key] = _coerce(value, getattr(defaults, key))
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[agent] {exc}") from None


def _sampler(section: dict) -> SamplerSpec:
    s = SamplerSpec()
    for key, value in section.items():
        if key in ("varying", "order"):
            items = [] if value.strip().lower() in ("", "none") else _split_list(value)
            setattr(s, key, tuple(items))
        elif key in ("sigma_rel", "rel_width", "band_fraction"):
            setattr(s, key, float(value))
        elif key in ("k", "n_test_per_region"):
            setattr(s, key, int(value))
        elif key in ("kind", "feature", "x", "y", "mode"):
            setattr(s, key, value.strip())
        elif key == "intervals":
            s.intervals = tuple(_range(v) for v in _split_list(value))
        elif key == "weights":
            s.weights = tuple(float(v) for v in _split_list(value))
        elif key in ("train_range_x", "train_range_y"):
            setattr(s, key, _range(value))
        else:
            raise ConfigError(f"[sampler] unknown setting {key!r}")
    if s.kind not in SAMPLER_KINDS:
        raise ConfigError(f"[sampler] kind must be one of {SAMPLER_KINDS}, got {s.kind!r}")
    return s


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.env not in ENVS:
        raise ConfigError(f"unknown env {cfg.env!r}; known: {sorted(ENVS)}")
    if cfg.agent not in AGENTS:
        raise ConfigError(f"unknown agent {cfg.agent!r}; known: {sorted(AGENTS)}")
    env_cls = ENVS[cfg.env]
    if cfg.agent == "td3" and env_cls.n_actions is not None:
        raise ConfigError(f"td3 needs a continuous-action env, {cfg.env} is discrete")
    if cfg.agent == "dqn" and env_cls.n_actions is None:
        raise ConfigError(f"dqn needs a discrete-action env, {cfg.env} is continuous")
    space = get_space(cfg.env)
    s = cfg.sampler
    names = list(s.varying) + list(s.order) + [n for n in (s.feature, s.x, s.y) if n]
    for n in names:
        if n not in space.names:
            raise ConfigError(f"feature {n!r} does not exist in {cfg.env}; known: {space.names}")
    if s.kind == "compounding" and not 0 <= s.k <= len(s.order):
        raise ConfigError("compounding k must lie in 0..len(order)")
    if s.kind == "interval" and not (s.feature and s.intervals):
        raise ConfigError("interval sampler needs feature and intervals")
    if s.kind == "protocol" and not (s.x and s.y and s.mode in ("A", "B", "C")):
        raise ConfigError("protocol sampler needs x, y and mode A/B/C")
    if s.sigma_rel <= 0:
        raise ConfigError("sigma_rel must be positive")
    if len(set(cfg.seeds)) != len(cfg.seeds) or not cfg.seeds:
        raise ConfigError("seeds must be a non-empty list of distinct integers")
    if cfg.total_steps < 1 or cfg.eval_period < 1 or cfg.eval_episodes < 1 or cfg.n_contexts < 1:
        raise ConfigError("total_steps, eval_period, eval_episodes and n_contexts must be positive")


def _build(sections: dict[str, dict[str, str]], label: str) -> ExperimentConfig:
    exp = dict(sections.get("experiment", {}))
    env_section = dict(sections.get("env", {}))
    try:
        env = exp.pop("env")
        agent = exp.pop("agent", "td3" if env == "pendulum" else "dqn")
    except KeyError:
        raise ConfigError("[experiment] needs 'env'") from None
    total, period = DESK_SCALE.get(env, (30_000, 5_000))
    try:
        cfg = ExperimentConfig(
            experiment_id=exp.pop("id", "experiment") + label,
            env=env,
            agent=agent,
            conditioning=VisibilityMode(exp.pop("conditioning", "hidden")),
            sampler=_sampler(dict(sections.get("sampler", {}))),
            n_contexts=int(exp.pop("n_contexts", 100)),
            seeds=tuple(int(s) for s in _split_list(exp.pop("seeds", "0, 1, 2"))),
            total_steps=int(float(exp.pop("total_steps", total))),
            eval_period=int(float(exp.pop("eval_period", period))),
            eval_episodes=int(exp.pop("eval_episodes", 1)),
            output=Path(exp.pop("output", "results")),
            checkpoints=_bool(exp.pop("checkpoints", "true")),
            trig_obs=_bool(env_section.pop("trig_obs", "false")),
            max_episode_steps=(
                int(env_section.pop("max_episode_steps")) if "max_episode_steps" in env_section else None
            ),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if exp:
        raise ConfigError(f"[experiment] unknown settings {sorted(exp)}")
    if env_section:
        raise ConfigError(f"[env] unknown settings {sorted(env_section)}")
    if cfg.agent not in AGENTS:
        raise ConfigError(f"unknown agent {cfg.agent!r}; known: {sorted(AGENTS)}")
    cfg.agent_config = _agent_config(cfg.agent, dict(sections.get("agent", {})))
    cfg.source = {k: dict(v) for k, v in sections.items()}
    _validate(cfg)
    return cfg


def _slug(value: str) -> str:
    out = value.strip().replace(" ", "").replace(",", "+").replace(":", "~")
    return out or "none"


def parse_config(text: str, overrides: dict[str, str] | None = None) -> list[ExperimentConfig]:
    """Parse a config and expand its grid into one config per cell."""
    parser = configparser.ConfigParser(
        comment_prefixes=("#",), inline_comment_prefixes=("#",), interpolation=None
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    sections = {name: dict(parser[name]) for name in parser.sections()}
    grid = sections.pop("grid", {})
    for key, value in (overrides or {}).items():
        sec, _, name = key.partition(".")
        sections.setdefault(sec, {})[name] = value

    axes = []
    for key, value in grid.items():
        if "." not in key:
            raise ConfigError(f"[grid] keys must look like section.key, got {key!r}")
        axes.append((key, [v.strip() for v in value.split("|")]))
    cells = []
    for combo in itertools.product(*(alts for _, alts in axes)) if axes else [()]:
        cell = {k: dict(v) for k, v in sections.items()}
        label = ""
        for (key, _), value in zip(axes, combo):
            sec, _, name = key.partition(".")
            cell.setdefault(sec, {})[name] = value
            label += f"__{name}={_slug(value)}"
        cells.append(_build(cell, label))
    ids = [c.experiment_id for c in cells]
    if len(set(ids)) != len(ids):
        raise ConfigError("grid produced duplicate experiment ids")
    return cells


def load_config(path: str | Path, overrides: dict[str, str] | None = None) -> list[ExperimentConfig]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, overrides)


def seed_override(cli_seed: int | None) -> tuple[int, ...] | None:
    """``--seed`` wins over the environment variable; ``None`` keeps the config's seeds."""
    if cli_seed is not None:
        return (int(cli_seed),)
    env = os.environ.get(SEED_ENV_VAR)
    if env:
        try:
            return (int(env),)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from None
    return None

