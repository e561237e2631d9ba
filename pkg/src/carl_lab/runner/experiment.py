"""Training and evaluation loop for one experiment cell.

Each (cell, seed) job owns its environments, agent, replay buffer and random
streams, all derived from the seed. Training cycles through the training
contexts round-robin (episode ``k`` uses context ``k mod N``) and pauses every
``eval_period`` steps, including step 0, to roll out the greedy policy on
the evaluation sets. Evaluation runs on separate environment instances with
its own random streams and never touches the buffer or the exploration noise.
"""

from __future__ import annotations

import csv
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..agents import DQNAgent, ObservationBuilder, ReplayBuffer, TD3Agent
from ..context import ContextSet, write_context_csv
from ..envs import get_space, make_env
from ..errors import NonFiniteLoss
from ..nets import save_params
from ..protocols import ProtocolSpec, generate_protocol
from ..sampling import GaussianContextSampler, IntervalContextSampler, compounding_sets
from .config import ExperimentConfig

RESULT_COLUMNS = [
    "experiment_id",
    "seed",
    "step",
    "context_id",
    "region",
    "episode",
    "episode_return",
    "episode_length",
    "wall_time",
]
TRAIN_LOG_COLUMNS = [
    "experiment_id",
    "seed",
    "episode",
    "context_id",
    "start_step",
    "episode_return",
    "episode_length",
]

TRAIN_REGION = "train"


def build_context_sets(cfg: ExperimentConfig, seed: int) -> tuple[ContextSet, dict[str, ContextSet]]:
    """Training contexts and the evaluation sets keyed by region label."""
    space = get_space(cfg.env)
    s = cfg.sampler
    n = cfg.n_contexts
    if s.kind == "none" or (s.kind == "gaussian" and not s.varying):
        train = ContextSet.from_rows(space, [space.defaults] * n)
    elif s.kind == "gaussian":
        train = GaussianContextSampler.by_name(space, s.varying, s.sigma_rel, n, seed).sample()
    elif s.kind == "compounding":
        train = compounding_sets(space, s.order[: s.k], s.sigma_rel, n, seed)[s.k]
    elif s.kind == "interval":
        train = IntervalContextSampler(
            space, space.index(s.feature), s.intervals, s.weights, n, seed
        ).sample()
    else:
        spec = protocol_spec(cfg, seed)
        train, tests = generate_protocol(spec)
        return train, {label.value: cs for label, cs in tests.items()}
    return train, {TRAIN_REGION: train}


def protocol_spec(cfg: ExperimentConfig, seed: int) -> ProtocolSpec:
    s = cfg.sampler
    space = get_space(cfg.env)
    extra = dict(
        band_fraction=s.band_fraction,
        n_train=cfg.n_contexts,
        n_test_per_region=s.n_test_per_region,
        seed=seed,
    )
    spec = ProtocolSpec.around_defaults(space, s.x, s.y, s.mode, s.rel_width, **extra)
    if s.train_range_x or s.train_range_y:
        spec = ProtocolSpec(
            space,
            spec.feature_x,
            spec.feature_y,
            spec.mode,
            s.train_range_x or spec.train_range_x,
            s.train_range_y or spec.train_range_y,
            **extra,
        )
    return spec


class ResultsWriter:
    """Serializes appends from concurrent workers to one CSV file."""

    def __init__(self, path: Path, columns: list[str]):
        self.path = Path(path)
        self.columns = columns
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerow(columns)

    def append(self, rows: list[list]) -> None:
        with self._lock, open(self.path, "a", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass
class _Job:
    cfg: ExperimentConfig
    seed: int
    results: ResultsWriter
    train_log: ResultsWriter
    out_dir: Path
    t0: float = field(default_factory=time.perf_counter)


def _make_env(cfg: ExperimentConfig):
    kwargs = {"max_episode_steps": cfg.max_episode_steps}
    if cfg.env == "pendulum":
        kwargs["trig_obs"] = cfg.trig_obs
    return make_env(cfg.env, **kwargs)


def _make_agent(cfg: ExperimentConfig, env, builder: ObservationBuilder, seed: int):
    mode = cfg.conditioning.value
    if cfg.agent == "dqn":
        return DQNAgent(env.state_dim, builder.context_dim, env.n_actions, mode, cfg.agent_config, seed)
    return TD3Agent(env.state_dim, builder.context_dim, env.action_dim, mode, cfg.agent_config, seed)


def evaluate(
    cfg: ExperimentConfig,
    agent,
    builder: ObservationBuilder,
    eval_sets: dict[str, ContextSet],
    seed: int,
    step: int,
) -> list[tuple[str, int, int, float, int]]:
    """Greedy rollouts on every evaluation context, stepped in lockstep batches.

    Returns ``(region, context_id, episode, return, length)`` tuples.
    """
    envs, meta, obs = [], [], []
    for r, (region, cs) in enumerate(eval_sets.items()):
        for ctx in cs:
            feats = builder.context_features(ctx)
            for ep in range(cfg.eval_episodes):
                env = _make_env(cfg)
                rng = np.random.default_rng([seed, 7919, step, r, ctx.id, ep])
                obs.append(np.concatenate([env.reset(ctx, rng), feats]))
                envs.append((env, feats))
                meta.append((region, ctx.id, ep))
    returns = np.zeros(len(envs))
    lengths = np.zeros(len(envs), dtype=np.int64)
    active = list(range(len(envs)))
    current = np.array(obs)
    while active:
        batch = current[active]
        if cfg.agent == "dqn":
            actions = agent.greedy(batch)
        else:
            actions = agent.policy(batch) * envs[0][0].action_scale
        still = []
        for i, a in zip(active, actions):
            env, feats = envs[i]
            res = env.step(a)
            returns[i] += res.reward
            lengths[i] += 1
            if not (res.terminated or res.truncated):
                current[i] = np.concatenate([res.next_state, feats])
                still.append(i)
        active = still
    return [(reg, cid, ep, float(returns[i]), int(lengths[i])) for i, (reg, cid, ep) in enumerate(meta)]


def run_seed(job: _Job) -> None:
    cfg, seed = job.cfg, job.seed
    train_set, eval_sets = build_context_sets(cfg, seed)
    builder = ObservationBuilder(get_space(cfg.env), cfg.conditioning, cfg.varying_indices)
    env = _make_env(cfg)
    agent = _make_agent(cfg, env, builder, seed)
    ac = cfg.agent_config
    discrete = cfg.agent == "dqn"
    buffer = ReplayBuffer(ac.buffer_size, env.state_dim + builder.context_dim, env.action_dim or 1, discrete)
    env_rng = np.random.default_rng([seed, 11])
    sample_rng = np.random.default_rng([seed, 13])

    def do_eval(step: int) -> None:
        rows = evaluate(cfg, agent, builder, eval_sets, seed, step)
        wall = f"{time.perf_counter() - job.t0:.3f}"
        job.results.append(
            [[cfg.experiment_id, seed, step, cid, reg, ep, _fmt(ret), length, wall] for reg, cid, ep, ret, length in rows]
        )

    do_eval(0)
    step = 0
    episode = 0
    log_rows = []
    try:
        while step < cfg.total_steps:
            ctx = train_set.next_context(episode)
            feats = builder.context_features(ctx)
            obs = np.concatenate([env.reset(ctx, env_rng), feats])
            start, ep_return, ep_len = step, 0.0, 0
            while True:
                if discrete:
                    action = agent.act(obs, agent.epsilon(step, cfg.total_steps))
                    env_action = action
                else:
                    action = agent.random_action() if step < ac.warmup else agent.act(obs, explore=True)
                    env_action = action * env.action_scale
                res = env.step(env_action)
                next_obs = np.concatenate([res.next_state, feats])
                buffer.push(obs, action, res.reward, next_obs, res.terminated)
                obs = next_obs
                step += 1
                ep_return += res.reward
                ep_len += 1
                if len(buffer) >= ac.batch_size:
                    if discrete:
                        if step >= ac.warmup and step % ac.train_freq == 0:
                            agent.train_step(buffer.sample(ac.batch_size, sample_rng))
                    elif step >= ac.warmup:
                        agent.train_step(buffer.sample(ac.batch_size, sample_rng), step)
                if step % cfg.eval_period == 0:
                    do_eval(step)
                if res.terminated or res.truncated or step >= cfg.total_steps:
                    break
            log_rows.append([cfg.experiment_id, seed, episode, ctx.id, start, _fmt(ep_return), ep_len])
            if not discrete:
                agent.end_episode()
            episode += 1
    except NonFiniteLoss as exc:
        raise NonFiniteLoss(f"{cfg.experiment_id} seed {seed} step {step}: {exc}") from exc
    if cfg.total_steps % cfg.eval_period:
        do_eval(cfg.total_steps)
    job.train_log.append(log_rows)
    if cfg.checkpoints:
        _checkpoint(job, agent, step)


def _checkpoint(job: _Job, agent, step: int) -> None:
    cfg = job.cfg
    target = job.out_dir / "checkpoints" / cfg.experiment_id / f"seed{job.seed}"
    target.mkdir(parents=True, exist_ok=True)
    for name, net in agent.networks().items():
        save_params(net, target / f"{name}.bin")
    meta = [
        f"experiment_id = {cfg.experiment_id}",
        f"seed = {job.seed}",
        f"step = {step}",
        f"env = {cfg.env}",
        f"agent = {cfg.agent}",
        f"conditioning = {cfg.conditioning.value}",
        f"config_fingerprint = {cfg.fingerprint()}",
    ]
    (target / "meta.txt").write_text("\n".join(meta) + "\n", encoding="utf-8")


def results_path(out_dir: Path, experiment_id: str) -> Path:
    return Path(out_dir) / f"{experiment_id}.csv"


def train_log_path(out_dir: Path, experiment_id: str) -> Path:
    return Path(out_dir) / f"{experiment_id}.train.csv"


def run_experiments(
    configs: list[ExperimentConfig],
    out_dir: str | Path | None = None,
    threads: int = 1,
    seeds: tuple[int, ...] | None = None,
) -> list[Path]:
    """Run every cell and seed; returns the results file of each cell.

    With ``threads > 1`` jobs run concurrently and rows from different seeds
    may interleave; ``threads=1`` runs jobs in order and is byte-reproducible.
    """
    jobs, paths = [], []
    for cfg in configs:
        out = Path(out_dir) if out_dir is not None else cfg.output
        path = results_path(out, cfg.experiment_id)
        results = ResultsWriter(path, RESULT_COLUMNS)
        train_log = ResultsWriter(train_log_path(out, cfg.experiment_id), TRAIN_LOG_COLUMNS)
        paths.append(path)
        for seed in seeds or cfg.seeds:
            jobs.append(_Job(cfg, seed, results, train_log, out))
            _write_contexts(cfg, seed, out)
    if threads <= 1:
        for job in jobs:
            job.t0 = time.perf_counter()
            run_seed(job)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for f in [pool.submit(run_seed, job) for job in jobs]:
                f.result()
    return paths


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None, threads: int = 1) -> Path:
    return run_experiments([cfg], out_dir, threads)[0]


def _write_contexts(cfg: ExperimentConfig, seed: int, out: Path) -> None:
    """Record the context sets each seed trains and evaluates on."""
    space = get_space(cfg.env)
    train, evals = build_context_sets(cfg, seed)
    target = out / "contexts" / cfg.experiment_id
    target.mkdir(parents=True, exist_ok=True)
    write_context_csv(target / f"seed{seed}_train.csv", train, space)
    if set(evals) != {TRAIN_REGION}:
        rows, regions = [], []
        for region, cs in evals.items():
            rows.extend(cs)
            regions.extend([region] * len(cs))
        write_context_csv(target / f"seed{seed}_test.csv", rows, space, {"region": regions})
