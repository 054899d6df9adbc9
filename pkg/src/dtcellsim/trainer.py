"""Parallel multi-environment rollout collection and the budgeted train loop.

K twin environments run at different user densities with one shared policy
snapshot per round. Each environment owns its random streams and its users'
recurrent memories, so rounds can be collected concurrently yet the merged
buffer is bit-identical to a sequential run: workers never share mutable
state and results are folded in environment order.
"""

from __future__ import annotations

import io
import json
import os
import zipfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .agent.gae import gae_advantages
from .agent.policy import PolicyNetwork, act_batch
from .agent.ppo import ChunkBatch, PpoHyper, ppo_update
from .agent.weights import pack_weights, unpack_weights
from .errors import CheckpointError, ConfigError
from .netenv import NetworkEnv
from .scenario import ScenarioConfig

CHECKPOINT_VERSION = 1

CURVE_HEADER = ["round", "samples_seen", "mean_utility", "mean_reward",
                "entropy", "kl", "user_count_mean", "user_count_std"]


def worker_count(k: int) -> int:
    """Worker threads for K environments, capped by DT_CELLSIM_THREADS."""
    cap = os.environ.get("DT_CELLSIM_THREADS")
    cap = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(k, cap))


@dataclass
class TrainerConfig:
    parallel_envs: int = 1
    rollout_length: int = 64
    sample_budget: int = 200_000
    checkpoint_interval: int = 100  # rounds between checkpoints
    seed: int = 0
    hidden_size: int = 128
    densities: list[int] | None = None  # default: even spread over the range
    disturb_magnitude: float = 0.0
    arrival_rate: float = 0.5
    arrival_rates: list[float] | None = None  # per-env override of arrival_rate
    duration_range: tuple[float, float] = (60.0, 240.0)
    ppo: PpoHyper = field(default_factory=PpoHyper)

    def validate(self):
        if self.parallel_envs < 1:
            raise ConfigError("parallel_envs must be >= 1")
        if self.sample_budget <= 0:
            raise ConfigError("sample_budget must be positive")
        if self.rollout_length < 1:
            raise ConfigError("rollout_length must be >= 1")
        if (self.arrival_rates is not None
                and len(self.arrival_rates) != self.parallel_envs):
            raise ConfigError("arrival_rates must list one rate per environment")
        self.ppo.validate()

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["ppo"] = dict(self.ppo.__dict__)
        d["duration_range"] = list(self.duration_range)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "TrainerConfig":
        data = dict(data)
        data["ppo"] = PpoHyper(**data.get("ppo", {}))
        data["duration_range"] = tuple(data.get("duration_range", (60.0, 240.0)))
        return cls(**data)


def density_spread(user_count_range: tuple[int, int], k: int) -> list[int]:
    """Initial user counts: the range midpoint for K=1, even spacing otherwise."""
    lo, hi = user_count_range
    if k == 1:
        return [int(round((lo + hi) / 2))]
    return [int(round(lo + i * (hi - lo) / (k - 1))) for i in range(k)]


def spawn_envs(scenario: ScenarioConfig, source_factory, config: TrainerConfig,
               channel=None) -> list[NetworkEnv]:
    """Create and reset K environments with independent seed streams."""
    k = config.parallel_envs
    seeds = np.random.SeedSequence(config.seed).spawn(k + 1)[:k]
    densities = config.densities or density_spread(scenario.user_count_range, k)
    if len(densities) != k:
        raise ConfigError("densities must list one initial count per environment")
    rates = config.arrival_rates or [config.arrival_rate] * k
    if len(rates) != k:
        raise ConfigError("arrival_rates must list one rate per environment")
    envs = []
    for i in range(k):
        env = NetworkEnv(
            scenario, source_factory(), seed=seeds[i], channel=channel,
            disturb_magnitude=config.disturb_magnitude,
            arrival_rate=rates[i],
            duration_range=config.duration_range,
        )
        env.reset(densities[i])
        envs.append(env)
    return envs


@dataclass
class UserRun:
    """Contiguous slots of one user within one round, plus chunk-start memories."""

    env_index: int
    uid: int
    start_slot: int
    obs: np.ndarray  # (T, 3B) float32
    masks: np.ndarray  # (T, B) bool, exactly as enforced during collection
    actions: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    mem_h: np.ndarray  # (n_chunks, H), memory at each chunk start
    mem_c: np.ndarray
    bootstrap_value: float

    def __len__(self):
        return len(self.actions)


class ValueNormalizer:
    """Running location/scale mapping between raw returns and critic outputs.

    Log-utility returns sit around r/(1-gamma), two orders of magnitude above
    anything a freshly initialised head emits, and regressing that raw target
    through the shared trunk starves the policy gradient. The critic therefore
    predicts returns in normalised units; raw-scale values for GAE are rebuilt
    with the statistics that were current when the prediction was made. The
    EMAs are debiased so the very first round already trains at its own scale.
    """

    decay = 0.9
    min_std = 1e-3

    def __init__(self):
        self._mean_acc = 0.0
        self._std_acc = 0.0
        self._weight = 0.0

    @property
    def mean(self) -> float:
        return self._mean_acc / self._weight if self._weight else 0.0

    @property
    def std(self) -> float:
        if not self._weight:
            return 1.0
        return max(self._std_acc / self._weight, self.min_std)

    def denormalize(self, value):
        return self.mean + self.std * value

    def normalize(self, raw):
        return (raw - self.mean) / self.std

    def update(self, raw_returns: np.ndarray) -> None:
        d = self.decay
        self._mean_acc = d * self._mean_acc + (1 - d) * float(raw_returns.mean())
        self._std_acc = d * self._std_acc + (1 - d) * float(raw_returns.std())
        self._weight = d * self._weight + (1 - d)

    def state(self) -> dict:
        return {"mean_acc": self._mean_acc, "std_acc": self._std_acc,
                "weight": self._weight}

    @classmethod
    def from_state(cls, data: dict) -> "ValueNormalizer":
        vn = cls()
        vn._mean_acc = data["mean_acc"]
        vn._std_acc = data["std_acc"]
        vn._weight = data["weight"]
        return vn


class SampleBuffer:
    """Everything one collection round produced, grouped by (env, user)."""

    def __init__(self, seq_length: int):
        self.seq_length = seq_length
        self.runs: list[UserRun] = []
        self.step_user_counts: list[int] = []
        self.step_utilities: list[float] = []

    def size(self) -> int:
        return int(sum(len(r) for r in self.runs))

    def per_sample_user_counts(self) -> np.ndarray:
        return np.repeat(np.asarray(self.step_user_counts),
                         np.asarray(self.step_user_counts))

    def mean_reward(self) -> float:
        total = sum(float(r.rewards.sum()) for r in self.runs)
        return total / max(self.size(), 1)

    def mean_utility(self) -> float:
        return float(np.mean(self.step_utilities)) if self.step_utilities else 0.0

    def to_chunks(self, hyper: PpoHyper, dtype=torch.float32,
                  value_norm: ValueNormalizer | None = None) -> ChunkBatch:
        """Cut runs into fixed-length chunks with advantages already attached.

        With a normalizer, stored values are denormalized before GAE (they
        came out of a head trained on normalized targets), the normalizer is
        updated from this round's raw returns, and the regression targets are
        re-expressed in the updated units.
        """
        seq = self.seq_length
        obs_dim = self.runs[0].obs.shape[1]
        n_bs = obs_dim // 3
        chunks_obs, chunks_mask, chunks_act = [], [], []
        chunks_logp, chunks_adv, chunks_ret, chunks_valid = [], [], [], []
        chunks_h, chunks_c = [], []

        per_run = []
        for run in self.runs:
            values, boot = run.values, run.bootstrap_value
            if value_norm is not None:
                values = value_norm.denormalize(values)
                boot = value_norm.denormalize(boot)
            per_run.append(gae_advantages(run.rewards, values, run.dones,
                                          hyper.discount, hyper.gae_lambda,
                                          last_value=boot))
        if value_norm is not None and per_run:
            value_norm.update(np.concatenate([ret for _, ret in per_run]))
            per_run = [(adv, value_norm.normalize(ret)) for adv, ret in per_run]

        for run, (adv, ret) in zip(self.runs, per_run):
            t = len(run)
            for k in range(0, t, seq):
                hi = min(k + seq, t)
                length = hi - k
                o = np.zeros((seq, obs_dim), dtype=np.float32)
                o[:length] = run.obs[k:hi]
                m = np.ones((seq, n_bs), dtype=bool)  # padding keeps a sane mask
                m[:length] = run.masks[k:hi]
                a = np.zeros(seq, dtype=np.int64)
                a[:length] = run.actions[k:hi]
                lp = np.zeros(seq, dtype=np.float64)
                lp[:length] = run.log_probs[k:hi]
                ad = np.zeros(seq, dtype=np.float64)
                ad[:length] = adv[k:hi]
                rt = np.zeros(seq, dtype=np.float64)
                rt[:length] = ret[k:hi]
                va = np.zeros(seq, dtype=bool)
                va[:length] = True
                chunk_index = k // seq
                chunks_obs.append(o)
                chunks_mask.append(m)
                chunks_act.append(a)
                chunks_logp.append(lp)
                chunks_adv.append(ad)
                chunks_ret.append(rt)
                chunks_valid.append(va)
                chunks_h.append(run.mem_h[chunk_index])
                chunks_c.append(run.mem_c[chunk_index])
        return ChunkBatch(
            obs=np.stack(chunks_obs), mask=np.stack(chunks_mask),
            actions=np.stack(chunks_act), old_logp=np.stack(chunks_logp),
            advantages=np.stack(chunks_adv), returns=np.stack(chunks_ret),
            valid=np.stack(chunks_valid), h0=np.stack(chunks_h),
            c0=np.stack(chunks_c), dtype=dtype,
        )


class _RunAccum:
    __slots__ = ("start_slot", "obs", "masks", "actions", "log_probs", "values",
                 "rewards", "dones", "mem_h", "mem_c")

    def __init__(self, start_slot: int):
        self.start_slot = start_slot
        self.obs: list[np.ndarray] = []
        self.masks: list[np.ndarray] = []
        self.actions: list[int] = []
        self.log_probs: list[float] = []
        self.values: list[float] = []
        self.rewards: list[float] = []
        self.dones: list[bool] = []
        self.mem_h: list[np.ndarray] = []
        self.mem_c: list[np.ndarray] = []

    def finish(self, env_index: int, uid: int, bootstrap: float) -> UserRun:
        return UserRun(
            env_index=env_index, uid=uid, start_slot=self.start_slot,
            obs=np.asarray(self.obs, dtype=np.float32),
            masks=np.asarray(self.masks, dtype=bool),
            actions=np.asarray(self.actions, dtype=np.int64),
            log_probs=np.asarray(self.log_probs, dtype=np.float64),
            values=np.asarray(self.values, dtype=np.float64),
            rewards=np.asarray(self.rewards, dtype=np.float64),
            dones=np.asarray(self.dones, dtype=bool),
            mem_h=np.asarray(self.mem_h, dtype=np.float32),
            mem_c=np.asarray(self.mem_c, dtype=np.float32),
            bootstrap_value=float(bootstrap),
        )


def _collect_env(env_index: int, env: NetworkEnv, net: PolicyNetwork,
                 memories: dict, rollout_length: int, seq_length: int):
    """Advance one environment a full round under a frozen policy snapshot."""
    hidden = net.hidden
    active: dict[int, _RunAccum] = {}
    finished: list[UserRun] = []
    counts: list[int] = []
    utilities: list[float] = []
    rewards_sum = 0.0
    for _ in range(rollout_length):
        uids = list(env.uids)
        obs = env.obs_matrix.astype(np.float32)
        masks = env.masks()
        h = np.zeros((len(uids), hidden), dtype=np.float32)
        c = np.zeros((len(uids), hidden), dtype=np.float32)
        for i, uid in enumerate(uids):
            if uid in memories:
                h[i], c[i] = memories[uid]
            if uid not in active:
                active[uid] = _RunAccum(env.slot)
            run = active[uid]
            if len(run.actions) % seq_length == 0:
                run.mem_h.append(h[i].copy())
                run.mem_c.append(c[i].copy())
        mem_t = (torch.from_numpy(h), torch.from_numpy(c))
        actions, logps, values, (h2, c2) = act_batch(net, obs, mem_t, masks,
                                                     env.action_rng)
        h2 = h2.numpy()
        c2 = c2.numpy()
        for i, uid in enumerate(uids):
            memories[uid] = (h2[i].copy(), c2[i].copy())
        samples, info = env.step(actions, logps, values)
        counts.append(info["n_users"])
        utilities.append(info["utility"])
        for i, sample in enumerate(samples):
            run = active[sample.uid]
            run.obs.append(sample.observation)
            run.masks.append(masks[i])
            run.actions.append(sample.action)
            run.log_probs.append(sample.log_probability)
            run.values.append(sample.value)
            run.rewards.append(sample.reward)
            run.dones.append(sample.done)
            rewards_sum += sample.reward
            if sample.done:
                finished.append(run.finish(env_index, sample.uid, 0.0))
                del active[sample.uid]
                memories.pop(sample.uid, None)
    # bootstrap values for runs cut off by the round boundary
    live_uids = [uid for uid in env.uids if uid in active]
    if live_uids:
        rows = {uid: i for i, uid in enumerate(env.uids)}
        obs = env.obs_matrix[[rows[u] for u in live_uids]].astype(np.float32)
        masks = env.masks()[[rows[u] for u in live_uids]]
        h = np.stack([memories[u][0] for u in live_uids])
        c = np.stack([memories[u][1] for u in live_uids])
        with torch.no_grad():
            _, values, _ = net(torch.from_numpy(obs),
                               (torch.from_numpy(h), torch.from_numpy(c)),
                               torch.from_numpy(masks))
        boots = values.double().numpy()
        for i, uid in enumerate(live_uids):
            finished.append(active[uid].finish(env_index, uid, float(boots[i])))
            del active[uid]
    finished.sort(key=lambda r: (r.uid, r.start_slot))
    return finished, counts, utilities, rewards_sum


def collect_round(envs: list[NetworkEnv], net: PolicyNetwork,
                  memories: list[dict], rollout_length: int,
                  seq_length: int = 16) -> SampleBuffer:
    """Advance every environment one round and merge results in env order."""
    buffer = SampleBuffer(seq_length)
    workers = worker_count(len(envs))
    if workers == 1 or len(envs) == 1:
        results = [
            _collect_env(i, env, net, memories[i], rollout_length, seq_length)
            for i, env in enumerate(envs)
        ]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_collect_env, i, env, net, memories[i],
                            rollout_length, seq_length)
                for i, env in enumerate(envs)
            ]
            results = [f.result() for f in futures]
    for finished, counts, utilities, _ in results:
        buffer.runs.extend(finished)
        buffer.step_user_counts.extend(counts)
        buffer.step_utilities.extend(utilities)
    return buffer


class Trainer:
    """Owns the policy, optimizer, environments, and the sample budget."""

    def __init__(self, config: TrainerConfig, scenario: ScenarioConfig,
                 source_factory, channel=None):
        config.validate()
        self.config = config
        self.scenario = scenario
        self.source_factory = source_factory
        self.net = PolicyNetwork(scenario.num_bs, hidden=config.hidden_size,
                                 seed=config.seed)
        self.optimizer = torch.optim.Adam(self.net.parameters(),
                                          lr=config.ppo.learning_rate)
        self.envs = spawn_envs(scenario, source_factory, config, channel=channel)
        self.memories: list[dict] = [dict() for _ in self.envs]
        master_ss = np.random.SeedSequence(config.seed).spawn(
            config.parallel_envs + 1)[-1]
        self.master_rng = np.random.default_rng(master_ss)
        self.value_norm = ValueNormalizer()
        self.round = 0
        self.samples_seen = 0
        self.env_steps = 0  # per-environment step count
        self.curve: list[dict] = []
        self.nonfinite_rounds = 0

    def run_round(self) -> dict:
        buffer = collect_round(self.envs, self.net, self.memories,
                               self.config.rollout_length,
                               self.config.ppo.seq_length)
        self.samples_seen += buffer.size()
        self.env_steps += self.config.rollout_length
        self.round += 1
        stats = {}
        if self.config.ppo.epochs > 0 and buffer.size() > 0:
            batch = buffer.to_chunks(self.config.ppo, value_norm=self.value_norm)
            stats = ppo_update(self.net, self.optimizer, batch, self.config.ppo,
                               self.master_rng)
            finite = np.isfinite([stats.get("surrogate", 0.0),
                                  stats.get("value_loss", 0.0)]).all()
            self.nonfinite_rounds = 0 if finite else self.nonfinite_rounds + 1
            if self.nonfinite_rounds >= 3:
                raise RuntimeError(
                    "losses were non-finite for 3 consecutive rounds; "
                    "check reward scaling and learning rate")
        counts = buffer.per_sample_user_counts()
        row = {
            "round": self.round,
            "samples_seen": self.samples_seen,
            "mean_utility": buffer.mean_utility(),
            "mean_reward": buffer.mean_reward(),
            "entropy": stats.get("entropy", 0.0),
            "kl": stats.get("approx_kl", 0.0),
            "user_count_mean": float(counts.mean()) if counts.size else 0.0,
            "user_count_std": float(counts.std()) if counts.size else 0.0,
        }
        self.curve.append(row)
        return row

    def train(self, checkpoint_dir=None) -> dict:
        """Loop rounds until the sample budget is consumed; checkpoint as asked.

        If a round faults after a checkpoint exists, in-memory state is rolled
        back to that checkpoint before the error propagates, so the trainer
        object stays usable and no partial round leaks into the sample count.
        """
        paths = []
        while self.samples_seen < self.config.sample_budget:
            try:
                self.run_round()
            except Exception:
                if paths:
                    self._rollback(paths[-1])
                raise
            if (checkpoint_dir is not None
                    and self.round % self.config.checkpoint_interval == 0):
                paths.append(self.save_checkpoint(
                    Path(checkpoint_dir) / f"checkpoint_round{self.round}.dtck"))
        if checkpoint_dir is not None:
            paths.append(self.save_checkpoint(
                Path(checkpoint_dir) / "checkpoint_final.dtck"))
        return {
            "rounds": self.round,
            "samples_seen": self.samples_seen,
            "env_steps": self.env_steps,
            "env_steps_total": self.env_steps * self.config.parallel_envs,
            "curve": self.curve,
            "checkpoints": [str(p) for p in paths],
        }

    def _rollback(self, checkpoint_path) -> None:
        clean = Trainer.restore_checkpoint(checkpoint_path, self.source_factory)
        for name in ("net", "optimizer", "envs", "memories", "master_rng",
                     "round", "samples_seen", "env_steps", "curve",
                     "nonfinite_rounds", "value_norm"):
            setattr(self, name, getattr(clean, name))

    # -- persistence --------------------------------------------------------

    def _optimizer_arrays(self) -> dict[str, np.ndarray]:
        arrays = {}
        for name, param in self.net.named_parameters():
            state = self.optimizer.state.get(param)
            if not state:
                continue
            arrays[f"adam.{name}.step"] = np.asarray(
                [float(state["step"])], dtype=np.float32)
            arrays[f"adam.{name}.exp_avg"] = state["exp_avg"].numpy()
            arrays[f"adam.{name}.exp_avg_sq"] = state["exp_avg_sq"].numpy()
        return arrays

    def _load_optimizer_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for name, param in self.net.named_parameters():
            key = f"adam.{name}.step"
            if key not in arrays:
                continue
            self.optimizer.state[param] = {
                "step": torch.tensor(float(arrays[key][0])),
                "exp_avg": torch.from_numpy(arrays[f"adam.{name}.exp_avg"].copy()),
                "exp_avg_sq": torch.from_numpy(
                    arrays[f"adam.{name}.exp_avg_sq"].copy()),
            }

    def save_checkpoint(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        manifest = {
            "format_version": CHECKPOINT_VERSION,
            "kind": "dt-trainer-checkpoint",
            "round": self.round,
            "samples_seen": self.samples_seen,
            "env_steps": self.env_steps,
            "trainer_config": self.config.to_dict(),
            "scenario": self.scenario.to_dict(),
            "master_rng": self.master_rng.bit_generator.state,
            "nonfinite_rounds": self.nonfinite_rounds,
            "value_norm": self.value_norm.state(),
            "curve": self.curve,
            "n_envs": len(self.envs),
        }
        with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as zf:
            zf.writestr("manifest.json", json.dumps(manifest))
            zf.writestr("weights.bin", pack_weights(self.net.named_arrays()))
            zf.writestr("adam.bin", pack_weights(self._optimizer_arrays()))
            for i, env in enumerate(self.envs):
                zf.writestr(f"env_{i}.json", json.dumps(env.to_snapshot()))
                mem = self.memories[i]
                uids = sorted(mem)
                buf = io.BytesIO()
                np.savez(
                    buf,
                    uids=np.asarray(uids, dtype=np.int64),
                    h=(np.stack([mem[u][0] for u in uids])
                       if uids else np.zeros((0, self.net.hidden), np.float32)),
                    c=(np.stack([mem[u][1] for u in uids])
                       if uids else np.zeros((0, self.net.hidden), np.float32)),
                )
                zf.writestr(f"memories_{i}.npz", buf.getvalue())
        return path

    @classmethod
    def restore_checkpoint(cls, path, source_factory, channel=None) -> "Trainer":
        path = Path(path)
        try:
            with zipfile.ZipFile(path) as zf:
                manifest = json.loads(zf.read("manifest.json"))
                if manifest.get("kind") != "dt-trainer-checkpoint":
                    raise CheckpointError(f"{path} is not a trainer checkpoint")
                if manifest.get("format_version") != CHECKPOINT_VERSION:
                    raise CheckpointError(
                        f"checkpoint format version "
                        f"{manifest.get('format_version')} is not supported "
                        f"(expected {CHECKPOINT_VERSION})")
                weights = unpack_weights(zf.read("weights.bin"))
                adam = unpack_weights(zf.read("adam.bin"))
                env_snapshots = [
                    json.loads(zf.read(f"env_{i}.json"))
                    for i in range(manifest["n_envs"])
                ]
                memory_blobs = [
                    np.load(io.BytesIO(zf.read(f"memories_{i}.npz")))
                    for i in range(manifest["n_envs"])
                ]
        except (zipfile.BadZipFile, KeyError) as exc:
            raise CheckpointError(f"unreadable checkpoint {path}: {exc}") from exc
        config = TrainerConfig.from_dict(manifest["trainer_config"])
        scenario = ScenarioConfig.from_dict(manifest["scenario"])
        trainer = cls(config, scenario, source_factory, channel=channel)
        trainer.net.load_arrays(weights)
        trainer._load_optimizer_arrays(adam)
        trainer.round = manifest["round"]
        trainer.samples_seen = manifest["samples_seen"]
        trainer.env_steps = manifest["env_steps"]
        trainer.nonfinite_rounds = manifest.get("nonfinite_rounds", 0)
        if "value_norm" in manifest:
            trainer.value_norm = ValueNormalizer.from_state(manifest["value_norm"])
        trainer.curve = list(manifest.get("curve", []))
        trainer.master_rng.bit_generator.state = manifest["master_rng"]
        for i, env in enumerate(trainer.envs):
            env.restore_snapshot(env_snapshots[i])
            blob = memory_blobs[i]
            trainer.memories[i] = {
                int(uid): (blob["h"][j].copy(), blob["c"][j].copy())
                for j, uid in enumerate(blob["uids"])
            }
        return trainer


def load_policy_checkpoint(path):
    """Read just (net, scenario, trainer config) from a checkpoint.

    Evaluation needs the frozen policy, not the environments, so this skips
    env snapshots entirely.
    """
    path = Path(path)
    try:
        with zipfile.ZipFile(path) as zf:
            manifest = json.loads(zf.read("manifest.json"))
            if manifest.get("kind") != "dt-trainer-checkpoint":
                raise CheckpointError(f"{path} is not a trainer checkpoint")
            if manifest.get("format_version") != CHECKPOINT_VERSION:
                raise CheckpointError(
                    f"checkpoint format version {manifest.get('format_version')}"
                    f" is not supported (expected {CHECKPOINT_VERSION})")
            weights = unpack_weights(zf.read("weights.bin"))
    except (zipfile.BadZipFile, KeyError) as exc:
        raise CheckpointError(f"unreadable checkpoint {path}: {exc}") from exc
    config = TrainerConfig.from_dict(manifest["trainer_config"])
    scenario = ScenarioConfig.from_dict(manifest["scenario"])
    net = PolicyNetwork(scenario.num_bs, hidden=config.hidden_size,
                        seed=config.seed)
    net.load_arrays(weights)
    return net, scenario, config


def write_curve_csv(curve: list[dict], path) -> None:
    lines = [",".join(CURVE_HEADER)]
    for row in curve:
        lines.append(
            f"{row['round']},{row['samples_seen']},{row['mean_utility']:.6f},"
            f"{row['mean_reward']:.6f},{row['entropy']:.6f},{row['kl']:.6f},"
            f"{row['user_count_mean']:.6f},{row['user_count_std']:.6f}")
    Path(path).write_text("\n".join(lines) + "\n")
