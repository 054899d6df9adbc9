"""Slot-level network MDP: SINR, rates, handovers, rewards, and the step loop.

Each slot every active user picks one station from the top-N strongest SINRs.
Loads are the per-station user counts, a switch costs a stochastic handover
interruption, and the per-user service rate divides the Shannon rate by the
station load and the surviving slot fraction. Rewards blend the user's own
log-rate with the network-wide mean, so one scalar hyperparameter moves the
objective between selfish and cooperative.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .agent.masking import top_n_mask
from .errors import ContractViolation
from .population import PopulationProcess
from .radio import Channel, perturb_gain
from .scenario import HandoverModel, ScenarioConfig

# service rates are floored before logs so a dead slot cannot yield -inf utility
RATE_FLOOR = 1.0


@dataclass
class Observation:
    """Fixed-length per-user state: SINRs, previous loads, previous association."""

    sinr: np.ndarray  # (B,) linear
    prev_loads: np.ndarray  # (B,) user counts from the previous slot
    prev_assoc: np.ndarray  # (B,) one-hot, all-zero for a fresh arrival

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.sinr, self.prev_loads, self.prev_assoc])

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "Observation":
        n_bs = len(vec) // 3
        return cls(sinr=vec[:n_bs], prev_loads=vec[n_bs:2 * n_bs],
                   prev_assoc=vec[2 * n_bs:])


@dataclass
class TransitionSample:
    """One (s, a, s', R) tuple plus the behavior policy's log-prob and value."""

    uid: int
    observation: np.ndarray
    action: int
    next_observation: np.ndarray
    reward: float
    log_probability: float
    value: float
    done: bool


def achievable_rate(sinr, bandwidth):
    """Shannon rate c = W * log2(1 + SINR) in bits/s."""
    return bandwidth * np.log2(1.0 + np.asarray(sinr, dtype=np.float64))


def sample_handover(prev_assoc: int, new_assoc: int, model: HandoverModel,
                    rng: np.random.Generator) -> float:
    """Interruption seconds charged for this slot's association choice."""
    if prev_assoc == new_assoc or prev_assoc < 0:
        return 0.0
    if rng.random() < model.success_probability:
        return model.success_interruption
    return model.failure_interruption


def service_rate(c: float, load: int, t_ho: float, t_s: float) -> float:
    """Per-user service rate r = (c / load) * (1 - t_ho / t_s)."""
    if load < 1:
        raise ContractViolation("a served user implies its station load is >= 1")
    return (c / load) * (1.0 - t_ho / t_s)


def reward(own_utility: float, all_utilities, alpha: float, n_bs: int) -> float:
    """Blend of the user's own log-rate and the sum over users scaled by 1/|B|."""
    return alpha * own_utility + (1.0 - alpha) / n_bs * float(np.sum(all_utilities))


def sinr_vector(user_position, channel: Channel) -> np.ndarray:
    """Per-station linear SINR at one position; interference is intra-band only."""
    gains = channel.gain_matrix(np.asarray(user_position, dtype=np.float64)[None, :])
    return channel.sinr_matrix(gains)[0]


class NetworkEnv:
    """Single-owner environment; all randomness flows through two seeded streams.

    `dynamics` covers mobility, arrivals, handover outcomes and channel
    disturbance; `actions` is reserved for policy sampling so evaluation and
    training consume the same dynamics stream identically.
    """

    def __init__(self, config: ScenarioConfig, mobility_source, seed,
                 channel: Channel | None = None, disturb_magnitude: float = 0.0,
                 arrival_rate: float = 0.5, duration_range=(60.0, 240.0),
                 sample_log=None):
        self.config = config
        self.channel = channel if channel is not None else Channel(config)
        self.mobility_source = mobility_source
        self.disturb_magnitude = disturb_magnitude
        self.arrival_rate = arrival_rate
        self.duration_range = duration_range
        self.sample_log = sample_log
        self.n_bs = config.num_bs
        self._seed = seed
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        dyn_ss, act_ss = ss.spawn(2)
        self.dynamics_rng = np.random.default_rng(dyn_ss)
        self.action_rng = np.random.default_rng(act_ss)
        self.slot = 0
        self.population: PopulationProcess | None = None
        self.uids: list[int] = []
        self.assoc: dict[int, int] = {}
        self.loads = np.zeros(self.n_bs, dtype=np.int64)
        self.sinr = np.zeros((0, self.n_bs))
        self.obs_matrix = np.zeros((0, 3 * self.n_bs))

    @property
    def n_users(self) -> int:
        return len(self.uids)

    def _sense(self) -> np.ndarray:
        """SINR matrix at current positions, with optional channel disturbance."""
        positions = np.array(
            [self.population.position_of(uid, self.slot) for uid in self.uids]
        ).reshape(len(self.uids), 2)
        gains = self.channel.gain_matrix(positions)
        if self.disturb_magnitude > 0.0:
            gains = perturb_gain(gains, self.disturb_magnitude, self.dynamics_rng)
        return self.channel.sinr_matrix(gains)

    def _compose_matrix(self) -> np.ndarray:
        obs = np.zeros((self.n_users, 3 * self.n_bs))
        loads = self.loads.astype(np.float64)
        for i, uid in enumerate(self.uids):
            obs[i, : self.n_bs] = self.sinr[i]
            obs[i, self.n_bs: 2 * self.n_bs] = loads
            j = self.assoc[uid]
            if j >= 0:
                obs[i, 2 * self.n_bs + j] = 1.0
        return obs

    def compose_observation(self, uid: int) -> Observation:
        i = self.uids.index(uid)
        return Observation(
            sinr=self.sinr[i].copy(),
            prev_loads=self.loads.astype(np.float64),
            prev_assoc=self.obs_matrix[i, 2 * self.n_bs:].copy(),
        )

    def masks(self) -> np.ndarray:
        """Top-N action masks for the current observations, shape (U, B) bool."""
        n = self.config.mask_top_n
        return np.stack([top_n_mask(self.sinr[i], n) for i in range(self.n_users)])

    def reset(self, initial_user_count: int) -> np.ndarray:
        """Place the first users and associate them by strongest SINR."""
        self.slot = 0
        self.population = PopulationProcess(
            user_count_range=self.config.user_count_range,
            slot_duration=self.config.slot_duration,
            arrival_rate=self.arrival_rate,
            duration_range=self.duration_range,
        )
        self.population.seed_users(initial_user_count, self.mobility_source,
                                   self.dynamics_rng)
        self.uids = sorted(self.population.users)
        self.sinr = self._sense()
        init_assoc = np.argmax(self.sinr, axis=1)
        self.assoc = {uid: int(init_assoc[i]) for i, uid in enumerate(self.uids)}
        self.loads = np.bincount(init_assoc, minlength=self.n_bs).astype(np.int64)
        self.obs_matrix = self._compose_matrix()
        return self.obs_matrix

    def step(self, actions, log_probabilities=None, values=None):
        """Advance one slot. Returns (samples, info).

        `actions` maps one station index per active user (row order = sorted
        uid order); each must fall inside that user's current top-N mask.
        """
        actions = np.asarray(actions, dtype=np.int64)
        n_users = self.n_users
        if actions.shape != (n_users,):
            raise ContractViolation(
                f"expected {n_users} actions, got shape {actions.shape}")
        if np.any((actions < 0) | (actions >= self.n_bs)):
            raise ContractViolation("action index outside [0, |B|)")
        masks = self.masks()
        if not np.all(masks[np.arange(n_users), actions]):
            raise ContractViolation("an action fell outside its top-N SINR mask")
        if log_probabilities is None:
            log_probabilities = np.zeros(n_users)
        if values is None:
            values = np.zeros(n_users)

        model = self.config.handover
        t_s = self.config.slot_duration
        prev_assoc = np.array([self.assoc[uid] for uid in self.uids], dtype=np.int64)
        t_ho = np.zeros(n_users)
        for i, uid in enumerate(self.uids):
            t_ho[i] = sample_handover(int(prev_assoc[i]), int(actions[i]), model,
                                      self.dynamics_rng)
        switches = int(np.count_nonzero((prev_assoc >= 0) & (prev_assoc != actions)))

        new_loads = np.bincount(actions, minlength=self.n_bs).astype(np.int64)
        own_sinr = self.sinr[np.arange(n_users), actions]
        cap = self.channel.bandwidth[actions] * np.log2(1.0 + own_sinr)
        rates = cap / new_loads[actions] * (1.0 - t_ho / t_s)
        utilities = np.log10(np.maximum(rates, RATE_FLOOR))
        alpha = self.config.reward_alpha
        rewards = alpha * utilities + (1.0 - alpha) / self.n_bs * utilities.sum()

        if self.sample_log is not None:
            for i, uid in enumerate(self.uids):
                self.sample_log.write(json.dumps({
                    "slot": self.slot, "user": uid, "action": int(actions[i]),
                    "reward": float(rewards[i]),
                    "sinr_serving": float(own_sinr[i]),
                    "load_serving": int(new_loads[actions[i]]),
                    "t_ho": float(t_ho[i]),
                }) + "\n")

        old_uids = list(self.uids)
        old_obs = self.obs_matrix

        self.slot += 1
        departed, _ = self.population.step(self.slot, self.mobility_source,
                                           self.dynamics_rng)
        departed_set = set(departed)
        new_assoc = {}
        for i, uid in enumerate(old_uids):
            if uid not in departed_set:
                new_assoc[uid] = int(actions[i])
        for uid in self.population.users:
            if uid not in new_assoc:
                new_assoc[uid] = -1  # fresh arrival, no prior association
        self.assoc = new_assoc
        self.loads = new_loads
        self.uids = sorted(self.population.users)
        self.sinr = self._sense()
        self.obs_matrix = self._compose_matrix()

        next_rows = {uid: self.obs_matrix[i] for i, uid in enumerate(self.uids)}
        zero_obs = np.zeros(3 * self.n_bs)
        samples = []
        for i, uid in enumerate(old_uids):
            done = uid in departed_set
            samples.append(TransitionSample(
                uid=uid,
                observation=old_obs[i].astype(np.float32),
                action=int(actions[i]),
                next_observation=(zero_obs if done else next_rows[uid]).astype(np.float32),
                reward=float(rewards[i]),
                log_probability=float(log_probabilities[i]),
                value=float(values[i]),
                done=done,
            ))
        info = {
            "slot": self.slot - 1,
            "utility": float(np.mean(utilities)),
            "rates": rates,
            "handovers": switches,
            "n_users": n_users,
        }
        return samples, info

    # -- checkpoint support ------------------------------------------------

    def to_snapshot(self) -> dict:
        return {
            "slot": self.slot,
            "uids": list(self.uids),
            "assoc": {str(k): v for k, v in self.assoc.items()},
            "loads": self.loads.tolist(),
            "sinr": self.sinr.tolist(),
            "obs_matrix": self.obs_matrix.tolist(),
            "population": self.population.to_snapshot(),
            "dynamics_rng": self.dynamics_rng.bit_generator.state,
            "action_rng": self.action_rng.bit_generator.state,
            "disturb_magnitude": self.disturb_magnitude,
            "arrival_rate": self.arrival_rate,
            "duration_range": list(self.duration_range),
        }

    def restore_snapshot(self, data: dict) -> None:
        self.slot = data["slot"]
        self.uids = list(data["uids"])
        self.assoc = {int(k): v for k, v in data["assoc"].items()}
        self.loads = np.asarray(data["loads"], dtype=np.int64)
        self.sinr = np.asarray(data["sinr"], dtype=np.float64)
        self.obs_matrix = np.asarray(data["obs_matrix"], dtype=np.float64)
        self.population = PopulationProcess.from_snapshot(data["population"])
        self.dynamics_rng.bit_generator.state = data["dynamics_rng"]
        self.action_rng.bit_generator.state = data["action_rng"]
        self.disturb_magnitude = data["disturb_magnitude"]
        self.arrival_rate = data["arrival_rate"]
        self.duration_range = tuple(data["duration_range"])
