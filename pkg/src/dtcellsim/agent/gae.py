"""Generalized advantage estimation over per-user reward/value sequences."""

from __future__ import annotations

import numpy as np


def gae_advantages(rewards, values, dones, gamma: float, lam: float,
                   last_value: float = 0.0):
    """Exponentially weighted TD advantages and their returns.

    delta_t = r_t + gamma * v_{t+1} * (1 - done_t) - v_t
    A_t = sum_k (gamma * lam)^k * delta_{t+k}, truncated at the first done.
    `last_value` bootstraps v_{T} when the sequence was cut off mid-episode.
    Returns (advantages, returns) with returns = advantages + values.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    n = len(rewards)
    if not (len(values) == len(dones) == n):
        raise ValueError("rewards, values and dones must be aligned")
    advantages = np.zeros(n)
    gae = 0.0
    for t in range(n - 1, -1, -1):
        next_value = last_value if t == n - 1 else values[t + 1]
        not_done = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * not_done - values[t]
        gae = delta + gamma * lam * not_done * gae
        advantages[t] = gae
    return advantages, advantages + values
