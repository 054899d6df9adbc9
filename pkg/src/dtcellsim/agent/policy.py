"""Recurrent actor-critic network shared by every user in every environment.

Architecture: two-layer embedding on the 3|B| observation, one LSTM cell for
memory across slots, then linear actor (|B| logits) and critic (scalar)
heads. Raw observations are featurized inside the forward pass: SINRs to a
compressed log scale, loads to log1p, the one-hot untouched, so callers
always exchange the raw physical quantities.

The actor additionally receives a station-shared residual: each station's
logit gets w . (sinr feature, load feature, previous-association bit) with
one weight triple shared across stations. Initialized to score by SINR
alone, so the untrained greedy policy coincides with the strongest-signal
baseline and learning only has to move three weights to trade signal
strength against load and handover stickiness.

Masked logits are shifted by a large negative constant instead of a literal
-inf: after the softmax subtracts the row max, exp underflows to an exact
zero probability, while entropies and log-probs stay finite.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

MASK_OFFSET = -1e9
SKIP_INIT = (6.0, 0.0, 0.0)  # sinr, load, previous-association weights


def _featurize(obs: torch.Tensor, n_bs: int) -> torch.Tensor:
    sinr = obs[..., :n_bs]
    loads = obs[..., n_bs:2 * n_bs]
    assoc = obs[..., 2 * n_bs:]
    sinr_feat = torch.log10(sinr.clamp_min(1e-12)) / 3.0
    load_feat = torch.log1p(loads.clamp_min(0.0)) / 4.0
    return torch.cat([sinr_feat, load_feat, assoc], dim=-1)


class PolicyNetwork(nn.Module):
    def __init__(self, n_bs: int, hidden: int = 128, seed: int = 0,
                 dtype=torch.float32):
        super().__init__()
        # single-threaded torch keeps every forward/backward bit-reproducible
        # no matter how many rollout workers are active
        torch.set_num_threads(1)
        torch.manual_seed(seed)
        self.n_bs = n_bs
        self.hidden = hidden
        self.embed = nn.Sequential(
            nn.Linear(3 * n_bs, hidden), nn.ReLU(),
            nn.Linear(hidden, hidden), nn.ReLU(),
        )
        self.cell = nn.LSTMCell(hidden, hidden)
        self.actor = nn.Linear(hidden, n_bs)
        self.critic = nn.Linear(hidden, 1)
        self.skip = nn.Parameter(torch.tensor(SKIP_INIT))
        for layer in (self.embed[0], self.embed[2]):
            nn.init.orthogonal_(layer.weight, gain=np.sqrt(2.0))
            nn.init.zeros_(layer.bias)
        nn.init.orthogonal_(self.actor.weight, gain=0.01)
        nn.init.zeros_(self.actor.bias)
        nn.init.orthogonal_(self.critic.weight, gain=1.0)
        nn.init.zeros_(self.critic.bias)
        self.to(dtype)
        self._dtype = dtype

    def initial_memory(self, batch: int = 1) -> tuple[torch.Tensor, torch.Tensor]:
        h = torch.zeros(batch, self.hidden, dtype=self._dtype)
        return h, h.clone()

    def forward(self, obs: torch.Tensor, memory, mask: torch.Tensor):
        """One recurrent step for a batch of users.

        obs: (U, 3|B|) raw observation vectors; mask: (U, |B|) bool;
        memory: (h, c) each (U, hidden). Returns (masked logits, values,
        new memory). Masked entries carry probability exactly zero.
        """
        if not torch.all(torch.isfinite(obs)):
            raise ValueError("non-finite observation")
        feats = _featurize(obs.to(self._dtype), self.n_bs)
        x = self.embed(feats)
        h, c = self.cell(x, memory)
        # station-shared residual: (U, B, 3) feature triples . skip weights
        per_bs = torch.stack(
            (feats[..., : self.n_bs],
             feats[..., self.n_bs: 2 * self.n_bs],
             feats[..., 2 * self.n_bs:]), dim=-1)
        logits = self.actor(h) + per_bs @ self.skip
        logits = logits + torch.where(
            mask, torch.zeros((), dtype=self._dtype),
            torch.full((), MASK_OFFSET, dtype=self._dtype))
        values = self.critic(h).squeeze(-1)
        return logits, values, (h, c)

    def named_arrays(self) -> dict[str, np.ndarray]:
        return {name: p.detach().cpu().numpy().copy()
                for name, p in self.named_parameters()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        with torch.no_grad():
            for name, p in self.named_parameters():
                if name not in arrays:
                    raise KeyError(f"missing parameter {name}")
                src = torch.from_numpy(np.asarray(arrays[name]))
                if tuple(src.shape) != tuple(p.shape):
                    raise ValueError(f"shape mismatch for {name}")
                p.copy_(src.to(p.dtype))


def distribution(logits: torch.Tensor):
    """(probabilities, log-probabilities) of the masked categorical."""
    logp = torch.log_softmax(logits, dim=-1)
    return torch.exp(logp), logp


def act_batch(net: PolicyNetwork, obs: np.ndarray, memory, mask: np.ndarray,
              rng: np.random.Generator):
    """Sample one action per user with the caller's numpy stream.

    Sampling is done by inverse CDF over the network's probabilities, so the
    result depends only on (parameters, inputs, rng position), never on torch
    global random state. Returns (actions, log-probs, values, new memory).
    """
    obs_t = torch.from_numpy(np.ascontiguousarray(obs, dtype=np.float32))
    mask_t = torch.from_numpy(np.ascontiguousarray(mask))
    with torch.no_grad():
        logits, values, new_memory = net(obs_t, memory, mask_t)
        probs, logp = distribution(logits)
    p = probs.double().numpy()
    p = p / p.sum(axis=1, keepdims=True)
    cdf = np.cumsum(p, axis=1)
    u = rng.random(len(p))
    actions = np.zeros(len(p), dtype=np.int64)
    for i in range(len(p)):
        actions[i] = int(np.searchsorted(cdf[i], u[i], side="right"))
        actions[i] = min(actions[i], net.n_bs - 1)
        # searchsorted can land on a zero-probability cell after float
        # round-off at the tail; walk back to the nearest allowed action
        while p[i, actions[i]] <= 0.0 and actions[i] > 0:
            actions[i] -= 1
    logps = logp[np.arange(len(p)), actions].double().numpy()
    return actions, logps, values.double().numpy(), new_memory


def act(net: PolicyNetwork, obs: np.ndarray, memory, mask: np.ndarray,
        rng: np.random.Generator):
    """Single-user convenience wrapper around act_batch."""
    h, c = memory
    actions, logps, values, (h2, c2) = act_batch(
        net, obs[None, :], (h, c), mask[None, :], rng)
    return int(actions[0]), float(logps[0]), float(values[0]), (h2, c2)
