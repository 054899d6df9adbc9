"""Clipped-surrogate policy optimization over chunked recurrent sequences.

A batch is a set of fixed-length sequence chunks with the hidden state
recorded at each chunk start during collection. Updates replay every chunk
through the network, so gradients flow through the recurrence up to the
chunk boundary (truncated backpropagation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .policy import PolicyNetwork, distribution


@dataclass
class PpoHyper:
    clip_ratio: float = 0.2
    gae_lambda: float = 0.95
    discount: float = 0.9
    learning_rate: float = 1e-3
    epochs: int = 4
    minibatch_size: int = 64  # chunks per gradient step
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    grad_norm_cap: float = 0.5
    seq_length: int = 16
    normalize_advantages: bool = True

    def validate(self):
        if not 0.0 < self.clip_ratio < 1.0:
            raise ValueError("clip_ratio must lie in (0, 1)")
        if not 0.0 <= self.gae_lambda <= 1.0 or not 0.0 <= self.discount <= 1.0:
            raise ValueError("gae_lambda and discount must lie in [0, 1]")
        if self.seq_length < 1 or self.minibatch_size < 1:
            raise ValueError("seq_length and minibatch_size must be >= 1")


class ChunkBatch:
    """Tensor view of chunked sequences ready for loss evaluation."""

    def __init__(self, obs, mask, actions, old_logp, advantages, returns, valid,
                 h0, c0, dtype=torch.float32):
        as_t = lambda a, dt: torch.from_numpy(np.ascontiguousarray(a)).to(dt)
        self.obs = as_t(obs, dtype)
        self.mask = torch.from_numpy(np.ascontiguousarray(mask))
        self.actions = as_t(actions, torch.int64)
        self.old_logp = as_t(old_logp, dtype)
        self.advantages = as_t(advantages, dtype)
        self.returns = as_t(returns, dtype)
        self.valid = torch.from_numpy(np.ascontiguousarray(valid))
        self.h0 = as_t(h0, dtype)
        self.c0 = as_t(c0, dtype)

    def __len__(self):
        return self.obs.shape[0]

    def select(self, idx: np.ndarray) -> "ChunkBatch":
        out = object.__new__(ChunkBatch)
        t = torch.from_numpy(idx)
        for name in ("obs", "mask", "actions", "old_logp", "advantages",
                     "returns", "valid", "h0", "c0"):
            setattr(out, name, getattr(self, name)[t])
        return out

    @property
    def n_samples(self) -> int:
        return int(self.valid.sum())


def ppo_loss(net: PolicyNetwork, batch: ChunkBatch, hyper: PpoHyper):
    """Negative clipped surrogate + value and entropy terms, plus statistics.

    Returns (loss tensor, stats dict). The loss is what gradient checks
    differentiate: every term is smooth away from the clip corners.
    """
    h, c = batch.h0, batch.c0
    length = batch.obs.shape[1]
    logp_steps, value_steps, entropy_steps = [], [], []
    for t in range(length):
        logits, values, (h, c) = net(batch.obs[:, t], (h, c), batch.mask[:, t])
        probs, logp_all = distribution(logits)
        logp_steps.append(logp_all.gather(1, batch.actions[:, t:t + 1]).squeeze(1))
        entropy_steps.append(-(probs * logp_all).sum(dim=-1))
        value_steps.append(values)
    logp = torch.stack(logp_steps, dim=1)
    entropy = torch.stack(entropy_steps, dim=1)
    values = torch.stack(value_steps, dim=1)

    valid = batch.valid.to(logp.dtype)
    n = valid.sum().clamp_min(1.0)
    ratio = torch.exp(logp - batch.old_logp)
    clipped = torch.clamp(ratio, 1.0 - hyper.clip_ratio, 1.0 + hyper.clip_ratio)
    surrogate = torch.minimum(ratio * batch.advantages, clipped * batch.advantages)
    surrogate = (surrogate * valid).sum() / n
    value_loss = (0.5 * (values - batch.returns) ** 2 * valid).sum() / n
    entropy_mean = (entropy * valid).sum() / n
    loss = -surrogate + hyper.value_coef * value_loss - hyper.entropy_coef * entropy_mean

    with torch.no_grad():
        approx_kl = ((batch.old_logp - logp) * valid).sum() / n
        clip_frac = (((ratio - 1.0).abs() > hyper.clip_ratio).to(logp.dtype)
                     * valid).sum() / n
    stats = {
        "surrogate": float(surrogate.detach()),
        "value_loss": float(value_loss.detach()),
        "entropy": float(entropy_mean.detach()),
        "approx_kl": float(approx_kl),
        "clip_fraction": float(clip_frac),
    }
    return loss, stats


def ppo_update(net: PolicyNetwork, optimizer: torch.optim.Optimizer,
               batch: ChunkBatch, hyper: PpoHyper,
               shuffle_rng: np.random.Generator) -> dict:
    """Run the configured epochs of minibatch gradient steps over the batch.

    Minibatch order comes from the caller's numpy stream, keeping the whole
    update deterministic. Steps whose gradients go non-finite are rejected
    and counted instead of applied.
    """
    hyper.validate()
    if hyper.normalize_advantages:
        valid = batch.valid
        adv = batch.advantages[valid]
        if adv.numel() > 1:
            std, mean = torch.std_mean(adv)
            batch.advantages = torch.where(
                valid, (batch.advantages - mean) / (std + 1e-8),
                torch.zeros_like(batch.advantages))

    totals: dict[str, float] = {}
    n_steps = 0
    rejected = 0
    for _ in range(hyper.epochs):
        perm = shuffle_rng.permutation(len(batch))
        for lo in range(0, len(batch), hyper.minibatch_size):
            idx = perm[lo: lo + hyper.minibatch_size]
            minibatch = batch.select(idx)
            loss, stats = ppo_loss(net, minibatch, hyper)
            optimizer.zero_grad()
            loss.backward()
            grads_finite = all(
                p.grad is None or bool(torch.isfinite(p.grad).all())
                for p in net.parameters())
            if not grads_finite:
                rejected += 1
                optimizer.zero_grad()
                continue
            torch.nn.utils.clip_grad_norm_(net.parameters(), hyper.grad_norm_cap)
            optimizer.step()
            for k, v in stats.items():
                totals[k] = totals.get(k, 0.0) + v
            n_steps += 1
    out = {k: v / max(n_steps, 1) for k, v in totals.items()}
    out["gradient_steps"] = n_steps
    out["rejected_steps"] = rejected
    return out
