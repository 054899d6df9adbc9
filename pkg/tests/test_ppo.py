"""Clipped-surrogate loss and update-loop behavior on hand-built batches."""

import numpy as np
import pytest
import torch

from dtcellsim.agent.masking import top_n_mask
from dtcellsim.agent.policy import PolicyNetwork, distribution
from dtcellsim.agent.ppo import ChunkBatch, PpoHyper, ppo_loss, ppo_update

N_BS = 4
HIDDEN = 8


def roll_policy(net, obs, mask, rng):
    """Collect on-policy actions/logp/values for a (N, T, .) batch."""
    n, t_len = obs.shape[:2]
    h, c = net.initial_memory(n)
    actions = np.zeros((n, t_len), dtype=np.int64)
    logps = np.zeros((n, t_len))
    values = np.zeros((n, t_len))
    with torch.no_grad():
        for t in range(t_len):
            logits, vals, (h, c) = net(
                torch.from_numpy(obs[:, t]).float(), (h, c),
                torch.from_numpy(mask[:, t]))
            probs, logp = distribution(logits)
            p = probs.double().numpy()
            for i in range(n):
                actions[i, t] = rng.choice(N_BS, p=p[i] / p[i].sum())
            logps[:, t] = logp.numpy()[np.arange(n), actions[:, t]]
            values[:, t] = vals.numpy()
    return actions, logps, values


def make_batch(net, rng, n_chunks=6, t_len=5, valid=None, advantages=None,
               old_logp_shift=0.0):
    sinr = 10.0 ** rng.uniform(-1, 1, size=(n_chunks, t_len, N_BS))
    loads = rng.integers(0, 5, size=(n_chunks, t_len, N_BS)).astype(float)
    assoc = np.zeros((n_chunks, t_len, N_BS))
    obs = np.concatenate([sinr, loads, assoc], axis=2)
    mask = np.stack([[top_n_mask(sinr[i, t], 3) for t in range(t_len)]
                     for i in range(n_chunks)])
    actions, logps, values = roll_policy(net, obs, mask, rng)
    if advantages is None:
        advantages = rng.normal(size=(n_chunks, t_len))
    returns = values + advantages
    if valid is None:
        valid = np.ones((n_chunks, t_len), dtype=bool)
    h0 = np.zeros((n_chunks, HIDDEN))
    return ChunkBatch(obs, mask, actions, logps + old_logp_shift,
                      advantages, returns, valid, h0, h0.copy())


def fresh(seed=0):
    return PolicyNetwork(n_bs=N_BS, hidden=HIDDEN, seed=seed)


def hyper(**kw):
    return PpoHyper(**kw)


class TestLossDefinition:
    def test_surrogate_at_ratio_one_is_mean_advantage(self):
        net = fresh(1)
        rng = np.random.default_rng(10)
        adv = rng.normal(size=(6, 5))
        batch = make_batch(net, rng, advantages=adv)
        _, stats = ppo_loss(net, batch, hyper())
        assert stats["surrogate"] == pytest.approx(adv.mean(), rel=1e-5)
        assert stats["approx_kl"] == pytest.approx(0.0, abs=1e-6)
        assert stats["clip_fraction"] == 0.0

    def test_large_ratio_clipped_for_positive_advantage(self):
        net = fresh(2)
        rng = np.random.default_rng(11)
        adv = np.ones((6, 5))
        # old log-probs far below current ones: ratio = e^2 per sample
        batch = make_batch(net, rng, advantages=adv, old_logp_shift=-2.0)
        _, stats = ppo_loss(net, batch, hyper(clip_ratio=0.2))
        assert stats["surrogate"] == pytest.approx(1.2, rel=1e-5)
        assert stats["clip_fraction"] == 1.0

    def test_large_ratio_unclipped_for_negative_advantage(self):
        # pessimistic min keeps the worse (more negative) unclipped term
        net = fresh(3)
        rng = np.random.default_rng(12)
        adv = -np.ones((6, 5))
        batch = make_batch(net, rng, advantages=adv, old_logp_shift=-2.0)
        _, stats = ppo_loss(net, batch, hyper(clip_ratio=0.2))
        assert stats["surrogate"] == pytest.approx(-np.exp(2.0), rel=1e-5)

    def test_value_and_entropy_stats_match_direct_forward(self):
        net = fresh(4)
        rng = np.random.default_rng(13)
        batch = make_batch(net, rng)
        _, stats = ppo_loss(net, batch, hyper())
        h, c = batch.h0, batch.c0
        sq_err, ent = [], []
        with torch.no_grad():
            for t in range(batch.obs.shape[1]):
                logits, values, (h, c) = net(batch.obs[:, t], (h, c),
                                             batch.mask[:, t])
                probs, logp = distribution(logits)
                sq_err.append((values - batch.returns[:, t]) ** 2)
                ent.append(-(probs * logp).sum(dim=-1))
        want_value = 0.5 * torch.stack(sq_err, dim=1).mean()
        want_entropy = torch.stack(ent, dim=1).mean()
        assert stats["value_loss"] == pytest.approx(float(want_value), rel=1e-5)
        assert stats["entropy"] == pytest.approx(float(want_entropy), rel=1e-5)

    def test_loss_combines_terms_with_coefficients(self):
        net = fresh(5)
        rng = np.random.default_rng(14)
        batch = make_batch(net, rng)
        hp = hyper(value_coef=0.7, entropy_coef=0.03)
        loss, stats = ppo_loss(net, batch, hp)
        expect = (-stats["surrogate"] + 0.7 * stats["value_loss"]
                  - 0.03 * stats["entropy"])
        assert float(loss.detach()) == pytest.approx(expect, rel=1e-5)

    def test_invalid_padding_does_not_affect_loss_or_gradients(self):
        net = fresh(6)
        rng = np.random.default_rng(15)
        valid = np.ones((6, 5), dtype=bool)
        valid[:, 3:] = False
        batch_a = make_batch(net, np.random.default_rng(15), valid=valid.copy())
        batch_b = make_batch(net, np.random.default_rng(15), valid=valid.copy())
        # poison every padded slot of b with garbage targets
        pad = torch.from_numpy(~valid)
        batch_b.advantages[pad] = 1e6
        batch_b.returns[pad] = -1e6
        batch_b.old_logp[pad] = -50.0

        loss_a, stats_a = ppo_loss(net, batch_a, hyper())
        net.zero_grad()
        loss_a.backward()
        grads_a = [p.grad.clone() for p in net.parameters()]

        loss_b, stats_b = ppo_loss(net, batch_b, hyper())
        net.zero_grad()
        loss_b.backward()
        grads_b = [p.grad.clone() for p in net.parameters()]

        assert float(loss_a) == pytest.approx(float(loss_b), rel=1e-6)
        assert stats_a == pytest.approx(stats_b, rel=1e-6)
        for ga, gb in zip(grads_a, grads_b):
            assert torch.allclose(ga, gb)

    def test_zero_advantage_zero_entropy_gives_zero_actor_gradient(self):
        net = fresh(7)
        rng = np.random.default_rng(16)
        batch = make_batch(net, rng, advantages=np.zeros((6, 5)))
        batch.returns = batch.returns + 1.0  # keep the value term active
        loss, _ = ppo_loss(net, batch, hyper(entropy_coef=0.0))
        net.zero_grad()
        loss.backward()
        assert torch.allclose(net.actor.weight.grad,
                              torch.zeros_like(net.actor.weight))
        assert torch.allclose(net.skip.grad, torch.zeros_like(net.skip))
        # the value term still trains the critic and the trunk
        assert net.critic.weight.grad.abs().sum() > 0
        assert net.embed[0].weight.grad.abs().sum() > 0


class TestChunkBatch:
    def test_select_reorders_all_fields(self):
        net = fresh(8)
        batch = make_batch(net, np.random.default_rng(17))
        idx = np.array([3, 0, 5])
        sub = batch.select(idx)
        assert len(sub) == 3
        assert torch.equal(sub.obs, batch.obs[torch.tensor(idx)])
        assert torch.equal(sub.actions, batch.actions[torch.tensor(idx)])
        assert torch.equal(sub.h0, batch.h0[torch.tensor(idx)])

    def test_n_samples_counts_valid_only(self):
        net = fresh(8)
        valid = np.zeros((6, 5), dtype=bool)
        valid[:, :2] = True
        batch = make_batch(net, np.random.default_rng(18), valid=valid)
        assert batch.n_samples == 12


class TestUpdateLoop:
    def test_hyper_validation(self):
        for bad in (dict(clip_ratio=0.0), dict(clip_ratio=1.0),
                    dict(gae_lambda=1.5), dict(discount=-0.1),
                    dict(seq_length=0), dict(minibatch_size=0)):
            with pytest.raises(ValueError):
                hyper(**bad).validate()
        hyper().validate()

    def test_nan_advantages_rejected_and_parameters_untouched(self):
        net = fresh(9)
        rng = np.random.default_rng(19)
        adv = np.full((6, 5), np.nan)
        batch = make_batch(net, rng, advantages=adv)
        before = {k: v.copy() for k, v in net.named_arrays().items()}
        opt = torch.optim.Adam(net.parameters(), lr=1e-3)
        out = ppo_update(net, opt, batch, hyper(epochs=2, minibatch_size=4),
                         np.random.default_rng(0))
        assert out["gradient_steps"] == 0
        assert out["rejected_steps"] == 2 * 2  # 2 epochs x ceil(6/4) batches
        after = net.named_arrays()
        for name in before:
            assert np.array_equal(before[name], after[name])

    def test_update_is_deterministic_in_caller_stream(self):
        results = []
        for _ in range(2):
            net = fresh(10)
            batch = make_batch(net, np.random.default_rng(20))
            opt = torch.optim.SGD(net.parameters(), lr=1e-2)
            torch.manual_seed(777 + len(results))  # must not matter
            ppo_update(net, opt, batch, hyper(epochs=3, minibatch_size=2),
                       np.random.default_rng(42))
            results.append(net.named_arrays())
        for name in results[0]:
            assert np.array_equal(results[0][name], results[1][name])

    def test_positive_advantage_raises_chosen_action_probability(self):
        net = fresh(11)
        rng = np.random.default_rng(21)
        sinr = np.full((4, 4, N_BS), 1.0)
        obs = np.concatenate(
            [sinr, np.zeros_like(sinr), np.zeros_like(sinr)], axis=2)
        mask = np.ones((4, 4, N_BS), dtype=bool)
        actions = np.zeros((4, 4), dtype=np.int64)  # always reward action 0

        def logp_of_action_zero():
            with torch.no_grad():
                logits, _, _ = net(torch.from_numpy(obs[:, 0]).float(),
                                   net.initial_memory(4),
                                   torch.from_numpy(mask[:, 0]))
                return float(distribution(logits)[1][0, 0])

        before = logp_of_action_zero()
        _, logps, values = roll_policy(net, obs, mask, rng)
        # force the recorded actions/logp to the rewarded arm
        with torch.no_grad():
            h, c = net.initial_memory(4)
            lp = np.zeros((4, 4))
            for t in range(4):
                logits, _, (h, c) = net(torch.from_numpy(obs[:, t]).float(),
                                        (h, c), torch.from_numpy(mask[:, t]))
                lp[:, t] = distribution(logits)[1].numpy()[:, 0]
        batch = ChunkBatch(obs, mask, actions, lp,
                           np.ones((4, 4)), values + 1.0,
                           np.ones((4, 4), dtype=bool),
                           np.zeros((4, HIDDEN)), np.zeros((4, HIDDEN)))
        opt = torch.optim.Adam(net.parameters(), lr=1e-2)
        ppo_update(net, opt, batch, hyper(epochs=4, minibatch_size=4,
                                          normalize_advantages=False),
                   np.random.default_rng(1))
        assert logp_of_action_zero() > before

    def test_advantage_normalization_centers_valid_entries(self):
        net = fresh(12)
        valid = np.ones((6, 5), dtype=bool)
        valid[:, 4] = False
        batch = make_batch(net, np.random.default_rng(22), valid=valid)
        opt = torch.optim.SGD(net.parameters(), lr=0.0)  # stats only
        ppo_update(net, opt, batch, hyper(epochs=1, minibatch_size=64),
                   np.random.default_rng(2))
        kept = batch.advantages[batch.valid]
        assert float(kept.mean()) == pytest.approx(0.0, abs=1e-6)
        assert float(kept.std()) == pytest.approx(1.0, abs=1e-2)
        assert (batch.advantages[~batch.valid] == 0).all()
