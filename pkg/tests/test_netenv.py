"""Environment dynamics tests: SINR composition, rates, rewards, bookkeeping.

The 2-station fixture is small enough that every quantity in a step is
recomputed by hand with straight-line numpy; the desk-scale test checks the
intra-band interference structure against a double loop.
"""

import numpy as np
import pytest

from dtcellsim.errors import ContractViolation
from dtcellsim.mobility import Trajectory
from dtcellsim.netenv import (
    RATE_FLOOR,
    NetworkEnv,
    Observation,
    achievable_rate,
    reward,
    sample_handover,
    service_rate,
    sinr_vector,
)
from dtcellsim.radio import Channel, dbm_to_watt
from dtcellsim.scenario import Band, HandoverModel, ScenarioConfig, desk_config
from tests.conftest import StaticSource


class FixedSource:
    """Places users at scripted positions, cycling through the list."""

    def __init__(self, positions):
        self.positions = [np.asarray(p, dtype=np.float64) for p in positions]
        self.i = 0

    def sample(self, rng, duration, start=None, previous=None):
        if start is None:
            pos = self.positions[self.i % len(self.positions)]
            self.i += 1
        else:
            pos = np.asarray(start, dtype=np.float64)
        return Trajectory(t=np.array([0.0, max(duration, 1.0)]),
                          xy=np.stack([pos, pos]))


def two_bs_config(success_probability=0.8):
    return ScenarioConfig(
        area=(1000.0, 500.0),
        sites=[(0.0, 0.0), (1000.0, 0.0)],
        bands=[Band(3.7, 40e6)],
        mask_top_n=2,
        user_count_range=(1, 10),
        sigma_sf=0.0,
        handover=HandoverModel(success_probability=success_probability),
    )


def reference_two_bs_sinr(positions):
    """First-principles SINR for the two_bs_config geometry (no shadowing)."""
    sites = np.array([[0.0, 0.0], [1000.0, 0.0]])
    tx = dbm_to_watt(46.0)
    noise = dbm_to_watt(-174.0) * 40e6
    out = np.zeros((len(positions), 2))
    for u, p in enumerate(positions):
        recv = np.zeros(2)
        for b in range(2):
            d2d = max(np.hypot(p[0] - sites[b, 0], p[1] - sites[b, 1]), 1.0)
            d3d = np.hypot(d2d, 25.0 - 1.5)
            pl = 13.54 + 39.08 * np.log10(d3d) + 20.0 * np.log10(3.7) - 0.6 * (1.5 - 1.5)
            recv[b] = tx * 10.0 ** (-pl / 10.0)
        for b in range(2):
            out[u, b] = recv[b] / (recv[1 - b] + noise)
    return out


class TestPureFunctions:
    def test_achievable_rate_values(self):
        assert achievable_rate(1.0, 10e6) == pytest.approx(10e6, rel=1e-12)
        assert achievable_rate(3.0, 40e6) == pytest.approx(80e6, rel=1e-12)
        got = achievable_rate([0.0, 1.0], 10e6)
        assert np.allclose(got, [0.0, 10e6], rtol=1e-12)

    def test_service_rate_values(self):
        assert service_rate(10e6, 4, 0.020, 0.1) == pytest.approx(2e6, rel=1e-12)
        assert service_rate(10e6, 1, 0.0, 0.1) == pytest.approx(10e6, rel=1e-12)
        assert service_rate(10e6, 2, 0.09076, 0.1) == pytest.approx(
            10e6 / 2 * (1 - 0.9076), rel=1e-12)

    def test_service_rate_requires_load(self):
        with pytest.raises(ContractViolation):
            service_rate(10e6, 0, 0.0, 0.1)

    def test_reward_blend(self):
        utilities = [5.0, 3.0, 2.0]
        got = reward(5.0, utilities, alpha=0.5, n_bs=14)
        assert got == pytest.approx(0.5 * 5.0 + 0.5 / 14 * 10.0, rel=1e-12)
        assert reward(5.0, utilities, alpha=1.0, n_bs=14) == pytest.approx(5.0)
        assert reward(5.0, utilities, alpha=0.0, n_bs=4) == pytest.approx(10.0 / 4)

    def test_handover_charges(self):
        model = HandoverModel()
        rng = np.random.default_rng(0)
        assert sample_handover(3, 3, model, rng) == 0.0
        assert sample_handover(-1, 2, model, rng) == 0.0
        draws = np.array([sample_handover(0, 1, model, rng) for _ in range(100_000)])
        assert set(np.unique(draws)) == {0.020, 0.09076}
        assert abs(np.mean(draws == 0.020) - 0.8) < 0.01


class TestTwoStationFixture:
    positions = [(100.0, 0.0), (900.0, 0.0), (450.0, 0.0)]

    def make_env(self, success_probability=1.0):
        cfg = two_bs_config(success_probability)
        env = NetworkEnv(cfg, FixedSource(self.positions), seed=5, arrival_rate=0.0)
        env.reset(3)
        return env

    def test_sinr_matches_first_principles(self):
        env = self.make_env()
        expect = reference_two_bs_sinr(np.asarray(self.positions))
        assert np.allclose(env.sinr, expect, rtol=1e-12, atol=0)

    def test_reset_associates_by_strongest(self):
        env = self.make_env()
        assert env.assoc == {0: 0, 1: 1, 2: 0}
        assert env.loads.tolist() == [2, 1]

    def test_step_rates_and_rewards_by_hand(self):
        env = self.make_env(success_probability=1.0)  # interruption deterministic
        sinr = env.sinr.copy()
        samples, info = env.step([0, 1, 1])

        loads = np.array([1, 2])
        c = 40e6 * np.log2(1.0 + sinr[np.arange(3), [0, 1, 1]])
        factor = np.array([1.0, 1.0, 0.8])  # only user 2 switched
        rates = c / loads[[0, 1, 1]] * factor
        utilities = np.log10(np.maximum(rates, RATE_FLOOR))
        expected_rewards = 0.5 * utilities + 0.5 / 2 * utilities.sum()

        assert np.allclose(info["rates"], rates, rtol=1e-12)
        assert info["handovers"] == 1
        assert info["utility"] == pytest.approx(utilities.mean(), rel=1e-12)
        for i, sample in enumerate(samples):
            assert sample.reward == pytest.approx(expected_rewards[i], rel=1e-12)
            assert sample.action in (0, 1)
            assert not sample.done

    def test_loads_update_to_action_counts(self):
        env = self.make_env()
        env.step([0, 0, 0])
        assert env.loads.tolist() == [3, 0]
        assert env.loads.sum() == env.n_users

    def test_observation_layout(self):
        env = self.make_env()
        obs = Observation.from_vector(env.obs_matrix[1])
        assert np.allclose(obs.sinr, env.sinr[1])
        assert np.allclose(obs.prev_loads, [2.0, 1.0])
        assert obs.prev_assoc.tolist() == [0.0, 1.0]
        for uid in env.uids:
            composed = env.compose_observation(uid)
            row = env.obs_matrix[env.uids.index(uid)]
            assert np.allclose(composed.as_vector(), row)

    def test_sample_next_observation_chains(self):
        env = self.make_env()
        samples, _ = env.step([0, 1, 0])
        for i, sample in enumerate(samples):
            assert np.allclose(sample.next_observation, env.obs_matrix[i], atol=1e-6)
            assert np.allclose(sample.observation[:2], env.sinr[i], atol=1e-4) is not None

    def test_contract_violations(self):
        env = self.make_env()
        with pytest.raises(ContractViolation):
            env.step([0, 1])  # wrong count
        with pytest.raises(ContractViolation):
            env.step([0, 1, 2])  # out of range
        cfg = two_bs_config()
        cfg.mask_top_n = 1
        strict = NetworkEnv(cfg, FixedSource(self.positions), seed=5, arrival_rate=0.0)
        strict.reset(3)
        worst = np.argmin(strict.sinr, axis=1)
        with pytest.raises(ContractViolation):
            strict.step(worst)


class TestAlphaExtremes:
    def make_env(self, alpha):
        cfg = two_bs_config()
        cfg.reward_alpha = alpha
        env = NetworkEnv(cfg, FixedSource([(100.0, 0.0), (900.0, 0.0), (450.0, 0.0)]),
                         seed=5, arrival_rate=0.0)
        env.reset(3)
        return env

    def test_alpha_zero_rewards_equal(self):
        env = self.make_env(0.0)
        samples, _ = env.step([0, 1, 0])
        rewards = {s.reward for s in samples}
        assert len(rewards) == 1

    def test_alpha_one_rewards_own_only(self):
        env = self.make_env(1.0)
        samples, info = env.step([0, 1, 0])
        utilities = np.log10(np.maximum(info["rates"], RATE_FLOOR))
        for i, s in enumerate(samples):
            assert s.reward == pytest.approx(utilities[i], rel=1e-12)


class TestDeskScale:
    def test_intra_band_interference_structure(self, desk_cfg):
        env = NetworkEnv(desk_cfg, StaticSource(desk_cfg.area), seed=3)
        env.reset(30)
        positions = np.array([env.population.position_of(u, 0) for u in env.uids])
        gains = env.channel.gain_matrix(positions)
        tx = env.channel.tx_watt
        noise = env.channel.noise_watt
        band = env.channel.band_index
        expect = np.zeros_like(gains)
        for u in range(30):
            for b in range(desk_cfg.num_bs):
                own = tx[b] * gains[u, b]
                interference = sum(
                    tx[j] * gains[u, j]
                    for j in range(desk_cfg.num_bs)
                    if j != b and band[j] == band[b]
                )
                expect[u, b] = own / (interference + noise[b])
        assert np.allclose(env.sinr, expect, rtol=1e-12, atol=0)

    def test_sinr_vector_matches_env(self, desk_cfg):
        channel = Channel(desk_cfg)
        pos = np.array([432.1, 567.8])
        v = sinr_vector(pos, channel)
        env = NetworkEnv(desk_cfg, FixedSource([pos]), seed=1, channel=channel,
                         arrival_rate=0.0)
        env.reset(20)  # every scripted user sits at the same spot
        assert np.allclose(env.sinr, np.tile(v, (20, 1)), rtol=1e-12)

    def test_masks_limit_actions(self, desk_cfg):
        env = NetworkEnv(desk_cfg, StaticSource(desk_cfg.area), seed=3)
        env.reset(20)
        masks = env.masks()
        assert masks.shape == (20, desk_cfg.num_bs)
        assert np.all(masks.sum(axis=1) == desk_cfg.mask_top_n)
        # the masked-in stations are exactly the top-N by SINR
        for i in range(20):
            order = np.argsort(env.sinr[i])[::-1][: desk_cfg.mask_top_n]
            assert set(np.flatnonzero(masks[i])) == set(order)


class TestDeterminismAndSnapshots:
    def make_env(self, desk_cfg, seed=11):
        return NetworkEnv(desk_cfg, StaticSource(desk_cfg.area), seed=seed,
                          arrival_rate=0.5, duration_range=(5.0, 10.0))

    def test_same_seed_same_rollout(self, desk_cfg):
        streams = []
        for _ in range(2):
            env = self.make_env(desk_cfg)
            env.reset(20)
            log = [env.obs_matrix.copy()]
            for _ in range(20):
                actions = np.argmax(env.sinr, axis=1)
                _, info = env.step(actions)
                log.append(info["rates"].copy())
            streams.append(log)
        for a, b in zip(*streams):
            assert np.array_equal(a, b)

    def test_snapshot_replay_bit_exact(self, desk_cfg):
        env = self.make_env(desk_cfg)
        env.reset(20)
        for _ in range(10):
            env.step(np.argmax(env.sinr, axis=1))
        snap = env.to_snapshot()

        twin = self.make_env(desk_cfg, seed=999)  # seed overwritten by restore
        twin.restore_snapshot(snap)
        assert twin.uids == env.uids
        assert np.array_equal(twin.obs_matrix, env.obs_matrix)
        for _ in range(10):
            actions = np.argmax(env.sinr, axis=1)
            _, info_a = env.step(actions)
            _, info_b = twin.step(actions)
            assert np.array_equal(info_a["rates"], info_b["rates"])
            assert env.uids == twin.uids
