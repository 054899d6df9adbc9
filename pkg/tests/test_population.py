"""Arrival/departure process tests."""

import numpy as np
import pytest

from dtcellsim.mobility import RwpSource, Trajectory
from dtcellsim.population import PopulationProcess
from tests.conftest import StaticSource


def make_process(lo=5, hi=20, arrival_rate=0.5, duration_range=(60.0, 240.0)):
    return PopulationProcess(user_count_range=(lo, hi), slot_duration=0.1,
                             arrival_rate=arrival_rate,
                             duration_range=duration_range)


class TestPopulation:
    def test_seed_users_count_and_range(self, rng):
        proc = make_process()
        proc.seed_users(10, StaticSource((200.0, 200.0)), rng)
        assert len(proc.users) == 10
        with pytest.raises(ValueError):
            make_process().seed_users(2, StaticSource((200.0, 200.0)), rng)
        with pytest.raises(ValueError):
            make_process().seed_users(25, StaticSource((200.0, 200.0)), rng)

    def test_count_constant_without_arrivals(self, rng):
        # static users never exhaust their trajectory within the horizon
        proc = make_process(arrival_rate=0.0, duration_range=(1e6, 1e6))
        proc.seed_users(8, StaticSource((200.0, 200.0)), rng)
        for slot in range(1, 200):
            departed, arrived = proc.step(slot, StaticSource((200.0, 200.0)), rng)
            assert departed == [] and arrived == []
        assert len(proc.users) == 8

    def test_count_stays_in_range_over_long_run(self, rng):
        src = RwpSource((200.0, 200.0))
        proc = make_process(lo=5, hi=12, arrival_rate=2.0,
                            duration_range=(5.0, 15.0))
        proc.seed_users(8, src, rng)
        for slot in range(1, 3000):
            proc.step(slot, src, rng)
            assert 5 <= len(proc.users) <= 12

    def test_floor_extends_instead_of_departing(self, rng):
        src = RwpSource((200.0, 200.0))
        proc = make_process(lo=3, hi=3, arrival_rate=0.0,
                            duration_range=(1.0, 1.0))
        proc.seed_users(3, src, rng)
        for slot in range(1, 500):
            departed, arrived = proc.step(slot, src, rng)
            assert departed == [] and arrived == []
            assert sorted(proc.users) == [0, 1, 2]

    def test_extension_continues_from_endpoint(self, rng):
        src = RwpSource((200.0, 200.0))
        proc = make_process(lo=1, hi=1, arrival_rate=0.0,
                            duration_range=(1.0, 1.0))
        proc.seed_users(1, src, rng)
        end_before = proc.users[0].trajectory.xy[-1].copy()
        # slot 11 puts local time past the 1 s trajectory
        proc.step(11, src, rng)
        assert np.allclose(proc.users[0].trajectory.xy[0], end_before)
        # position remains continuous across the splice
        p = proc.position_of(0, 11)
        assert np.all(p >= 0) and np.all(p <= 200.0)

    def test_positions_follow_trajectory_clock(self, rng):
        proc = make_process()
        traj = Trajectory(t=[0.0, 10.0], xy=[[0.0, 0.0], [100.0, 0.0]])

        class OneTrack:
            def sample(self, rng, duration, start=None, previous=None):
                return Trajectory(t=traj.t.copy(), xy=traj.xy.copy())

        proc.seed_users(5, OneTrack(), rng)
        # slot 50 = 5.0 s into a 10 s straight line from x=0 to x=100
        assert np.allclose(proc.position_of(0, 50), [50.0, 0.0])
        assert np.allclose(proc.position_of(0, 0), [0.0, 0.0])

    def test_uids_never_reused(self, rng):
        src = RwpSource((200.0, 200.0))
        proc = make_process(lo=1, hi=4, arrival_rate=1.0, duration_range=(2.0, 4.0))
        proc.seed_users(2, src, rng)
        seen = set(proc.users)
        for slot in range(1, 400):
            _, arrived = proc.step(slot, src, rng)
            for uid in arrived:
                assert uid not in seen
                seen.add(uid)

    def test_seeded_determinism(self):
        src = RwpSource((200.0, 200.0))
        runs = []
        for _ in range(2):
            rng = np.random.default_rng(42)
            proc = make_process(lo=2, hi=10, arrival_rate=1.0,
                                duration_range=(3.0, 8.0))
            proc.seed_users(5, src, rng)
            history = []
            for slot in range(1, 100):
                departed, arrived = proc.step(slot, src, rng)
                history.append((tuple(departed), tuple(arrived),
                                tuple(sorted(proc.users))))
            runs.append(history)
        assert runs[0] == runs[1]

    def test_snapshot_round_trip_replays_identically(self):
        src = RwpSource((200.0, 200.0))
        rng = np.random.default_rng(7)
        proc = make_process(lo=2, hi=10, arrival_rate=1.0, duration_range=(3.0, 8.0))
        proc.seed_users(5, src, rng)
        for slot in range(1, 50):
            proc.step(slot, src, rng)
        snap = proc.to_snapshot()
        state = rng.bit_generator.state

        again = PopulationProcess.from_snapshot(snap)
        assert sorted(again.users) == sorted(proc.users)
        for uid in proc.users:
            assert np.allclose(again.position_of(uid, 49), proc.position_of(uid, 49))

        rng_b = np.random.default_rng()
        rng_b.bit_generator.state = state
        future_a, future_b = [], []
        for slot in range(50, 80):
            future_a.append(proc.step(slot, src, rng))
            future_b.append(again.step(slot, src, rng_b))
        assert future_a == future_b
