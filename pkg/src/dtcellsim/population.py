"""Arrival/departure process that keeps the active user set evolving.

Users arrive Poisson per slot, each carrying a fresh trajectory, and leave
when their trajectory runs out. The configured count range is enforced by
suppressing arrivals at the top and by extending (continuing) trajectories at
the bottom, so |U| drifts inside [min, max] instead of emptying out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mobility import TraceSource, Trajectory


@dataclass
class ActiveUser:
    uid: int
    entry_slot: int
    trajectory: Trajectory
    # seconds already spent on earlier (exhausted) trajectory segments
    segment_offset: float = 0.0


@dataclass
class PopulationProcess:
    """Single-owner state machine advancing the active user set slot by slot."""

    user_count_range: tuple[int, int]
    slot_duration: float
    arrival_rate: float = 0.5  # users per slot
    duration_range: tuple[float, float] = (60.0, 240.0)  # seconds per trajectory
    users: dict[int, ActiveUser] = field(default_factory=dict)
    next_uid: int = 0

    def _draw_duration(self, rng: np.random.Generator) -> float:
        lo, hi = self.duration_range
        return float(rng.uniform(lo, hi))

    def _spawn(self, slot: int, source, rng: np.random.Generator) -> ActiveUser:
        traj = source.sample(rng, self._draw_duration(rng))
        user = ActiveUser(uid=self.next_uid, entry_slot=slot, trajectory=traj)
        self.next_uid += 1
        self.users[user.uid] = user
        return user

    def seed_users(self, count: int, source, rng: np.random.Generator) -> None:
        lo, hi = self.user_count_range
        if not lo <= count <= hi:
            raise ValueError(f"initial user count {count} outside range [{lo}, {hi}]")
        for _ in range(count):
            self._spawn(slot=0, source=source, rng=rng)

    def _local_time(self, user: ActiveUser, slot: int) -> float:
        return (slot - user.entry_slot) * self.slot_duration - user.segment_offset

    def position_of(self, uid: int, slot: int) -> np.ndarray:
        user = self.users[uid]
        return user.trajectory.position_at(self._local_time(user, slot))

    def step(self, slot: int, source, rng: np.random.Generator):
        """Advance to `slot`: retire exhausted users, admit arrivals.

        Returns (departed uids, arrived uids). Users are processed in uid
        order so the draw sequence is a pure function of the rng stream.
        """
        lo, hi = self.user_count_range
        departed: list[int] = []
        for uid in sorted(self.users):
            user = self.users[uid]
            local = self._local_time(user, slot)
            if local <= user.trajectory.duration:
                continue
            if len(self.users) - 1 >= lo:
                del self.users[uid]
                departed.append(uid)
            else:
                # too few users to let this one go: continue from its endpoint
                end = user.trajectory.xy[-1]
                if isinstance(source, TraceSource):
                    extra = source.sample(rng, self._draw_duration(rng), start=end,
                                          previous=user.trajectory)
                else:
                    extra = source.sample(rng, self._draw_duration(rng), start=end)
                user.segment_offset += user.trajectory.duration
                user.trajectory = extra
        arrived: list[int] = []
        n_arrivals = int(rng.poisson(self.arrival_rate))
        n_arrivals = min(n_arrivals, hi - len(self.users))
        for _ in range(max(0, n_arrivals)):
            arrived.append(self._spawn(slot, source, rng).uid)
        return departed, arrived

    def to_snapshot(self) -> dict:
        return {
            "user_count_range": list(self.user_count_range),
            "slot_duration": self.slot_duration,
            "arrival_rate": self.arrival_rate,
            "duration_range": list(self.duration_range),
            "next_uid": self.next_uid,
            "users": [
                {
                    "uid": u.uid,
                    "entry_slot": u.entry_slot,
                    "segment_offset": u.segment_offset,
                    "t": u.trajectory.t.tolist(),
                    "xy": u.trajectory.xy.tolist(),
                }
                for u in (self.users[k] for k in sorted(self.users))
            ],
        }

    @classmethod
    def from_snapshot(cls, data: dict) -> "PopulationProcess":
        proc = cls(
            user_count_range=tuple(data["user_count_range"]),
            slot_duration=data["slot_duration"],
            arrival_rate=data["arrival_rate"],
            duration_range=tuple(data["duration_range"]),
            next_uid=data["next_uid"],
        )
        for u in data["users"]:
            proc.users[u["uid"]] = ActiveUser(
                uid=u["uid"],
                entry_slot=u["entry_slot"],
                segment_offset=u["segment_offset"],
                trajectory=Trajectory(
                    t=np.asarray(u["t"]), xy=np.asarray(u["xy"])
                ),
            )
        return proc
