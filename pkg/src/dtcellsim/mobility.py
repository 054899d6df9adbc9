"""User mobility: trajectory container and the generative movement models.

A Trajectory is a sparse list of timestamped breakpoints; positions between
breakpoints are linear interpolations. Sources share one protocol: sample a
fresh trajectory, optionally continuing from a given start point so a user
whose path ran out can be kept alive without teleporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .streets import StreetGraph, shortest_path


@dataclass
class Trajectory:
    """Ordered (t, x, y) samples with strictly increasing timestamps."""

    t: np.ndarray  # (n,) seconds, t[0] == 0
    xy: np.ndarray  # (n, 2) meters

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.xy = np.asarray(self.xy, dtype=np.float64)
        if self.t.ndim != 1 or self.xy.shape != (len(self.t), 2):
            raise ValueError("trajectory arrays must be (n,) and (n, 2)")
        if len(self.t) == 0:
            raise ValueError("trajectory must contain at least one point")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory timestamps must strictly increase")
        # rebase so every trajectory starts at t = 0
        self.t = self.t - self.t[0]

    @property
    def duration(self) -> float:
        return float(self.t[-1])

    def position_at(self, time: float) -> np.ndarray:
        """Piecewise-linear position; clamped to the endpoints outside [0, duration]."""
        if time <= self.t[0]:
            return self.xy[0].copy()
        if time >= self.t[-1]:
            return self.xy[-1].copy()
        i = int(np.searchsorted(self.t, time, side="right")) - 1
        if self.t[i] == time:
            return self.xy[i].copy()
        frac = (time - self.t[i]) / (self.t[i + 1] - self.t[i])
        return self.xy[i] + frac * (self.xy[i + 1] - self.xy[i])

    def reversed(self) -> "Trajectory":
        rev_t = self.t[-1] - self.t[::-1]
        return Trajectory(t=rev_t, xy=self.xy[::-1].copy())


class RwpSource:
    """Random waypoint: uniform destinations, one uniform speed per leg."""

    def __init__(self, area: tuple[float, float], v_range: tuple[float, float] = (0.5, 2.0)):
        if v_range[0] <= 0 or v_range[1] < v_range[0]:
            raise ValueError("v_range must be positive and ordered")
        self.area = area
        self.v_range = v_range

    def sample(self, rng: np.random.Generator, duration: float, start=None,
               previous=None) -> Trajectory:
        w, h = self.area
        pos = (np.array([rng.uniform(0, w), rng.uniform(0, h)])
               if start is None else np.asarray(start, dtype=np.float64))
        ts = [0.0]
        pts = [pos.copy()]
        t = 0.0
        while t < duration:
            dest = np.array([rng.uniform(0, w), rng.uniform(0, h)])
            speed = rng.uniform(*self.v_range)
            dist = float(np.linalg.norm(dest - pos))
            if dist < 1e-9:
                continue
            leg_time = dist / speed
            if t + leg_time > duration:
                # cut the final leg so the trajectory ends exactly at `duration`
                frac = (duration - t) / leg_time
                dest = pos + frac * (dest - pos)
                leg_time = duration - t
            t += leg_time
            ts.append(t)
            pts.append(dest)
            pos = dest
        return Trajectory(t=np.array(ts), xy=np.array(pts))


class GmSource:
    """Gauss-Markov: speed and heading follow first-order autoregressions.

    s' = m*s + (1-m)*mean + sqrt(1-m^2)*noise*xi, so the stationary speed
    variance is noise^2 for any memory m < 1. Headings reflect off the area
    boundary, which also re-centers the heading mean.
    """

    def __init__(self, area, mean_speed=1.5, memory=0.85, noise=0.3, step_time=1.0):
        if not 0.0 <= memory <= 1.0:
            raise ValueError("memory must lie in [0, 1]")
        self.area = area
        self.mean_speed = mean_speed
        self.memory = memory
        self.noise = noise
        self.step_time = step_time

    def sample(self, rng: np.random.Generator, duration: float, start=None,
               previous=None) -> Trajectory:
        w, h = self.area
        pos = (np.array([rng.uniform(0, w), rng.uniform(0, h)])
               if start is None else np.asarray(start, dtype=np.float64))
        if duration <= 0:
            return Trajectory(t=np.array([0.0]), xy=pos[None, :].copy())
        n_steps = max(1, int(math.ceil(duration / self.step_time)))
        m = self.memory
        drift = math.sqrt(max(0.0, 1.0 - m * m))
        speed = self.mean_speed
        heading = rng.uniform(0.0, 2.0 * np.pi)
        mean_heading = heading
        ts = [0.0]
        pts = [pos.copy()]
        for k in range(1, n_steps + 1):
            speed = m * speed + (1 - m) * self.mean_speed + drift * self.noise * rng.standard_normal()
            speed = abs(speed)
            heading = (m * heading + (1 - m) * mean_heading
                       + drift * self.noise * rng.standard_normal())
            dt = min(self.step_time, duration - (k - 1) * self.step_time)
            pos = pos + speed * dt * np.array([math.cos(heading), math.sin(heading)])
            # reflect at the boundary and flip the heading (and its mean) with it
            if pos[0] < 0 or pos[0] > w:
                pos[0] = min(max(-pos[0] if pos[0] < 0 else 2 * w - pos[0], 0.0), w)
                heading = math.pi - heading
                mean_heading = math.pi - mean_heading
            if pos[1] < 0 or pos[1] > h:
                pos[1] = min(max(-pos[1] if pos[1] < 0 else 2 * h - pos[1], 0.0), h)
                heading = -heading
                mean_heading = -mean_heading
            ts.append(min(k * self.step_time, duration))
            pts.append(pos.copy())
            if ts[-1] >= duration:
                break
        return Trajectory(t=np.array(ts), xy=np.array(pts))


class MapRwpSource:
    """Waypoints drawn on a street graph; legs follow minimum-hop routes."""

    def __init__(self, graph: StreetGraph, v_range: tuple[float, float] = (0.5, 2.0)):
        if v_range[0] <= 0 or v_range[1] < v_range[0]:
            raise ValueError("v_range must be positive and ordered")
        self.graph = graph
        self.v_range = v_range

    def _nearest_node(self, point) -> int:
        d = np.linalg.norm(self.graph.nodes - np.asarray(point)[None, :], axis=1)
        return int(np.argmin(d))

    def sample(self, rng: np.random.Generator, duration: float, start=None,
               previous=None) -> Trajectory:
        node = (int(rng.integers(self.graph.n_nodes)) if start is None
                else self._nearest_node(start))
        ts = [0.0]
        pts = [self.graph.nodes[node].copy()]
        t = 0.0
        while t < duration:
            dest = int(rng.integers(self.graph.n_nodes))
            if dest == node:
                continue
            path = shortest_path(self.graph, node, dest)
            speed = rng.uniform(*self.v_range)
            done = False
            for nxt in path[1:]:
                seg = self.graph.nodes[nxt] - pts[-1]
                seg_time = float(np.linalg.norm(seg)) / speed
                if seg_time < 1e-12:
                    continue
                if t + seg_time > duration:
                    frac = (duration - t) / seg_time
                    pts.append(pts[-1] + frac * seg)
                    ts.append(duration)
                    done = True
                    break
                t += seg_time
                ts.append(t)
                pts.append(self.graph.nodes[nxt].copy())
            if done:
                break
            node = dest
        return Trajectory(t=np.array(ts), xy=np.array(pts))


class MapGmSource:
    """Gauss-Markov dynamics constrained to street edges.

    The speed/heading autoregression runs as in the free model, but each step
    moves along the incident edge whose direction is closest to the desired
    heading; overshoot past a node continues onto the next chosen edge.
    """

    def __init__(self, graph: StreetGraph, mean_speed=1.5, memory=0.85, noise=0.3,
                 step_time=1.0):
        if not 0.0 <= memory <= 1.0:
            raise ValueError("memory must lie in [0, 1]")
        self.graph = graph
        self.mean_speed = mean_speed
        self.memory = memory
        self.noise = noise
        self.step_time = step_time

    def _nearest_node(self, point) -> int:
        d = np.linalg.norm(self.graph.nodes - np.asarray(point)[None, :], axis=1)
        return int(np.argmin(d))

    def _pick_edge(self, node: int, heading: float, exclude: int | None) -> int:
        """Neighbor whose edge direction best matches the heading; avoids an
        immediate U-turn unless the node is a dead end."""
        neighbors = self.graph.adjacency()[node]
        if not neighbors:
            return node
        candidates = [v for v in neighbors if v != exclude] or list(neighbors)
        want = np.array([math.cos(heading), math.sin(heading)])
        best, best_dot = candidates[0], -np.inf
        for v in candidates:
            seg = self.graph.nodes[v] - self.graph.nodes[node]
            seg = seg / (np.linalg.norm(seg) + 1e-12)
            dot = float(seg @ want)
            if dot > best_dot:
                best, best_dot = v, dot
        return best

    def sample(self, rng: np.random.Generator, duration: float, start=None,
               previous=None) -> Trajectory:
        node = (int(rng.integers(self.graph.n_nodes)) if start is None
                else self._nearest_node(start))
        m = self.memory
        drift = math.sqrt(max(0.0, 1.0 - m * m))
        speed = self.mean_speed
        heading = rng.uniform(0.0, 2.0 * np.pi)
        mean_heading = heading
        prev_node: int | None = None
        target = self._pick_edge(node, heading, prev_node)
        pos = self.graph.nodes[node].copy()
        ts = [0.0]
        pts = [pos.copy()]
        t = 0.0
        while t < duration:
            speed = abs(m * speed + (1 - m) * self.mean_speed
                        + drift * self.noise * rng.standard_normal())
            heading = (m * heading + (1 - m) * mean_heading
                       + drift * self.noise * rng.standard_normal())
            remaining = speed * min(self.step_time, duration - t)
            if remaining < 1e-9:
                t += self.step_time
                ts.append(min(t, duration))
                pts.append(pos.copy())
                continue
            while remaining > 1e-9:
                if target == node and np.allclose(pos, self.graph.nodes[node]):
                    break  # isolated node, nowhere to go
                seg = self.graph.nodes[target] - pos
                seg_len = float(np.linalg.norm(seg))
                if seg_len <= remaining:
                    pos = self.graph.nodes[target].copy()
                    remaining -= seg_len
                    prev_node, node = node, target
                    target = self._pick_edge(node, heading, prev_node)
                else:
                    pos = pos + seg * (remaining / seg_len)
                    remaining = 0.0
            t += self.step_time
            ts.append(min(t, duration))
            pts.append(pos.copy())
        return Trajectory(t=np.array(ts), xy=np.array(pts))


class TraceSource:
    """Plays back pre-recorded trajectories, drawing uniformly per request.

    Continuations (start is not None) walk the caller's current trajectory
    backwards instead of teleporting to a new trace.
    """

    def __init__(self, trajectories: list[Trajectory]):
        if not trajectories:
            raise ValueError("trace playback needs at least one trajectory")
        self.trajectories = trajectories

    def sample(self, rng: np.random.Generator, duration: float, start=None,
               previous: Trajectory | None = None) -> Trajectory:
        if start is not None and previous is not None:
            return previous.reversed()
        idx = int(rng.integers(len(self.trajectories)))
        traj = self.trajectories[idx]
        return Trajectory(t=traj.t.copy(), xy=traj.xy.copy())
