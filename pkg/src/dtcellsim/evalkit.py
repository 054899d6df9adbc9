"""Evaluation: frozen-policy rollouts, rate statistics, trajectory metrics.

Two policy adapters share the rollout driver so the learned agent and the
strongest-signal baseline are measured under identical dynamics streams.
Trajectory realism metrics (EDR, DTW, visit-heatmap cosine, sliced
Wasserstein) compare generated traces against held-out references.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .netenv import RATE_FLOOR, NetworkEnv

EDR_MATCH_RADIUS = 20.0  # metres; pairs closer than this count as equal
HEATMAP_GRID = 192


# -- policies ----------------------------------------------------------------


def max_sinr_policy(sinr) -> int:
    """Strongest-station choice; argmax breaks ties toward the lower index."""
    return int(np.argmax(np.asarray(sinr)))


class MaxSinrPolicy:
    """Associate every user with its strongest station; memory-free."""

    def reset(self):
        pass

    def act(self, env: NetworkEnv) -> np.ndarray:
        return np.argmax(env.sinr, axis=1)


class AgentPolicy:
    """Recurrent policy adapter; keeps one LSTM memory per live user.

    Deployment default is greedy (argmax of the masked distribution), which
    avoids the handover churn a sampled policy pays for residual entropy.
    Pass stochastic=True to reproduce training-time behavior.
    """

    def __init__(self, net, stochastic: bool = False):
        self.net = net
        self.stochastic = stochastic
        self.memories: dict[int, tuple] = {}

    def reset(self):
        self.memories.clear()

    def act(self, env: NetworkEnv) -> np.ndarray:
        import torch

        from .agent.policy import act_batch

        uids = list(env.uids)
        hidden = self.net.hidden
        h = np.zeros((len(uids), hidden), dtype=np.float32)
        c = np.zeros((len(uids), hidden), dtype=np.float32)
        for i, uid in enumerate(uids):
            if uid in self.memories:
                h[i], c[i] = self.memories[uid]
        memory = (torch.from_numpy(h), torch.from_numpy(c))
        obs = env.obs_matrix.astype(np.float32)
        if self.stochastic:
            actions, _, _, (h2, c2) = act_batch(self.net, obs, memory,
                                                env.masks(), env.action_rng)
        else:
            with torch.no_grad():
                logits, _, (h2, c2) = self.net(
                    torch.from_numpy(obs), memory,
                    torch.from_numpy(env.masks()))
            actions = logits.argmax(dim=1).numpy().astype(np.int64)
        h2 = h2.numpy()
        c2 = c2.numpy()
        live = set(uids)
        self.memories = {u: m for u, m in self.memories.items() if u in live}
        for i, uid in enumerate(uids):
            self.memories[uid] = (h2[i].copy(), c2[i].copy())
        return actions


# -- rate statistics ----------------------------------------------------------


def five_pct_rate(rates) -> float:
    """5th percentile with linear interpolation between order statistics."""
    return float(np.percentile(np.asarray(rates, dtype=np.float64), 5.0))


def log_utility(rates) -> float:
    rates = np.asarray(rates, dtype=np.float64)
    return float(np.mean(np.log10(np.maximum(rates, RATE_FLOOR))))


def rate_cdf(rates, n_points: int = 1000) -> list[list[float]]:
    """[(rate, P(X <= rate))] at evenly spaced probability levels."""
    rates = np.sort(np.asarray(rates, dtype=np.float64))
    ps = np.linspace(0.0, 1.0, n_points)
    qs = np.quantile(rates, ps)
    return [[float(q), float(p)] for q, p in zip(qs, ps)]


@dataclass
class EvalReport:
    five_pct_rate: float
    utility: float
    handover_per_user_slot: float
    cdf: list[list[float]]

    def to_dict(self) -> dict:
        return {
            "five_pct_rate": self.five_pct_rate,
            "utility": self.utility,
            "handover_per_user_slot": self.handover_per_user_slot,
            "cdf": self.cdf,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "EvalReport":
        return cls(**json.loads(Path(path).read_text()))


def evaluate_policy(policy, env: NetworkEnv, n_slots: int,
                    initial_user_count: int | None = None) -> EvalReport:
    """Roll a policy for `n_slots` slots and pool every user-slot rate."""
    if initial_user_count is not None:
        env.reset(initial_user_count)
        policy.reset()
    all_rates: list[np.ndarray] = []
    handovers = 0
    samples = 0
    for _ in range(n_slots):
        actions = policy.act(env)
        _, info = env.step(actions)
        all_rates.append(info["rates"])
        handovers += info["handovers"]
        samples += info["n_users"]
    pooled = np.concatenate(all_rates)
    return EvalReport(
        five_pct_rate=five_pct_rate(pooled),
        utility=log_utility(pooled),
        handover_per_user_slot=handovers / max(samples, 1),
        cdf=rate_cdf(pooled),
    )


# -- trajectory metrics --------------------------------------------------------


def _as_points(traj) -> np.ndarray:
    if hasattr(traj, "xy"):
        return np.asarray(traj.xy, dtype=np.float64)
    return np.asarray(traj, dtype=np.float64)


def edr(a, b, match_radius: float = EDR_MATCH_RADIUS) -> float:
    """Edit distance on real sequences with unit insert/delete/substitute cost.

    Points strictly closer than `match_radius` are treated as equal. The
    result is an integer-valued float in [0, max(len(a), len(b))].
    """
    pa, pb = _as_points(a), _as_points(b)
    n, m = len(pa), len(pb)
    if n == 0 or m == 0:
        return float(max(n, m))
    close = (np.linalg.norm(pa[:, None, :] - pb[None, :, :], axis=2)
             < match_radius)
    prev = np.arange(m + 1, dtype=np.float64)
    cur = np.empty(m + 1)
    for i in range(1, n + 1):
        cur[0] = i
        for j in range(1, m + 1):
            sub = prev[j - 1] + (0.0 if close[i - 1, j - 1] else 1.0)
            cur[j] = min(sub, prev[j] + 1.0, cur[j - 1] + 1.0)
        prev, cur = cur, prev
    return float(prev[m])


def dtw(a, b) -> float:
    """Dynamic time warping cost with squared Euclidean point distances."""
    pa, pb = _as_points(a), _as_points(b)
    n, m = len(pa), len(pb)
    if n == 0 or m == 0:
        raise ValueError("dtw requires non-empty sequences")
    d2 = np.sum((pa[:, None, :] - pb[None, :, :]) ** 2, axis=2)
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            acc[i, j] = d2[i - 1, j - 1] + min(acc[i - 1, j - 1],
                                               acc[i - 1, j], acc[i, j - 1])
    return float(acc[n, m])


@dataclass
class HeatmapGrid:
    """Square visit-count histogram over a fixed bounding box."""

    bbox: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    grid: int = HEATMAP_GRID

    def _bin(self, points: np.ndarray) -> np.ndarray:
        xmin, ymin, xmax, ymax = self.bbox
        sx = (points[:, 0] - xmin) / (xmax - xmin) * self.grid
        sy = (points[:, 1] - ymin) / (ymax - ymin) * self.grid
        ix = np.clip(sx.astype(np.int64), 0, self.grid - 1)
        iy = np.clip(sy.astype(np.int64), 0, self.grid - 1)
        counts = np.zeros((self.grid, self.grid), dtype=np.float64)
        np.add.at(counts, (iy, ix), 1.0)
        return counts

    def density(self, trajectories) -> np.ndarray:
        """Pool all points from all trajectories and normalize to sum 1."""
        pts = np.concatenate([_as_points(t) for t in trajectories])
        counts = self._bin(pts)
        total = counts.sum()
        if total == 0.0:
            raise ValueError("no points fell inside the heatmap bounding box")
        return counts / total

    def cell_centers(self) -> np.ndarray:
        """(grid*grid, 2) physical centers, row-major to match density.ravel()."""
        xmin, ymin, xmax, ymax = self.bbox
        xs = xmin + (np.arange(self.grid) + 0.5) * (xmax - xmin) / self.grid
        ys = ymin + (np.arange(self.grid) + 0.5) * (ymax - ymin) / self.grid
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx.ravel(), gy.ravel()], axis=1)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for zero-norm input")
    return float(np.dot(a, b) / (na * nb))


def _wasserstein_1d(x, wx, y, wy) -> float:
    """W1 between weighted atom sets on the line, by quantile matching."""
    xs = np.argsort(x, kind="stable")
    ys = np.argsort(y, kind="stable")
    x, wx = x[xs], wx[xs] / wx.sum()
    y, wy = y[ys], wy[ys] / wy.sum()
    cx, cy = np.cumsum(wx), np.cumsum(wy)
    qs = np.union1d(cx, cy)
    qs[-1] = 1.0  # guard cumulative roundoff
    q_prev = np.concatenate([[0.0], qs[:-1]])
    widths = qs - q_prev
    xi = np.minimum(np.searchsorted(cx, q_prev, side="right"), len(x) - 1)
    yi = np.minimum(np.searchsorted(cy, q_prev, side="right"), len(y) - 1)
    return float(np.sum(widths * np.abs(x[xi] - y[yi])))


def sliced_wasserstein_points(points_a, weights_a, points_b, weights_b,
                              n_projections: int = 128,
                              rng: np.random.Generator | None = None) -> float:
    """Mean 1-D Wasserstein distance over projection directions.

    With no rng the angles are midpoints of [0, pi), deterministic and
    converging quadratically to the rotation average; with an rng they are
    uniform draws, the Monte Carlo estimator.
    """
    pa = np.asarray(points_a, dtype=np.float64)
    pb = np.asarray(points_b, dtype=np.float64)
    wa = np.asarray(weights_a, dtype=np.float64)
    wb = np.asarray(weights_b, dtype=np.float64)
    keep_a, keep_b = wa > 0, wb > 0
    pa, wa = pa[keep_a], wa[keep_a]
    pb, wb = pb[keep_b], wb[keep_b]
    if len(pa) == 0 or len(pb) == 0:
        raise ValueError("sliced_wasserstein requires non-empty distributions")
    if rng is None:
        angles = (np.arange(n_projections) + 0.5) * np.pi / n_projections
    else:
        angles = rng.uniform(0.0, np.pi, n_projections)
    total = 0.0
    for theta in angles:
        u = np.array([np.cos(theta), np.sin(theta)])
        total += _wasserstein_1d(pa @ u, wa, pb @ u, wb)
    return total / n_projections


def sliced_wasserstein(density_a: np.ndarray, density_b: np.ndarray,
                       grid: HeatmapGrid, n_projections: int = 128,
                       rng: np.random.Generator | None = None) -> float:
    """Sliced Wasserstein between two normalized visit densities.

    Cell masses become weighted atoms at physical cell centers; inputs must
    each sum to 1.
    """
    da = np.asarray(density_a, dtype=np.float64)
    db = np.asarray(density_b, dtype=np.float64)
    for d in (da, db):
        if abs(d.sum() - 1.0) > 1e-6:
            raise ValueError("density grids must be normalized to sum 1")
    centers = grid.cell_centers()
    return sliced_wasserstein_points(centers, da.ravel(), centers, db.ravel(),
                                     n_projections=n_projections, rng=rng)


def min_match_score(generated, references, metric) -> float:
    """Mean over generated items of the distance to the closest reference."""
    if not generated or not references:
        raise ValueError("min_match_score requires non-empty sets")
    scores = [min(metric(g, r) for r in references) for g in generated]
    return float(np.mean(scores))


def trajectory_metrics(generated, references,
                       bbox: tuple[float, float, float, float],
                       match_radius: float = EDR_MATCH_RADIUS) -> dict:
    """The full realism suite between two trace sets, as one flat dict."""
    grid = HeatmapGrid(bbox)
    da = grid.density(generated)
    db = grid.density(references)
    return {
        "edr": min_match_score(generated, references,
                               lambda a, b: edr(a, b, match_radius)),
        "dtw": min_match_score(generated, references, dtw),
        "heatmap_cosine": cosine_similarity(da, db),
        "heatmap_swd": sliced_wasserstein(da, db, grid),
    }
