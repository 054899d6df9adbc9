"""Large-scale channel: urban-macro pathloss, spatially consistent shadow fading, gains.

Pathloss follows the TR 38.901 urban-macro NLOS curve. Shadow fading is a
sum of random plane waves whose wavevector magnitudes are drawn from the
radial spectrum of an exponentially decaying autocorrelation, so two queries
near each other are correlated and the field is a pure function of
(position, station, seed). Small-scale fading is deliberately absent: gains
model slot-averaged link quality.
"""

from __future__ import annotations

import math

import numpy as np

from .scenario import BaseStation, ScenarioConfig


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def pathloss_db(d2d, fc: float, h_bs: float = 25.0, h_ut: float = 1.5):
    """Urban-macro NLOS pathloss in dB.

    PL = 13.54 + 39.08 log10(d3D) + 20 log10(fc_GHz) - 0.6 (h_UT - 1.5),
    with d3D from the 2-D distance and the antenna height difference.
    Distances below 1 m are clamped to 1 m to keep the log finite.
    """
    d2d = np.maximum(np.asarray(d2d, dtype=np.float64), 1.0)
    d3d = np.sqrt(d2d * d2d + (h_bs - h_ut) ** 2)
    pl = 13.54 + 39.08 * np.log10(d3d) + 20.0 * np.log10(fc) - 0.6 * (h_ut - 1.5)
    if pl.ndim == 0:
        return float(pl)
    return pl


class ShadowField:
    """Per-station sum-of-sinusoids shadow fading field.

    Each station gets M plane-wave components with amplitude sigma*sqrt(2/M),
    uniform phases and directions, and wavevector magnitudes drawn by inverse
    CDF k = sqrt(1/(1-u)^2 - 1)/dc, the radial law whose superposition has
    autocorrelation exp(-d/dc). The u draws are stratified over components so
    small M still covers the spectrum.
    """

    def __init__(self, n_bs: int, sigma_sf: float, decorrelation_distance: float,
                 n_components: int, seed: int):
        self.sigma_sf = float(sigma_sf)
        self.decorrelation_distance = float(decorrelation_distance)
        self.n_bs = int(n_bs)
        m = int(n_components)
        children = np.random.SeedSequence(seed).spawn(n_bs)
        amp = np.empty((n_bs, m))
        kx = np.empty((n_bs, m))
        ky = np.empty((n_bs, m))
        phase = np.empty((n_bs, m))
        for j in range(n_bs):
            rng = np.random.default_rng(children[j])
            u = (np.arange(m) + rng.random(m)) / m
            k = np.sqrt(1.0 / (1.0 - u) ** 2 - 1.0) / self.decorrelation_distance
            theta = rng.uniform(0.0, 2.0 * np.pi, m)
            kx[j] = k * np.cos(theta)
            ky[j] = k * np.sin(theta)
            phase[j] = rng.uniform(0.0, 2.0 * np.pi, m)
            amp[j] = self.sigma_sf * math.sqrt(2.0 / m)
        self._amp, self._kx, self._ky, self._phase = amp, kx, ky, phase

    def shadow_db(self, position, bs_id: int) -> float:
        """Shadow fading in dB at one position for one station."""
        if not 0 <= bs_id < self.n_bs:
            raise KeyError(f"unknown base station id {bs_id}")
        x, y = float(position[0]), float(position[1])
        arg = self._kx[bs_id] * x + self._ky[bs_id] * y + self._phase[bs_id]
        return float(np.sum(self._amp[bs_id] * np.cos(arg)))

    def shadow_matrix(self, positions: np.ndarray) -> np.ndarray:
        """Shadow fading in dB for many positions at once, shape (U, B)."""
        x = positions[:, 0][:, None, None]
        y = positions[:, 1][:, None, None]
        arg = self._kx[None, :, :] * x + self._ky[None, :, :] * y + self._phase[None, :, :]
        return np.sum(self._amp[None, :, :] * np.cos(arg), axis=2)


def channel_gain(pl_db, sf_db, antenna_gain: float = 0.0):
    """Linear power gain from the dB budget: g = 10^(-(PL + SF - G_ant)/10)."""
    return 10.0 ** (-(np.asarray(pl_db, dtype=np.float64) + sf_db - antenna_gain) / 10.0)


def perturb_gain(g, magnitude: float, rng: np.random.Generator):
    """Multiply gains by (1+u) with u uniform in [-magnitude, +magnitude]."""
    if not 0.0 <= magnitude < 1.0:
        raise ValueError("perturbation magnitude must lie in [0, 1)")
    if magnitude == 0.0:
        return g
    g = np.asarray(g, dtype=np.float64)
    u = rng.uniform(-magnitude, magnitude, size=g.shape)
    return g * (1.0 + u)


class Channel:
    """Scenario-bound channel evaluator with a vectorized fast path.

    The per-slot hot loop uses gain_matrix; the scalar helpers exist so single
    links can be audited against the logged components.
    """

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.stations = config.base_stations()
        self.site_xy = np.array([bs.site_position for bs in self.stations])
        self.fc = np.array([bs.band.carrier_frequency for bs in self.stations])
        self.bandwidth = np.array([bs.band.bandwidth for bs in self.stations])
        self.tx_watt = np.array([dbm_to_watt(bs.tx_power) for bs in self.stations])
        self.band_index = np.array(
            [config.bands.index(bs.band) for bs in self.stations]
        )
        # 1 where stations k and j share a band and k != j; summing received
        # powers through this matrix never cancels, so SINR keeps full
        # precision even when the own signal dwarfs the interference
        same_band = self.band_index[:, None] == self.band_index[None, :]
        self._interferer = same_band.astype(np.float64)
        np.fill_diagonal(self._interferer, 0.0)
        self.noise_watt = self.bandwidth * dbm_to_watt(config.noise_psd)
        self.shadow = ShadowField(
            n_bs=config.num_bs,
            sigma_sf=config.sigma_sf,
            decorrelation_distance=config.decorrelation_distance,
            n_components=config.shadow_components,
            seed=config.master_seed,
        )

    def pathloss(self, user_position, bs: BaseStation) -> float:
        d2d = math.hypot(
            user_position[0] - bs.site_position[0],
            user_position[1] - bs.site_position[1],
        )
        return pathloss_db(d2d, bs.band.carrier_frequency,
                           bs.height, self.config.user_height)

    def gain(self, user_position, bs: BaseStation) -> float:
        pl = self.pathloss(user_position, bs)
        sf = self.shadow.shadow_db(user_position, bs.id)
        return float(channel_gain(pl, sf, self.config.antenna_gain))

    def gain_matrix(self, positions: np.ndarray) -> np.ndarray:
        """Linear gains for every (user, station) pair, shape (U, B)."""
        positions = np.asarray(positions, dtype=np.float64)
        d2d = np.hypot(
            positions[:, 0][:, None] - self.site_xy[None, :, 0],
            positions[:, 1][:, None] - self.site_xy[None, :, 1],
        )
        pl = pathloss_db(d2d, self.fc[None, :], self.config.bs_height,
                         self.config.user_height)
        sf = self.shadow.shadow_matrix(positions)
        return channel_gain(pl, sf, self.config.antenna_gain)

    def sinr_matrix(self, gains: np.ndarray) -> np.ndarray:
        """SINR for every (user, station) pair from a gain matrix.

        Interference is strictly intra-band: for station j on band k the
        denominator sums received power from every other band-k station plus
        thermal noise over j's bandwidth.
        """
        recv = gains * self.tx_watt[None, :]
        interference = recv @ self._interferer
        return recv / (interference + self.noise_watt[None, :])
