"""Physical scenario description: hexagonal site layout, frequency bands, radio constants.

A scenario pins down everything static about the network: the service area,
the base-station sites and their bands, transmit power, noise density, the
slot length and the stochastic handover interruption model. Base stations are
indexed site-major then band, so two co-located radios on different bands are
distinct entries in the flattened set B.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

from .errors import ConfigError


@dataclass(frozen=True)
class Band:
    """One frequency band: carrier in GHz, bandwidth in Hz."""

    carrier_frequency: float
    bandwidth: float

    def validate(self):
        if self.carrier_frequency <= 0 or self.bandwidth <= 0:
            raise ConfigError("band carrier frequency and bandwidth must be positive")


@dataclass(frozen=True)
class BaseStation:
    """A single radio unit. Co-located units on different bands share site_position."""

    id: int
    site_position: tuple[float, float]
    height: float
    band: Band
    tx_power: float  # dBm


@dataclass(frozen=True)
class HandoverModel:
    """Stochastic interruption charged when a user switches serving stations.

    A switch succeeds with success_probability and costs success_interruption
    seconds of dead air; otherwise it costs failure_interruption seconds.
    Staying on the same station costs nothing.
    """

    success_probability: float = 0.8
    success_interruption: float = 0.020
    failure_interruption: float = 0.09076
    slot_duration: float = 0.1

    def validate(self):
        if not 0.0 <= self.success_probability <= 1.0:
            raise ConfigError("handover success probability must lie in [0, 1]")
        for t in (self.success_interruption, self.failure_interruption):
            if not 0.0 <= t < self.slot_duration:
                raise ConfigError("handover interruptions must lie in [0, slot_duration)")


def build_hex_layout(area: tuple[float, float], isd: float) -> list[tuple[float, float]]:
    """Place sites on a triangular lattice with the given inter-site distance.

    Rows are spaced isd*sqrt(3)/2 apart and alternately offset by isd/2, the
    whole pattern centered on the area and cropped to it (bounds inclusive).
    Nearest neighbours within a row and across adjacent rows are exactly isd
    apart. An area too small to retain any lattice point degenerates to a
    single site at the area center.
    """
    w, h = area
    if isd <= 0:
        raise ConfigError("inter-site distance must be positive")
    if w <= 0 or h <= 0:
        raise ConfigError("area dimensions must be positive")

    row_pitch = isd * math.sqrt(3.0) / 2.0
    n_rows = int(math.floor(h / row_pitch)) + 1
    cx, cy = w / 2.0, h / 2.0
    eps = 1e-9
    sites: list[tuple[float, float]] = []
    for k in range(n_rows):
        y = cy + (k - (n_rows - 1) / 2.0) * row_pitch
        if y < -eps or y > h + eps:
            continue
        # even rows (counted from the bottom) are shifted by half the pitch
        offset = isd / 2.0 if k % 2 == 0 else 0.0
        c_min = int(math.floor((-cx - offset) / isd)) - 1
        c_max = int(math.ceil((w - cx - offset) / isd)) + 1
        for c in range(c_min, c_max + 1):
            x = cx + offset + c * isd
            if -eps <= x <= w + eps:
                sites.append((min(max(x, 0.0), w), min(max(y, 0.0), h)))
    if not sites:
        return [(cx, cy)]
    sites.sort(key=lambda p: (p[1], p[0]))
    return sites


def expand_base_stations(
    sites: list[tuple[float, float]],
    bands: list[Band],
    powers: float | list[float],
    height: float = 25.0,
) -> list[BaseStation]:
    """Flatten sites x bands into the station set B, site-major then band.

    With two bands, stations 2k and 2k+1 are co-located. `powers` is either a
    single dBm value for every station or one value per band.
    """
    if not sites or not bands:
        raise ConfigError("need at least one site and one band")
    if isinstance(powers, (int, float)):
        powers = [float(powers)] * len(bands)
    if len(powers) != len(bands):
        raise ConfigError("powers must be scalar or one per band")
    stations = []
    for s, pos in enumerate(sites):
        for b, band in enumerate(bands):
            stations.append(
                BaseStation(
                    id=s * len(bands) + b,
                    site_position=(float(pos[0]), float(pos[1])),
                    height=height,
                    band=band,
                    tx_power=powers[b],
                )
            )
    return stations


@dataclass
class ScenarioConfig:
    """Immutable description of one simulated network.

    `sites` is derived from (area, inter_site_distance) unless given
    explicitly. Shadow-fading shape parameters live here too so a scenario
    file fully determines the channel.
    """

    area: tuple[float, float] = (2000.0, 2000.0)
    inter_site_distance: float = 500.0
    sites: list[tuple[float, float]] = field(default_factory=list)
    bands: list[Band] = field(
        default_factory=lambda: [Band(3.7, 40e6), Band(0.7, 10e6)]
    )
    tx_power: float = 46.0  # dBm, every station
    bs_height: float = 25.0
    user_height: float = 1.5
    noise_psd: float = -174.0  # dBm/Hz
    slot_duration: float = 0.1  # seconds
    handover: HandoverModel = field(default_factory=HandoverModel)
    reward_alpha: float = 0.5
    mask_top_n: int = 8
    user_count_range: tuple[int, int] = (100, 400)
    master_seed: int = 0
    antenna_gain: float = 0.0  # dBi
    sigma_sf: float = 6.0  # dB
    decorrelation_distance: float = 50.0  # meters
    shadow_components: int = 30

    def __post_init__(self):
        if not self.sites:
            self.sites = build_hex_layout(self.area, self.inter_site_distance)
        self.validate()

    def validate(self):
        if not 0.0 <= self.reward_alpha <= 1.0:
            raise ConfigError("reward_alpha must lie in [0, 1]")
        for band in self.bands:
            band.validate()
        self.handover.validate()
        if abs(self.handover.slot_duration - self.slot_duration) > 1e-12:
            raise ConfigError("handover slot_duration must match the scenario slot_duration")
        if not 1 <= self.mask_top_n <= self.num_bs:
            raise ConfigError("mask_top_n must lie in [1, |B|]")
        lo, hi = self.user_count_range
        if not 1 <= lo <= hi:
            raise ConfigError("user_count_range must satisfy 1 <= min <= max")
        if self.shadow_components < 1:
            raise ConfigError("shadow_components must be >= 1")

    @property
    def num_bs(self) -> int:
        return len(self.sites) * len(self.bands)

    def base_stations(self) -> list[BaseStation]:
        return expand_base_stations(self.sites, self.bands, self.tx_power, self.bs_height)

    def to_dict(self) -> dict:
        return {
            "area": [self.area[0], self.area[1]],
            "inter_site_distance": self.inter_site_distance,
            "sites": [[x, y] for x, y in self.sites],
            "bands": [
                {"carrier_frequency": b.carrier_frequency, "bandwidth": b.bandwidth}
                for b in self.bands
            ],
            "tx_power": self.tx_power,
            "bs_height": self.bs_height,
            "user_height": self.user_height,
            "noise_psd": self.noise_psd,
            "slot_duration": self.slot_duration,
            "handover": {
                "success_probability": self.handover.success_probability,
                "success_interruption": self.handover.success_interruption,
                "failure_interruption": self.handover.failure_interruption,
                "slot_duration": self.handover.slot_duration,
            },
            "reward_alpha": self.reward_alpha,
            "mask_top_n": self.mask_top_n,
            "user_count_range": [self.user_count_range[0], self.user_count_range[1]],
            "master_seed": self.master_seed,
            "antenna_gain": self.antenna_gain,
            "sigma_sf": self.sigma_sf,
            "decorrelation_distance": self.decorrelation_distance,
            "shadow_components": self.shadow_components,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        try:
            handover = HandoverModel(**data["handover"]) if "handover" in data else HandoverModel()
            kwargs = dict(data)
            kwargs["handover"] = handover
            if "area" in kwargs:
                kwargs["area"] = tuple(kwargs["area"])
            if "sites" in kwargs:
                kwargs["sites"] = [tuple(p) for p in kwargs["sites"]]
            if "bands" in kwargs:
                kwargs["bands"] = [Band(**b) for b in kwargs["bands"]]
            if "user_count_range" in kwargs:
                kwargs["user_count_range"] = tuple(kwargs["user_count_range"])
            return cls(**kwargs)
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"malformed scenario config: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def default_config(master_seed: int = 0) -> ScenarioConfig:
    """The full-scale scenario: 22 sites x 2 bands over 2 km x 2 km."""
    return ScenarioConfig(master_seed=master_seed)


def desk_config(master_seed: int = 0) -> ScenarioConfig:
    """A 7-site x 2-band variant small enough to train on a laptop."""
    return ScenarioConfig(
        area=(1000.0, 1000.0),
        user_count_range=(20, 60),
        master_seed=master_seed,
    )
