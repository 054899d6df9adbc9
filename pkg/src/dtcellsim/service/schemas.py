"""Request/response models for the service endpoints."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

MobilityModel = Literal["rwp", "gm", "mrwp", "mgm", "playback"]


class MobilitySpec(BaseModel):
    """How user trajectories are produced for an environment or a trace file."""

    model: MobilityModel = "rwp"
    v_min: float = Field(0.5, gt=0, description="m/s, waypoint models")
    v_max: float = Field(2.0, gt=0)
    mean_speed: float = Field(1.5, gt=0, description="m/s, Gauss-Markov models")
    memory: float = Field(0.85, ge=0, le=1)
    noise: float = Field(0.3, ge=0)
    step_time: float = Field(1.0, gt=0, description="s between Gauss-Markov steps")
    graph_path: Optional[str] = None
    traces_path: Optional[str] = None

    @model_validator(mode="after")
    def _required_inputs(self):
        if self.model in ("mrwp", "mgm") and not self.graph_path:
            raise ValueError(f"{self.model} mobility requires graph_path")
        if self.model == "playback" and not self.traces_path:
            raise ValueError("playback mobility requires traces_path")
        if self.v_max < self.v_min:
            raise ValueError("v_max must be >= v_min")
        return self


class ScenarioInitRequest(BaseModel):
    scale: Literal["full", "desk"] = "full"
    overrides: dict = Field(default_factory=dict)


class ScenarioResponse(BaseModel):
    config: dict
    config_hash: str
    n_bs: int


class MapSynthRequest(BaseModel):
    seed: int = 0
    width: float = Field(1000.0, gt=0)
    height: float = Field(1000.0, gt=0)
    block_size: float = Field(150.0, gt=0)
    drop_fraction: float = Field(0.15, ge=0, lt=0.5)


class MapSynthResponse(BaseModel):
    graph: dict
    n_nodes: int
    n_edges: int


class MobilityGenRequest(BaseModel):
    spec: MobilitySpec = Field(default_factory=MobilitySpec)
    count: int = Field(10, ge=0)
    seed: int = 0
    duration_s: float = Field(600.0, ge=0)
    width: float = Field(2000.0, gt=0)
    height: float = Field(2000.0, gt=0)


class MobilityGenResponse(BaseModel):
    csv: str
    count: int


class TrainRequest(BaseModel):
    scenario: dict = Field(description="full scenario config document")
    trainer: dict = Field(default_factory=dict,
                          description="trainer config field overrides")
    mobility: MobilitySpec = Field(default_factory=MobilitySpec)
    out_dir: str


class TrainResponse(BaseModel):
    rounds: int
    samples_seen: int
    env_steps: int
    final_utility: float
    curve_path: str
    checkpoints: list[str]
    manifest_path: str


class EvalRequest(BaseModel):
    checkpoint: Optional[str] = Field(
        None, description="trainer checkpoint; omit for the Max-SINR baseline")
    scenario: Optional[dict] = Field(
        None, description="required when no checkpoint supplies one")
    mobility: MobilitySpec = Field(default_factory=MobilitySpec)
    slots: int = Field(200, ge=1)
    seed: int = 0
    initial_user_count: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _has_scenario(self):
        if self.checkpoint is None and self.scenario is None:
            raise ValueError("either checkpoint or scenario must be given")
        return self


class EvalResponse(BaseModel):
    five_pct_rate: float
    utility: float
    handover_per_user_slot: float
    cdf: list[list[float]]


class TrajMetricsRequest(BaseModel):
    generated_csv: str = Field(description="trace CSV content, not a path")
    reference_csv: str
    match_radius: float = Field(20.0, gt=0)
    bbox: Optional[list[float]] = Field(
        None, min_length=4, max_length=4,
        description="xmin, ymin, xmax, ymax; defaults to the joint bounds")


class TrajMetricsResponse(BaseModel):
    metrics: dict[str, float]
