"""The operations behind every endpoint and CLI command.

Each handler takes a request model and returns a response model; anything
that touches the filesystem records what it wrote in a run manifest.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..evalkit import AgentPolicy, MaxSinrPolicy, evaluate_policy, trajectory_metrics
from ..manifest import RunManifest, file_sha256
from ..mobility import GmSource, MapGmSource, MapRwpSource, RwpSource, TraceSource
from ..netenv import NetworkEnv
from ..scenario import ScenarioConfig, default_config, desk_config
from ..streets import StreetGraph, synth_street_graph
from ..traces import dumps_traces, load_traces, loads_traces
from ..trainer import Trainer, TrainerConfig, load_policy_checkpoint, write_curve_csv
from . import schemas


def scenario_init(req: schemas.ScenarioInitRequest) -> schemas.ScenarioResponse:
    base = desk_config() if req.scale == "desk" else default_config()
    if req.overrides:
        merged = base.to_dict()
        merged.update(req.overrides)
        base = ScenarioConfig.from_dict(merged)
    return schemas.ScenarioResponse(
        config=base.to_dict(), config_hash=base.config_hash(), n_bs=base.num_bs)


def map_synth(req: schemas.MapSynthRequest) -> schemas.MapSynthResponse:
    graph = synth_street_graph(req.seed, (req.width, req.height),
                               req.block_size, req.drop_fraction)
    return schemas.MapSynthResponse(
        graph=graph.to_dict(), n_nodes=graph.n_nodes, n_edges=len(graph.edges))


def build_source(spec: schemas.MobilitySpec, area: tuple[float, float]):
    """One mobility source per spec; map-based models load their graph here."""
    if spec.model == "rwp":
        return RwpSource(area, (spec.v_min, spec.v_max))
    if spec.model == "gm":
        return GmSource(area, spec.mean_speed, spec.memory, spec.noise,
                        spec.step_time)
    if spec.model == "mrwp":
        return MapRwpSource(StreetGraph.load(spec.graph_path),
                            (spec.v_min, spec.v_max))
    if spec.model == "mgm":
        return MapGmSource(StreetGraph.load(spec.graph_path), spec.mean_speed,
                           spec.memory, spec.noise, spec.step_time)
    if spec.model == "playback":
        return TraceSource(load_traces(spec.traces_path))
    raise ConfigError(f"unknown mobility model {spec.model!r}")


def mobility_gen(req: schemas.MobilityGenRequest) -> schemas.MobilityGenResponse:
    source = build_source(req.spec, (req.width, req.height))
    rng = np.random.default_rng(np.random.SeedSequence(req.seed))
    trajectories = [source.sample(rng, req.duration_s) for _ in range(req.count)]
    return schemas.MobilityGenResponse(csv=dumps_traces(trajectories),
                                       count=len(trajectories))


def train(req: schemas.TrainRequest) -> schemas.TrainResponse:
    scenario = ScenarioConfig.from_dict(req.scenario)
    tcfg = TrainerConfig.from_dict(req.trainer) if req.trainer else TrainerConfig()
    source = build_source(req.mobility, scenario.area)
    out_dir = Path(req.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scenario_path = out_dir / "scenario.json"
    scenario_path.write_text(scenario.to_json())

    trainer = Trainer(tcfg, scenario, lambda: source)
    result = trainer.train(checkpoint_dir=out_dir / "checkpoints")
    curve_path = out_dir / "curve.csv"
    write_curve_csv(result["curve"], curve_path)

    manifest = RunManifest(command="train", seed=tcfg.seed,
                           config_hash=file_sha256(scenario_path))
    manifest.add_artifact(scenario_path)
    manifest.add_artifact(curve_path)
    for p in result["checkpoints"]:
        manifest.add_artifact(p)
    manifest.extra = {"rounds": result["rounds"],
                      "samples_seen": result["samples_seen"],
                      "env_steps": result["env_steps"]}
    manifest_path = manifest.save(out_dir / "manifest.json")

    final_utility = result["curve"][-1]["mean_utility"] if result["curve"] else 0.0
    return schemas.TrainResponse(
        rounds=result["rounds"], samples_seen=result["samples_seen"],
        env_steps=result["env_steps"], final_utility=final_utility,
        curve_path=str(curve_path),
        checkpoints=[str(p) for p in result["checkpoints"]],
        manifest_path=str(manifest_path))


def evaluate(req: schemas.EvalRequest) -> schemas.EvalResponse:
    if req.checkpoint is not None:
        net, scenario, _ = load_policy_checkpoint(req.checkpoint)
        if req.scenario is not None:
            override = ScenarioConfig.from_dict(req.scenario)
            if override.num_bs != scenario.num_bs:
                raise ConfigError(
                    "eval scenario station count does not match the checkpoint")
            scenario = override
        policy = AgentPolicy(net)
    else:
        scenario = ScenarioConfig.from_dict(req.scenario)
        policy = MaxSinrPolicy()
    source = build_source(req.mobility, scenario.area)
    env = NetworkEnv(scenario, source, seed=req.seed)
    lo, hi = scenario.user_count_range
    count = req.initial_user_count or int(round((lo + hi) / 2))
    report = evaluate_policy(policy, env, req.slots, initial_user_count=count)
    return schemas.EvalResponse(**report.to_dict())


def traj_metrics(req: schemas.TrajMetricsRequest) -> schemas.TrajMetricsResponse:
    generated = loads_traces(req.generated_csv)
    reference = loads_traces(req.reference_csv)
    if req.bbox is not None:
        bbox = tuple(req.bbox)
    else:
        pts = np.concatenate([t.xy for t in generated + reference])
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = np.maximum(hi - lo, 1.0)
        bbox = (float(lo[0]), float(lo[1]),
                float(lo[0] + span[0]), float(lo[1] + span[1]))
    metrics = trajectory_metrics(generated, reference, bbox,
                                 match_radius=req.match_radius)
    return schemas.TrajMetricsResponse(metrics=metrics)
