"""Command-line surface. Every command is a thin wrapper over service handlers.

Worker parallelism is capped by the DT_CELLSIM_THREADS environment variable;
seeds are explicit flags and recorded in run manifests next to the outputs.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .errors import CheckpointError, ConfigError, TraceFormatError
from .manifest import RunManifest, file_sha256
from .service import handlers, schemas


def _fail_on(exc: Exception):
    raise click.ClickException(str(exc))


@click.group()
def main():
    """Digital-twin cellular network simulator and DRL training harness."""


# -- scenario -----------------------------------------------------------------


@main.group()
def scenario():
    """Scenario configuration files."""


@scenario.command("init")
@click.option("--scale", type=click.Choice(["full", "desk"]), default="full",
              show_default=True)
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
              help="Override a top-level config field (value parsed as JSON).")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the config here instead of stdout.")
def scenario_init(scale, overrides, out):
    """Write a validated default scenario config."""
    parsed = {}
    for item in overrides:
        if "=" not in item:
            raise click.UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            parsed[key] = json.loads(raw)
        except json.JSONDecodeError:
            parsed[key] = raw
    try:
        resp = handlers.scenario_init(
            schemas.ScenarioInitRequest(scale=scale, overrides=parsed))
    except (ConfigError, ValueError) as exc:
        _fail_on(exc)
    text = json.dumps(resp.config, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
        click.echo(f"wrote {out} ({resp.n_bs} stations, hash {resp.config_hash[:12]})")
    else:
        click.echo(text, nl=False)


# -- maps ----------------------------------------------------------------------


@main.group("map")
def map_group():
    """Synthetic street maps."""


@map_group.command("synth")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--width", type=float, default=1000.0, show_default=True)
@click.option("--height", type=float, default=1000.0, show_default=True)
@click.option("--block-size", type=float, default=150.0, show_default=True)
@click.option("--drop-fraction", type=float, default=0.15, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="StreetGraph JSON output path.")
@click.option("--raster-out", type=click.Path(), default=None,
              help="Also rasterize: PNG prefix, one file per road class.")
def map_synth(seed, width, height, block_size, drop_fraction, out, raster_out):
    """Generate a street graph (and optionally its raster channels)."""
    try:
        resp = handlers.map_synth(schemas.MapSynthRequest(
            seed=seed, width=width, height=height, block_size=block_size,
            drop_fraction=drop_fraction))
    except (ConfigError, ValueError) as exc:
        _fail_on(exc)
    Path(out).write_text(json.dumps(resp.graph) + "\n")
    click.echo(f"wrote {out} ({resp.n_nodes} nodes, {resp.n_edges} edges)")
    if raster_out:
        from .streets import ROAD_CLASSES, StreetGraph, rasterize_graph

        graph = StreetGraph.from_dict(resp.graph)
        raster = rasterize_graph(graph, (0.0, 0.0, width, height),
                                 len(ROAD_CLASSES))
        written = raster.save(raster_out)
        for path in written:
            click.echo(f"wrote {path}")


# -- mobility -------------------------------------------------------------------


def mobility_options(fn):
    opts = [
        click.option("--model",
                     type=click.Choice(["rwp", "gm", "mrwp", "mgm", "playback"]),
                     default="rwp", show_default=True),
        click.option("--v-min", type=float, default=0.5, show_default=True),
        click.option("--v-max", type=float, default=2.0, show_default=True),
        click.option("--mean-speed", type=float, default=1.5, show_default=True),
        click.option("--memory", type=float, default=0.85, show_default=True),
        click.option("--noise", type=float, default=0.3, show_default=True),
        click.option("--graph", "graph_path",
                     type=click.Path(exists=True, dir_okay=False), default=None,
                     help="StreetGraph JSON (required for mrwp/mgm)."),
        click.option("--traces", "traces_path",
                     type=click.Path(exists=True, dir_okay=False), default=None,
                     help="Trace CSV (required for playback)."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _mobility_spec(model, v_min, v_max, mean_speed, memory, noise, graph_path,
                   traces_path) -> schemas.MobilitySpec:
    try:
        return schemas.MobilitySpec(
            model=model, v_min=v_min, v_max=v_max, mean_speed=mean_speed,
            memory=memory, noise=noise, graph_path=graph_path,
            traces_path=traces_path)
    except ValueError as exc:
        raise click.UsageError(str(exc))


@main.group()
def mobility():
    """User trajectory generation."""


@mobility.command("gen")
@mobility_options
@click.option("--count", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--duration", "duration_s", type=float, default=600.0,
              show_default=True, help="Seconds per trajectory.")
@click.option("--config", "config_path",
              type=click.Path(exists=True, dir_okay=False), default=None,
              help="Scenario config supplying the area bounds.")
@click.option("--width", type=float, default=2000.0, show_default=True)
@click.option("--height", type=float, default=2000.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def mobility_gen(model, v_min, v_max, mean_speed, memory, noise, graph_path,
                 traces_path, count, seed, duration_s, config_path, width,
                 height, out):
    """Write trajectories in the trace CSV format."""
    spec = _mobility_spec(model, v_min, v_max, mean_speed, memory, noise,
                          graph_path, traces_path)
    if config_path:
        from .scenario import ScenarioConfig

        cfg = ScenarioConfig.from_json(Path(config_path).read_text())
        width, height = cfg.area
    try:
        resp = handlers.mobility_gen(schemas.MobilityGenRequest(
            spec=spec, count=count, seed=seed, duration_s=duration_s,
            width=width, height=height))
    except (ConfigError, TraceFormatError, ValueError, FileNotFoundError) as exc:
        _fail_on(exc)
    Path(out).write_text(resp.csv)
    manifest = RunManifest(command="mobility gen", seed=seed,
                           config_hash=file_sha256(config_path) if config_path else None)
    manifest.add_artifact(out)
    manifest.extra = {"model": model, "count": resp.count}
    manifest.save(Path(out).with_suffix(".manifest.json"))
    click.echo(f"wrote {out} ({resp.count} trajectories)")


# -- training / evaluation -------------------------------------------------------


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False),
              required=True)
@click.option("--parallel-envs", type=int, default=1, show_default=True)
@click.option("--budget", type=int, default=200_000, show_default=True,
              help="Total transition samples to consume.")
@click.option("--rollout", type=int, default=64, show_default=True,
              help="Slots per collection round.")
@click.option("--checkpoint-interval", type=int, default=100, show_default=True,
              help="Rounds between checkpoints.")
@mobility_options
def train(config_path, seed, out_dir, parallel_envs, budget, rollout,
          checkpoint_interval, model, v_min, v_max, mean_speed, memory, noise,
          graph_path, traces_path):
    """Train the association policy in parallel twin environments."""
    spec = _mobility_spec(model, v_min, v_max, mean_speed, memory, noise,
                          graph_path, traces_path)
    scenario_doc = json.loads(Path(config_path).read_text())
    trainer_doc = {
        "parallel_envs": parallel_envs, "sample_budget": budget,
        "rollout_length": rollout, "seed": seed,
        "checkpoint_interval": checkpoint_interval,
    }
    try:
        resp = handlers.train(schemas.TrainRequest(
            scenario=scenario_doc, trainer=trainer_doc, mobility=spec,
            out_dir=out_dir))
    except (ConfigError, CheckpointError, ValueError, FileNotFoundError) as exc:
        _fail_on(exc)
    click.echo(f"{resp.rounds} rounds, {resp.samples_seen} samples, "
               f"{resp.env_steps} env steps/env")
    click.echo(f"final mean utility {resp.final_utility:.4f}")
    click.echo(f"curve: {resp.curve_path}")
    for ck in resp.checkpoints:
        click.echo(f"checkpoint: {ck}")


@main.command("eval")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Omit to evaluate the Max-SINR baseline.")
@click.option("--config", "config_path",
              type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--slots", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--users", "initial_user_count", type=int, default=None,
              help="Initial user count (defaults to the range midpoint).")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the report JSON here.")
@mobility_options
def eval_cmd(checkpoint, config_path, slots, seed, initial_user_count, out,
             model, v_min, v_max, mean_speed, memory, noise, graph_path,
             traces_path):
    """Evaluate a checkpoint (or the Max-SINR baseline) and report rates."""
    spec = _mobility_spec(model, v_min, v_max, mean_speed, memory, noise,
                          graph_path, traces_path)
    scenario_doc = (json.loads(Path(config_path).read_text())
                    if config_path else None)
    try:
        resp = handlers.evaluate(schemas.EvalRequest(
            checkpoint=checkpoint, scenario=scenario_doc, mobility=spec,
            slots=slots, seed=seed, initial_user_count=initial_user_count))
    except (ConfigError, CheckpointError, ValueError, FileNotFoundError) as exc:
        _fail_on(exc)
    click.echo(f"5% rate: {resp.five_pct_rate:.1f} bit/s")
    click.echo(f"utility: {resp.utility:.4f}")
    click.echo(f"handovers per user-slot: {resp.handover_per_user_slot:.4f}")
    if out:
        Path(out).write_text(json.dumps(resp.model_dump()) + "\n")
        manifest = RunManifest(
            command="eval", seed=seed,
            config_hash=file_sha256(config_path) if config_path else None)
        manifest.add_artifact(out)
        if checkpoint:
            manifest.extra = {"checkpoint": checkpoint}
        manifest.save(Path(out).with_suffix(".manifest.json"))
        click.echo(f"wrote {out}")


# -- metrics / reports ------------------------------------------------------------


@main.command("traj-metrics")
@click.argument("generated", type=click.Path(exists=True, dir_okay=False))
@click.argument("reference", type=click.Path(exists=True, dir_okay=False))
@click.option("--tau", type=float, default=20.0, show_default=True,
              help="EDR match radius in metres.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write metric,value CSV here instead of stdout.")
def traj_metrics(generated, reference, tau, out):
    """Compare generated traces against references (EDR/DTW/heatmap/SWD)."""
    try:
        resp = handlers.traj_metrics(schemas.TrajMetricsRequest(
            generated_csv=Path(generated).read_text(),
            reference_csv=Path(reference).read_text(),
            match_radius=tau))
    except (TraceFormatError, ValueError) as exc:
        _fail_on(exc)
    lines = ["metric,value"]
    for name, value in resp.metrics.items():
        lines.append(f"{name},{value:.6f}")
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


@main.group()
def report():
    """Post-process evaluation reports."""


@report.command("cdf")
@click.argument("reports", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def report_cdf(reports, out):
    """Flatten eval-report CDFs into one label,rate,p CSV."""
    lines = ["label,rate,p"]
    for path in reports:
        try:
            doc = json.loads(Path(path).read_text())
            cdf = doc["cdf"]
        except (json.JSONDecodeError, KeyError) as exc:
            _fail_on(ValueError(f"{path} is not an eval report: {exc}"))
        label = Path(path).stem
        for rate, p in cdf:
            lines.append(f"{label},{rate:.6f},{p:.6f}")
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


# -- service ----------------------------------------------------------------------


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8421, show_default=True)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run("dtcellsim.service.app:app", host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
