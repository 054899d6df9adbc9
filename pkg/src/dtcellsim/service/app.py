"""FastAPI wiring. Run with `dtcellsim serve` or any ASGI server."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import CheckpointError, ConfigError, TraceFormatError
from . import handlers, schemas


def create_app() -> FastAPI:
    app = FastAPI(
        title="dtcellsim",
        description="Digital-twin cellular network simulator and trainer",
    )

    @app.exception_handler(ConfigError)
    @app.exception_handler(TraceFormatError)
    @app.exception_handler(CheckpointError)
    @app.exception_handler(ValueError)
    async def _bad_request(request: Request, exc: Exception):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(FileNotFoundError)
    async def _not_found(request: Request, exc: Exception):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.get("/health")
    async def health():
        return {"status": "ok"}

    @app.post("/scenario/init", response_model=schemas.ScenarioResponse)
    def scenario_init(req: schemas.ScenarioInitRequest):
        return handlers.scenario_init(req)

    @app.post("/map/synth", response_model=schemas.MapSynthResponse)
    def map_synth(req: schemas.MapSynthRequest):
        return handlers.map_synth(req)

    @app.post("/mobility/gen", response_model=schemas.MobilityGenResponse)
    def mobility_gen(req: schemas.MobilityGenRequest):
        return handlers.mobility_gen(req)

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest):
        return handlers.train(req)

    @app.post("/eval", response_model=schemas.EvalResponse)
    def evaluate(req: schemas.EvalRequest):
        return handlers.evaluate(req)

    @app.post("/metrics/trajectories", response_model=schemas.TrajMetricsResponse)
    def traj_metrics(req: schemas.TrajMetricsRequest):
        return handlers.traj_metrics(req)

    return app


app = create_app()
