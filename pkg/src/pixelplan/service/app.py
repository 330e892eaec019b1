"""FastAPI service wrapping the planning pipeline.

Artifacts are exchanged as file paths on the service host; responses carry
compact summaries.  The CLI is a thin client of this API (in-process by
default, remote with --server).
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, bench, pipeline
from ..config import load_config
from ..errors import ParseError, PixelPlanError
from ..scenes import builtin_scene_names
from . import schemas


def create_app() -> FastAPI:
    app = FastAPI(title="pixelplan", version=__version__)

    @app.exception_handler(PixelPlanError)
    async def _domain_error(request: Request, exc: PixelPlanError):
        status = 400 if isinstance(exc, ParseError) else 422
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.exception_handler(FileNotFoundError)
    async def _missing_file(request: Request, exc: FileNotFoundError):
        return JSONResponse(status_code=404,
                            content={"detail": f"missing file: {exc.filename or exc}"})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/scenes")
    def scenes():
        return {"scenes": builtin_scene_names()}

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep(req: schemas.SweepRequest):
        return pipeline.sweep_job(load_config(overrides=req.config), req.out)

    @app.post("/pairs", response_model=schemas.PairsResponse)
    def pairs(req: schemas.PairsRequest):
        _require_file(req.dataset)
        return pipeline.pairs_job(load_config(overrides=req.config), req.dataset, req.out)

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest):
        _require_file(req.pairs)
        return pipeline.train_job(load_config(overrides=req.config), req.pairs, req.out)

    @app.post("/roadmap", response_model=schemas.RoadmapResponse)
    def roadmap(req: schemas.RoadmapRequest):
        _require_file(req.dataset)
        if req.model is not None:
            _require_file(req.model)
        return pipeline.roadmap_job(load_config(overrides=req.config), req.dataset,
                                    req.metric, req.out, req.model)

    @app.post("/plan", response_model=schemas.PlanResponse)
    def plan(req: schemas.PlanRequest):
        _require_file(req.roadmap)
        if req.model is not None:
            _require_file(req.model)
        return pipeline.plan_job(load_config(overrides=req.config), req.roadmap,
                                 req.start.to_spec(), req.goal.to_spec(),
                                 scene_spec=req.scene, model_path=req.model,
                                 out_path=req.out, persist=req.persist)

    @app.post("/servo", response_model=schemas.TrackResponse)
    def servo(req: schemas.ServoRequest):
        _require_file(req.path)
        return pipeline.servo_job(load_config(overrides=req.config), req.path,
                                  scene_spec=req.scene, out_log=req.out_log,
                                  noise_std=req.noise_std)

    @app.post("/apf", response_model=schemas.TrackResponse)
    def apf(req: schemas.ApfRequest):
        _require_file(req.roadmap)
        return pipeline.apf_job(load_config(overrides=req.config), req.roadmap,
                                req.start.to_spec(), req.goal.to_spec(),
                                req.scene, out_log=req.out_log)

    @app.post("/bench/roadmaps")
    def bench_roadmaps(req: schemas.BenchRequest):
        return bench.bench_roadmaps(load_config(overrides=req.config), req.out_dir)

    @app.post("/bench/control")
    def bench_control(req: schemas.BenchRequest):
        return bench.bench_control(load_config(overrides=req.config), req.out_dir)

    @app.post("/bench/full")
    def bench_full(req: schemas.BenchRequest):
        return bench.run_full_bench(load_config(overrides=req.config), req.out_dir)

    @app.post("/render", response_model=schemas.RenderResponse)
    def render(req: schemas.RenderRequest):
        _require_file(req.artifact)
        return pipeline.render_job(req.artifact, req.out)

    return app


def _require_file(path: str) -> None:
    if not Path(path).is_file():
        raise FileNotFoundError(path)


app = create_app()
