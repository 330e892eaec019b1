"""Pydantic request/response models for the planning service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class JobRequest(BaseModel):
    """Base request: config overrides deep-merged over the package defaults."""

    config: dict = Field(default_factory=dict)


class SweepRequest(JobRequest):
    out: str


class SweepResponse(BaseModel):
    frames: int
    res: int
    joints: int
    keypoints: int
    seconds: float
    out: str


class PairsRequest(JobRequest):
    dataset: str
    out: str


class PairsResponse(BaseModel):
    pairs: int
    frames: int
    out: str


class TrainRequest(JobRequest):
    pairs: str
    out: str


class TrainResponse(BaseModel):
    epochs: int
    initial_loss: float
    final_loss: float
    validation: dict | None
    train_pairs: int
    val_pairs: int
    seconds: float
    out: str


class RoadmapRequest(JobRequest):
    dataset: str
    metric: str
    out: str
    model: str | None = None


class RoadmapResponse(BaseModel):
    metric_tag: str
    nodes: int
    edges: int
    components: int
    build_seconds: float
    out: str


class EndpointSpec(BaseModel):
    """Either a roadmap node index or an explicit image state."""

    node: int | None = None
    state: list[list[float]] | None = None

    def to_spec(self) -> dict:
        if self.node is not None:
            return {"node": self.node}
        if self.state is not None:
            return {"state": self.state}
        raise ValueError("endpoint needs node or state")


class PlanRequest(JobRequest):
    roadmap: str
    start: EndpointSpec
    goal: EndpointSpec
    scene: str | None = None
    model: str | None = None
    out: str | None = None
    persist: bool = False


class PlanResponse(BaseModel):
    status: str
    iterations: int
    edges_checked: int
    invalidated: int
    reason: str | None = None
    flags: list[str] = Field(default_factory=list)
    seconds: float
    metrics: dict | None = None
    out: str | None = None


class ServoRequest(JobRequest):
    path: str
    scene: str | None = None
    out_log: str | None = None
    noise_std: float = 0.0


class TrackResponse(BaseModel):
    verdict: str
    steps: int
    sim_seconds: float
    stalled_waypoint: int | None = None
    reason: str | None = None
    transients: dict
    out: str | None = None


class ApfRequest(JobRequest):
    roadmap: str
    start: EndpointSpec
    goal: EndpointSpec
    scene: str
    out_log: str | None = None


class BenchRequest(JobRequest):
    out_dir: str


class RenderRequest(BaseModel):
    artifact: str
    out: str


class RenderResponse(BaseModel):
    out: str
    bytes: int


class HealthResponse(BaseModel):
    status: str
    version: str
