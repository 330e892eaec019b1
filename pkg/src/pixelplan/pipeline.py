"""Single-step pipeline jobs shared by the HTTP service and the benchmark
harness.  Every job reads/writes files and returns a JSON-friendly summary."""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from . import io, mlp, pairs as pairs_mod, planner, render, roadmap as roadmap_mod, servo
from .config import build_arm, build_camera, build_servo, build_sweep, build_train
from .errors import ValidationError
from .metrics import LEARNED, make_metric
from .scenes import resolve_scene
from .sim import SimPlant, run_sweep
from .types import ImageState, JointConfig


def sweep_job(cfg: dict, out_path) -> dict:
    arm, cam, sweep = build_arm(cfg), build_camera(cfg), build_sweep(cfg)
    t0 = time.perf_counter()
    frames = run_sweep(arm, cam, sweep)
    io.save_dataset(frames, out_path)
    return {"frames": len(frames), "res": sweep.res, "joints": arm.m,
            "keypoints": len(arm.keypoint_anchors),
            "seconds": time.perf_counter() - t0, "out": str(out_path)}


def make_pairs(frames, cfg: dict) -> list[pairs_mod.PairSample]:
    """Training mix: consecutive pairs, wide random spans, and a slice of
    identity pairs anchoring the metric at zero displacement."""
    p = cfg["pairs"]
    cons = pairs_mod.consecutive_pairs(frames)
    max_span = p.get("max_span") or len(frames) - 1
    max_span = min(max_span, len(frames) - 1)
    aug = pairs_mod.augment_spans(frames, max_span=max(2, max_span),
                                  samples=int(p["augment_multiple"]) * len(cons),
                                  rng_seed=int(cfg["seed"]),
                                  flip_direction=bool(p.get("flip_direction", True)))
    ident = pairs_mod.identity_pairs(
        frames, int(float(p.get("identity_fraction", 0.5)) * len(cons)),
        rng_seed=int(cfg["seed"]) + 1)
    return cons + aug + ident


def pairs_job(cfg: dict, dataset_path, out_path) -> dict:
    frames = io.load_dataset(dataset_path)
    samples = make_pairs(frames, cfg)
    io.save_pairs(samples, out_path)
    return {"pairs": len(samples), "frames": len(frames), "out": str(out_path)}


def train_job(cfg: dict, pairs_path, out_model) -> dict:
    samples = io.load_pairs(pairs_path)
    tcfg = build_train(cfg)
    train_split, val_split = pairs_mod.split(
        samples, float(cfg["train"]["train_fraction"]), rng_seed=int(cfg["seed"]))
    t0 = time.perf_counter()
    model, history, val = mlp.train_displacement_model(
        train_split, val_split, tcfg,
        hidden=tuple(cfg["train"]["hidden"]), seed=int(cfg["seed"]))
    io.save_model(model, out_model)
    return {"epochs": len(history), "final_loss": history[-1],
            "initial_loss": history[0],
            "validation": val.to_dict() if val else None,
            "train_pairs": len(train_split), "val_pairs": len(val_split),
            "seconds": time.perf_counter() - t0, "out": str(out_model)}


def roadmap_job(cfg: dict, dataset_path, metric_tag: str, out_path,
                model_path=None) -> dict:
    frames = io.load_dataset(dataset_path)
    r = cfg["roadmap"]
    count = min(int(r["node_count"]), len(frames))
    strategy = r["strategy"] if count < len(frames) else "all"
    nodes = roadmap_mod.sample_nodes(frames, count, strategy, seed=int(cfg["seed"]))
    model = io.load_model(model_path) if metric_tag == LEARNED else None
    metric = make_metric(metric_tag, model)
    rm = roadmap_mod.build(nodes, metric, int(r["k"]))
    io.save_roadmap(rm, out_path)
    return {"metric_tag": metric_tag, "nodes": len(rm.nodes), "edges": len(rm.edges),
            "components": roadmap_mod.connected_components(rm),
            "build_seconds": rm.build_seconds, "out": str(out_path)}


def _resolve_endpoint(rm: roadmap_mod.Roadmap, spec) -> tuple[ImageState, JointConfig | None]:
    """Endpoint spec: {"node": index} or {"state": [[u, v], ...]}."""
    if isinstance(spec, dict) and "node" in spec:
        idx = int(spec["node"])
        if not (0 <= idx < len(rm.nodes)):
            raise ValidationError(f"node index {idx} outside roadmap (n={len(rm.nodes)})")
        node = rm.nodes[idx]
        return node.image_state, node.joint_config
    if isinstance(spec, dict) and "state" in spec:
        return ImageState.from_list(spec["state"]), None
    raise ValidationError("endpoint must be {'node': i} or {'state': [[u,v],...]}")


def plan_job(cfg: dict, roadmap_path, start_spec, goal_spec,
             scene_spec: str | None = None, model_path=None,
             out_path=None, persist: bool = False) -> dict:
    rm = io.load_roadmap(roadmap_path)
    model = io.load_model(model_path) if rm.metric_tag == LEARNED else None
    metric = make_metric(rm.metric_tag, model)
    cam = build_camera(cfg)
    scene = resolve_scene(scene_spec, cam.image_size)
    start, start_q = _resolve_endpoint(rm, start_spec)
    goal, goal_q = _resolve_endpoint(rm, goal_spec)
    t0 = time.perf_counter()
    result = planner.query(rm, start, goal, scene, metric, k=int(cfg["roadmap"]["k"]),
                           start_q=start_q, goal_q=goal_q, persist=persist)
    seconds = time.perf_counter() - t0
    if persist:
        io.save_roadmap(rm, roadmap_path)
    out = {"status": result.status, "iterations": result.iterations,
           "edges_checked": result.edges_checked, "invalidated": result.invalidated,
           "reason": result.reason, "flags": result.flags, "seconds": seconds}
    if result.success and out_path is not None:
        io.save_path(result.path, out_path)
        out["out"] = str(out_path)
    if result.success:
        out["metrics"] = planner.path_metrics(result.path)
    return out


def servo_job(cfg: dict, path_path, scene_spec: str | None = None,
              out_log=None, noise_std: float = 0.0) -> dict:
    path = io.load_path(path_path)
    if path.joint_configs is None:
        raise ValidationError(
            "path carries no joint annotations; the simulated plant cannot be "
            "initialized at its start configuration")
    arm, cam = build_arm(cfg), build_camera(cfg)
    scene = resolve_scene(scene_spec, cam.image_size)
    plant = SimPlant(arm, cam, path.joint_configs[0], noise_std=noise_std,
                     seed=int(cfg["seed"]))
    scfg = build_servo(cfg)
    result = servo.track_path(path, plant, scfg, scene=scene, m_joints=arm.m)
    summary = result.summary_dict()
    summary["transients"] = servo.rise_settle_overshoot(result.log)
    if out_log is not None:
        io.save_track_log(result.log, out_log)
        summary["out"] = str(out_log)
    return summary


def apf_job(cfg: dict, roadmap_path, start_spec, goal_spec, scene_spec: str,
            out_log=None) -> dict:
    rm = io.load_roadmap(roadmap_path)
    arm, cam = build_arm(cfg), build_camera(cfg)
    scene = resolve_scene(scene_spec, cam.image_size)
    _, start_q = _resolve_endpoint(rm, start_spec)
    goal, _ = _resolve_endpoint(rm, goal_spec)
    if start_q is None:
        raise ValidationError("APF start must be a roadmap node with joint annotations")
    plant = SimPlant(arm, cam, start_q, seed=int(cfg["seed"]))
    scfg = build_servo(cfg)
    result = servo.run_apf(plant, goal, scene, scfg, m_joints=arm.m)
    summary = result.summary_dict()
    summary["transients"] = servo.rise_settle_overshoot(result.log)
    if out_log is not None:
        io.save_track_log(result.log, out_log)
        summary["out"] = str(out_log)
    return summary


def render_job(artifact_path, out_svg) -> dict:
    svg = render.render_artifact(artifact_path)
    Path(out_svg).parent.mkdir(parents=True, exist_ok=True)
    Path(out_svg).write_text(svg, encoding="utf-8")
    return {"out": str(out_svg), "bytes": len(svg)}
