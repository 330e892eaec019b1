"""Experiment harness: builds the three roadmaps, replays the comparative
planning and control suites at desk scale, and writes CSV tables, SVG plots
and JSON summaries.

Wall-clock timings go to timings.csv only; every other output is a pure
function of the config and seed, so repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import time
from pathlib import Path

import numpy as np

from . import io, mlp, pairs as pairs_mod, planner, render, roadmap as roadmap_mod, servo
from .config import build_arm, build_camera, build_servo, build_train
from .errors import ValidationError
from .metrics import IMAGE_SPACE, JOINT_SPACE, LEARNED, make_metric
from .pipeline import make_pairs
from .scenes import empty_scene, load_builtin
from .sim import SimPlant, run_sweep
from .collision import state_in_collision
from .config import build_sweep

METRIC_ORDER = (JOINT_SPACE, LEARNED, IMAGE_SPACE)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header: list[str], rows: list[list]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


class DeskArtifacts:
    """Everything the suites need, built once per config+seed."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.arm = build_arm(cfg)
        self.cam = build_camera(cfg)
        self.timings: dict[str, float] = {}
        t0 = time.perf_counter()
        self.frames = run_sweep(self.arm, self.cam, build_sweep(cfg))
        self.timings["sweep_seconds"] = time.perf_counter() - t0

        samples = make_pairs(self.frames, cfg)
        train_split, val_split = pairs_mod.split(
            samples, float(cfg["train"]["train_fraction"]), rng_seed=int(cfg["seed"]))
        t0 = time.perf_counter()
        self.model, self.history, self.val_metrics = mlp.train_displacement_model(
            train_split, val_split, build_train(cfg),
            hidden=tuple(cfg["train"]["hidden"]), seed=int(cfg["seed"]))
        self.timings["train_seconds"] = time.perf_counter() - t0

        r = cfg["roadmap"]
        count = min(int(r["node_count"]), len(self.frames))
        strategy = r["strategy"] if count < len(self.frames) else "all"
        self.nodes = roadmap_mod.sample_nodes(self.frames, count, strategy,
                                              seed=int(cfg["seed"]))
        self.k = int(r["k"])
        self.metrics = {tag: make_metric(tag, self.model if tag == LEARNED else None)
                        for tag in METRIC_ORDER}
        self.roadmaps = {}
        for tag in METRIC_ORDER:
            rm = roadmap_mod.build(self.nodes, self.metrics[tag], self.k)
            self.roadmaps[tag] = rm
            self.timings[f"build_seconds_{tag}"] = rm.build_seconds

    def save(self, out_dir: Path) -> None:
        io.save_dataset(self.frames, out_dir / "dataset.jsonl")
        io.save_model(self.model, out_dir / "model.json")
        for tag, rm in self.roadmaps.items():
            io.save_roadmap(rm, out_dir / f"roadmap_{tag}.json")


def _query_pairs(artifacts: DeskArtifacts, count: int, seed: int,
                 scene=None, min_pixels: float = 100.0) -> list[tuple[int, int]]:
    """Deterministic start/goal node pairs; states must clear the scene and be
    far enough apart in the image to be interesting."""
    rng = np.random.default_rng(seed)
    nodes = artifacts.nodes
    out: list[tuple[int, int]] = []
    guard = 0
    while len(out) < count:
        guard += 1
        if guard > 100000:
            raise ValidationError("could not sample enough valid query pairs")
        a, b = (int(x) for x in rng.integers(0, len(nodes), 2))
        if a == b:
            continue
        da = nodes[a].image_state.flatten() - nodes[b].image_state.flatten()
        if float(np.linalg.norm(da)) < min_pixels:
            continue
        if scene is not None and (state_in_collision(nodes[a].image_state, scene)
                                  or state_in_collision(nodes[b].image_state, scene)):
            continue
        out.append((a, b))
    return out


def bench_roadmaps(cfg: dict, out_dir, artifacts: DeskArtifacts | None = None) -> dict:
    """Roadmap comparison: edge-displacement distributions (histogram CSV and
    SVG), W1 alignment with the joint-space roadmap, and aggregate path
    statistics over random obstacle-free queries."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if artifacts is None:
        artifacts = DeskArtifacts(cfg)
    artifacts.save(out_dir)

    disp = {tag: roadmap_mod.edge_displacements(artifacts.roadmaps[tag])
            for tag in METRIC_ORDER}
    summaries = {tag: roadmap_mod.displacement_summary(disp[tag], disp[JOINT_SPACE])
                 for tag in METRIC_ORDER}
    for tag in METRIC_ORDER:
        write_csv(out_dir / f"hist_{tag}.csv", ["joint_displacement"],
                  [[float(v)] for v in disp[tag]])
    (out_dir / "fig_histogram.svg").write_text(
        render.render_histogram({tag: disp[tag].tolist() for tag in METRIC_ORDER}),
        encoding="utf-8")

    qpairs = _query_pairs(artifacts, int(cfg["bench"]["queries"]),
                          int(cfg["seed"]) + 7)
    rows = []
    agg: dict[str, dict] = {}
    for tag in METRIC_ORDER:
        rm = artifacts.roadmaps[tag]
        metric = artifacts.metrics[tag]
        joint_totals, pixel_totals, waypoints = [], [], []
        joint_hops, pixel_hops = [], []
        t0 = time.perf_counter()
        failures = 0
        for a, b in qpairs:
            res = planner.query(rm, artifacts.nodes[a].image_state,
                                artifacts.nodes[b].image_state, None, metric,
                                k=artifacts.k,
                                start_q=artifacts.nodes[a].joint_config,
                                goal_q=artifacts.nodes[b].joint_config)
            if not res.success:
                failures += 1
                continue
            pm = planner.path_metrics(res.path)
            joint_totals.append(pm["joint_total"])
            pixel_totals.append(pm["pixel_total"])
            waypoints.append(pm["waypoints"])
            joint_hops.extend(pm["joint_per_hop"])
            pixel_hops.extend(pm["pixel_per_hop"])
        artifacts.timings[f"query_seconds_{tag}"] = time.perf_counter() - t0
        agg[tag] = {
            "queries": len(qpairs),
            "failures": failures,
            "mean_joint_total": float(np.mean(joint_totals)),
            "mean_pixel_total": float(np.mean(pixel_totals)),
            "mean_waypoints": float(np.mean(waypoints)),
            "mean_joint_per_hop": float(np.mean(joint_hops)),
            "mean_pixel_per_hop": float(np.mean(pixel_hops)),
            "rad_per_1000px": float(np.sum(joint_totals) / np.sum(pixel_totals) * 1000.0),
            "edge_displacement": summaries[tag],
            "edges": len(artifacts.roadmaps[tag].edges),
            "components": roadmap_mod.connected_components(artifacts.roadmaps[tag]),
        }
        rows.append([tag, len(artifacts.nodes), agg[tag]["edges"], agg[tag]["components"],
                     summaries[tag]["mean"], summaries[tag]["p50"], summaries[tag]["p95"],
                     summaries[tag]["wasserstein_to_reference"],
                     len(qpairs), failures,
                     agg[tag]["mean_waypoints"], agg[tag]["mean_joint_total"],
                     agg[tag]["mean_pixel_total"], agg[tag]["mean_joint_per_hop"],
                     agg[tag]["mean_pixel_per_hop"], agg[tag]["rad_per_1000px"]])

    write_csv(out_dir / "report_roadmaps.csv",
              ["metric", "nodes", "edges", "components", "edge_dq_mean",
               "edge_dq_p50", "edge_dq_p95", "w1_to_joint", "queries", "failures",
               "mean_waypoints", "mean_joint_total", "mean_pixel_total",
               "mean_joint_per_hop", "mean_pixel_per_hop", "rad_per_1000px"],
              rows)

    checks = {
        "ordering_joint_le_learned":
            agg[JOINT_SPACE]["mean_joint_total"] <= agg[LEARNED]["mean_joint_total"],
        "ordering_learned_le_image":
            agg[LEARNED]["mean_joint_total"] <= agg[IMAGE_SPACE]["mean_joint_total"],
        "learned_le_075_image":
            agg[LEARNED]["mean_joint_total"] <= 0.75 * agg[IMAGE_SPACE]["mean_joint_total"],
        "w1_learned_lt_image":
            summaries[LEARNED]["wasserstein_to_reference"]
            < summaries[IMAGE_SPACE]["wasserstein_to_reference"],
        "image_px_per_hop_lt_learned":
            agg[IMAGE_SPACE]["mean_pixel_per_hop"] < agg[LEARNED]["mean_pixel_per_hop"],
        "learned_build_slower_than_image":
            artifacts.timings[f"build_seconds_{LEARNED}"]
            > artifacts.timings[f"build_seconds_{IMAGE_SPACE}"],
        "all_queries_succeeded": all(agg[t]["failures"] == 0 for t in METRIC_ORDER),
    }
    summary = {"metrics": agg, "checks": checks,
               "validation": artifacts.val_metrics.to_dict() if artifacts.val_metrics else None}
    io.write_json(out_dir / "summary_roadmaps.json", summary)
    write_csv(out_dir / "timings.csv", ["stage", "seconds"],
              [[k, v] for k, v in sorted(artifacts.timings.items())])
    return summary


def _pick_trap_endpoints(artifacts: DeskArtifacts, scene) -> tuple[int, int]:
    """Start threaded through the gap between the twin obstacles (tip far
    right, near the gap line), goal folded up-left; both collision-free."""
    tips = np.array([n.image_state.to_list()[-1] for n in artifacts.nodes])
    free = [i for i in range(len(artifacts.nodes))
            if not state_in_collision(artifacts.nodes[i].image_state, scene)]
    start_cands = [i for i in free if abs(tips[i][1] - 240.0) < 22.0]
    if not start_cands:
        raise ValidationError("no trap start candidate; adjust the fixture")
    start = max(start_cands, key=lambda i: (tips[i][0], -i))
    goal_cands = [i for i in free if tips[i][0] < 390.0 and tips[i][1] < 210.0]
    if not goal_cands:
        raise ValidationError("no trap goal candidate; adjust the fixture")
    goal = min(goal_cands, key=lambda i: (tips[i][0] + tips[i][1], i))
    return start, goal


def _control_scenarios(cfg: dict, artifacts: DeskArtifacts) -> list[dict]:
    bench = cfg["bench"]
    seed = int(cfg["seed"])
    scenarios = []
    free = _query_pairs(artifacts, int(bench["free_experiments"]), seed + 11)
    for i, (a, b) in enumerate(free):
        scenarios.append({"suite": "free", "scenario": f"free_{i:02d}",
                          "scene": None, "start": a, "goal": b})
    single_names = ["rectangle", "triangle", "circle"]
    for i in range(int(bench["single_obstacle_experiments"])):
        name = single_names[i % len(single_names)]
        scene = load_builtin(name)
        a, b = _query_pairs(artifacts, 1, seed + 101 + i, scene=scene)[0]
        scenarios.append({"suite": "single", "scenario": f"single_{i:02d}",
                          "scene": name, "start": a, "goal": b})
    multi_names = [f"multi_{i + 1}" for i in range(int(bench["multi_obstacle_experiments"]))]
    for i, name in enumerate(multi_names):
        scene = load_builtin(name)
        if name == "multi_3":
            a, b = _pick_trap_endpoints(artifacts, scene)
        else:
            a, b = _query_pairs(artifacts, 1, seed + 301 + i, scene=scene)[0]
        scenarios.append({"suite": "multi", "scenario": name,
                          "scene": name, "start": a, "goal": b})
    if int(bench["shelf_experiments"]) > 0:
        scene = load_builtin("shelf")
        a, b = _query_pairs(artifacts, 1, seed + 401, scene=scene)[0]
        scenarios.append({"suite": "shelf", "scenario": "shelf",
                          "scene": "shelf", "start": a, "goal": b})
    return scenarios


def bench_control(cfg: dict, out_dir, artifacts: DeskArtifacts | None = None) -> dict:
    """Servo-tracking suites over obstacle-free, single-, multi-obstacle and
    shelf scenes for all three roadmaps, plus the potential-field baseline on
    the multi-obstacle scenes."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if artifacts is None:
        artifacts = DeskArtifacts(cfg)

    scfg = build_servo(cfg)
    scenarios = _control_scenarios(cfg, artifacts)
    rows = []
    results: list[dict] = []
    t0 = time.perf_counter()
    for sc in scenarios:
        scene = load_builtin(sc["scene"]) if sc["scene"] else empty_scene(artifacts.cam.image_size)
        start_node = artifacts.nodes[sc["start"]]
        goal_node = artifacts.nodes[sc["goal"]]
        for tag in METRIC_ORDER:
            rm = artifacts.roadmaps[tag]
            plan = planner.query(rm, start_node.image_state, goal_node.image_state,
                                 scene, artifacts.metrics[tag], k=artifacts.k,
                                 start_q=start_node.joint_config,
                                 goal_q=goal_node.joint_config)
            rec = {"suite": sc["suite"], "scenario": sc["scenario"],
                   "scene": sc["scene"] or "", "controller": tag,
                   "plan_status": plan.status, "iterations": plan.iterations,
                   "edges_checked": plan.edges_checked}
            if plan.success:
                plant = SimPlant(artifacts.arm, artifacts.cam,
                                 plan.path.joint_configs[0], seed=int(cfg["seed"]))
                track = servo.track_path(plan.path, plant, scfg, scene=scene,
                                         m_joints=artifacts.arm.m)
                tr = servo.rise_settle_overshoot(track.log)
                rec.update({
                    "waypoints": len(plan.path.states), "verdict": track.verdict,
                    "steps": len(track.log), "sim_seconds": track.sim_seconds,
                    "rise_time": tr["system"]["rise_time"],
                    "settling_time": tr["system"]["settling_time"],
                    "overshoot_pct": tr["system"]["overshoot_pct"],
                    "ee_rise_time": tr["end_effector"]["rise_time"],
                    "ee_settling_time": tr["end_effector"]["settling_time"],
                    "ee_overshoot_pct": tr["end_effector"]["overshoot_pct"],
                    "execution_time": tr["execution_time"],
                })
            else:
                rec.update({"waypoints": None, "verdict": "no-plan", "steps": None,
                            "sim_seconds": None, "rise_time": None,
                            "settling_time": None, "overshoot_pct": None,
                            "ee_rise_time": None, "ee_settling_time": None,
                            "ee_overshoot_pct": None, "execution_time": None})
            results.append(rec)
        if sc["suite"] == "multi":
            plant = SimPlant(artifacts.arm, artifacts.cam, start_node.joint_config,
                             seed=int(cfg["seed"]))
            apf = servo.run_apf(plant, goal_node.image_state, scene, scfg,
                                m_joints=artifacts.arm.m)
            tr = servo.rise_settle_overshoot(apf.log)
            results.append({"suite": sc["suite"], "scenario": sc["scenario"],
                            "scene": sc["scene"] or "", "controller": "apf",
                            "plan_status": "reactive", "iterations": None,
                            "edges_checked": None, "waypoints": None,
                            "verdict": apf.verdict, "steps": len(apf.log),
                            "sim_seconds": apf.sim_seconds,
                            "rise_time": tr["system"]["rise_time"],
                            "settling_time": tr["system"]["settling_time"],
                            "overshoot_pct": tr["system"]["overshoot_pct"],
                            "ee_rise_time": tr["end_effector"]["rise_time"],
                            "ee_settling_time": tr["end_effector"]["settling_time"],
                            "ee_overshoot_pct": tr["end_effector"]["overshoot_pct"],
                            "execution_time": tr["execution_time"]})
    artifacts.timings["control_suite_seconds"] = time.perf_counter() - t0

    header = ["suite", "scenario", "scene", "controller", "plan_status",
              "iterations", "edges_checked", "waypoints", "verdict", "steps",
              "sim_seconds", "rise_time", "settling_time", "overshoot_pct",
              "ee_rise_time", "ee_settling_time", "ee_overshoot_pct",
              "execution_time"]
    rows = [[rec.get(col) for col in header] for rec in results]
    write_csv(out_dir / "report_control.csv", header, rows)

    def _suite_counts(tag: str) -> dict:
        mine = [r for r in results if r["controller"] == tag]
        planned = [r for r in mine if r["plan_status"] in ("success", "reactive")]
        tracked = [r for r in planned if r["verdict"] == "converged"]
        return {"scenarios": len(mine), "planned": len(planned),
                "converged": len(tracked)}

    counts = {tag: _suite_counts(tag) for tag in METRIC_ORDER + ("apf",)}
    overshoots = [r["overshoot_pct"] for r in results
                  if r["controller"] in METRIC_ORDER
                  and r["verdict"] == "converged" and r["overshoot_pct"] is not None]
    trap_rows = {r["controller"]: r for r in results if r["scenario"] == "multi_3"}
    tight_rows = {r["controller"]: r for r in results if r["scenario"] == "multi_4"}
    learned_rate = counts[LEARNED]["converged"] / max(1, counts[LEARNED]["scenarios"])
    image_rate = counts[IMAGE_SPACE]["converged"] / max(1, counts[IMAGE_SPACE]["scenarios"])
    checks = {
        "learned_tracks_all_planned":
            counts[LEARNED]["converged"] == counts[LEARNED]["scenarios"]
            == counts[LEARNED]["planned"],
        "image_success_le_learned": image_rate <= learned_rate,
        "overshoot_within_5pct": all(o <= 5.0 for o in overshoots),
        "apf_trap_stalled": trap_rows["apf"]["verdict"] != "converged",
        "learned_trap_converged": trap_rows[LEARNED]["verdict"] == "converged",
        "apf_zero_success_on_multi": counts["apf"]["converged"] == 0,
        "image_plan_failed_on_tight":
            tight_rows[IMAGE_SPACE]["plan_status"] != "success",
        "learned_planned_all_multi":
            all(r["plan_status"] == "success" for r in results
                if r["controller"] == LEARNED and r["suite"] == "multi"),
    }
    summary = {"counts": counts, "checks": checks,
               "max_overshoot_pct": max(overshoots) if overshoots else None,
               "scenarios": len(scenarios)}
    io.write_json(out_dir / "summary_control.json", summary)
    write_csv(out_dir / "timings.csv", ["stage", "seconds"],
              [[k, v] for k, v in sorted(artifacts.timings.items())])
    return summary


def run_full_bench(cfg: dict, out_dir) -> dict:
    """Sweep to reports in one call (one shared artifact build)."""
    out_dir = Path(out_dir)
    artifacts = DeskArtifacts(cfg)
    roadmaps_summary = bench_roadmaps(cfg, out_dir, artifacts)
    control_summary = bench_control(cfg, out_dir, artifacts)
    combined = {"roadmaps": roadmaps_summary, "control": control_summary}
    io.write_json(out_dir / "summary.json", combined)
    return combined
