"""Lazy roadmap construction: nodes from sweep samples, k-nearest-neighbor
edges under a chosen metric, and no collision checking at build time."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import wasserstein_distance

from .errors import ParseError, ValidationError
from .metrics import Metric
from .sim import Frame
from .types import ImageState, JointConfig


@dataclass(frozen=True)
class RoadmapNode:
    """One roadmap vertex; joint_config is an optional oracle annotation and
    frame_index ties the node back to its dataset frame."""

    index: int
    image_state: ImageState
    joint_config: JointConfig | None = None
    frame_index: int | None = None


@dataclass
class RoadmapEdge:
    """Undirected edge (a < b) with its frozen metric cost and lazy validity
    flags: unchecked edges are optimistically valid."""

    a: int
    b: int
    cost: float
    checked: bool = False
    valid: bool = True


@dataclass
class Roadmap:
    nodes: list[RoadmapNode]
    edges: list[RoadmapEdge]
    metric_tag: str
    k: int
    build_seconds: float = 0.0

    def validate(self) -> None:
        seen = set()
        for e in self.edges:
            if e.a == e.b:
                raise ValidationError(f"self-edge at node {e.a}")
            if e.cost <= 0:
                raise ValidationError(f"edge ({e.a}, {e.b}) has non-positive cost")
            key = (min(e.a, e.b), max(e.a, e.b))
            if key in seen:
                raise ValidationError(f"duplicate undirected edge {key}")
            if not e.checked and not e.valid:
                raise ValidationError(f"unchecked edge {key} must be optimistically valid")
            seen.add(key)

    def adjacency(self) -> dict[int, list[tuple[int, RoadmapEdge]]]:
        adj: dict[int, list[tuple[int, RoadmapEdge]]] = {i: [] for i in range(len(self.nodes))}
        for e in self.edges:
            adj[e.a].append((e.b, e))
            adj[e.b].append((e.a, e))
        return adj

    def to_dict(self) -> dict:
        has_q = all(n.joint_config is not None for n in self.nodes)
        return {
            "metric_tag": self.metric_tag,
            "k": self.k,
            "nodes": [n.image_state.to_list() for n in self.nodes],
            "frame_indices": [n.frame_index for n in self.nodes],
            "joint_configs": [n.joint_config.to_list() for n in self.nodes] if has_q else None,
            "edges": [{"a": e.a, "b": e.b, "cost": e.cost,
                       "checked": e.checked, "valid": e.valid} for e in self.edges],
        }

    @staticmethod
    def from_dict(data) -> "Roadmap":
        try:
            states = [ImageState.from_list(s) for s in data["nodes"]]
            frames = data.get("frame_indices") or [None] * len(states)
            qs = data.get("joint_configs")
            nodes = [RoadmapNode(i, s,
                                 JointConfig.from_list(qs[i]) if qs else None,
                                 None if frames[i] is None else int(frames[i]))
                     for i, s in enumerate(states)]
            edges = [RoadmapEdge(int(e["a"]), int(e["b"]), float(e["cost"]),
                                 bool(e["checked"]), bool(e["valid"]))
                     for e in data["edges"]]
            rm = Roadmap(nodes, edges, str(data["metric_tag"]), int(data["k"]))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ParseError(f"malformed roadmap: {exc}") from exc
        rm.validate()
        return rm


def sample_nodes(frames: list[Frame], count: int | None = None,
                 strategy: str = "all", seed: int = 0) -> list[RoadmapNode]:
    """Select roadmap nodes from dataset frames; states are always dataset
    members, never synthesized."""
    if strategy == "all":
        chosen = range(len(frames))
    elif strategy == "uniform-subsample":
        if count is None or count > len(frames):
            raise ValidationError(
                f"subsample count {count} exceeds dataset size {len(frames)}")
        rng = np.random.default_rng(seed)
        chosen = sorted(rng.choice(len(frames), size=count, replace=False))
    else:
        raise ValidationError(f"unknown sampling strategy {strategy!r}")
    return [RoadmapNode(i, frames[j].image_state, frames[j].joint_config,
                        frames[j].frame_index)
            for i, j in enumerate(chosen)]


def node_arrays(nodes: list[RoadmapNode]) -> tuple[np.ndarray, np.ndarray | None]:
    """Stacked flattened states (n, 2N) and, when every node carries one,
    stacked joint configs (n, M)."""
    flat = np.array([n.image_state.flatten() for n in nodes])
    if all(n.joint_config is not None for n in nodes):
        joints = np.array([n.joint_config.asarray() for n in nodes])
    else:
        joints = None
    return flat, joints


def k_nearest(nodes: list[RoadmapNode], metric: Metric, k: int) -> list[list[int]]:
    """For each node, the k nearest other nodes under the metric; ties broken
    by (distance, lower index)."""
    n = len(nodes)
    if k >= n:
        raise ValidationError(f"k={k} must be smaller than node count {n}")
    flat, joints = node_arrays(nodes)
    if metric.needs_joints and joints is None:
        raise ValidationError(f"{metric.tag} metric needs joint configs on every node")
    order_keys = np.arange(n)
    out = []
    for i in range(n):
        qq = None if joints is None else joints[i]
        row = np.asarray(metric.rows_from(flat[i], flat, qq, joints), dtype=float)
        row[i] = np.inf
        ranked = np.lexsort((order_keys, row))
        out.append([int(j) for j in ranked[:k]])
    return out


def build(nodes: list[RoadmapNode], metric: Metric, k: int) -> Roadmap:
    """Union of k-NN edges (an edge exists if either endpoint selects the
    other), deduplicated as undirected, all lazily unchecked."""
    if len(nodes) < 2:
        raise ValidationError("roadmap needs at least 2 nodes")
    start = time.perf_counter()
    k_eff = min(k, len(nodes) - 1)
    flat, joints = node_arrays(nodes)
    if metric.needs_joints and joints is None:
        raise ValidationError(f"{metric.tag} metric needs joint configs on every node")

    order_keys = np.arange(len(nodes))
    edge_cost: dict[tuple[int, int], float] = {}
    for i in range(len(nodes)):
        qq = None if joints is None else joints[i]
        row = np.asarray(metric.rows_from(flat[i], flat, qq, joints), dtype=float)
        row[i] = np.inf
        ranked = np.lexsort((order_keys, row))
        for j in ranked[:k_eff]:
            key = (min(i, int(j)), max(i, int(j)))
            if key not in edge_cost:
                edge_cost[key] = float(row[j])

    edges = [RoadmapEdge(a, b, c) for (a, b), c in sorted(edge_cost.items())]
    rm = Roadmap(list(nodes), edges, metric.tag, k)
    rm.validate()
    rm.build_seconds = time.perf_counter() - start
    return rm


def connected_components(rm: Roadmap) -> int:
    """Number of connected components over valid edges."""
    parent = list(range(len(rm.nodes)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in rm.edges:
        if e.valid:
            ra, rb = find(e.a), find(e.b)
            if ra != rb:
                parent[ra] = rb
    return len({find(i) for i in range(len(rm.nodes))})


def edge_displacements(rm: Roadmap) -> np.ndarray:
    """True joint displacement per edge (needs oracle configs on every node)."""
    if any(n.joint_config is None for n in rm.nodes):
        raise ValidationError("edge displacement histogram needs joint configs on every node")
    qs = np.array([n.joint_config.asarray() for n in rm.nodes])
    return np.array([float(np.linalg.norm(qs[e.a] - qs[e.b])) for e in rm.edges])


def displacement_summary(values: np.ndarray,
                         reference: np.ndarray | None = None) -> dict:
    """Mean/median/p95 of an edge-displacement distribution, plus its
    Wasserstein-1 distance to a reference distribution when given."""
    values = np.asarray(values, dtype=float)
    out = {
        "count": int(values.size),
        "mean": float(values.mean()),
        "p50": float(np.percentile(values, 50)),
        "p95": float(np.percentile(values, 95)),
    }
    if reference is not None:
        out["wasserstein_to_reference"] = float(
            wasserstein_distance(values, np.asarray(reference, dtype=float)))
    return out
