"""Lazy roadmap queries: connect start/goal, A* search, validate only the
edges on proposed paths, invalidate and repeat until a verified collision-free
path or proven disconnection."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from . import collision
from .errors import ValidationError
from .metrics import IMAGE_SPACE, Metric, dist_image, dist_joint
from .roadmap import Roadmap, RoadmapNode
from .types import ImageState, JointConfig, PlannedPath, Scene, validate_image_state


class QueryGraph:
    """Session-local overlay over a roadmap: query nodes, their connector
    edges, and local validity flags.  The persisted roadmap is never touched
    unless changes are explicitly written back."""

    def __init__(self, base: Roadmap):
        self.base = base
        self.nodes: list[RoadmapNode] = list(base.nodes)
        self.cost: dict[tuple[int, int], float] = {}
        self.flags: dict[tuple[int, int], tuple[bool, bool]] = {}
        self.adj: dict[int, list[tuple[int, tuple[int, int]]]] = {
            i: [] for i in range(len(base.nodes))}
        self.query_indices: list[int] = []
        for e in base.edges:
            key = (e.a, e.b)
            self.cost[key] = e.cost
            self.flags[key] = (e.checked, e.valid)
            self.adj[e.a].append((e.b, key))
            self.adj[e.b].append((e.a, key))

    def add_state(self, s: ImageState, metric: Metric, k: int,
                  q: JointConfig | None = None) -> int:
        """Add a query node with edges to its k nearest existing nodes
        (unchecked, optimistically valid)."""
        if not self.nodes:
            raise ValidationError("cannot connect to an empty roadmap")
        idx = len(self.nodes)
        node = RoadmapNode(idx, s, q, None)
        flat = np.array([n.image_state.flatten() for n in self.nodes])
        joints = None
        if metric.needs_joints:
            if q is None or any(n.joint_config is None for n in self.nodes):
                raise ValidationError("joint-space metric needs joint configs everywhere")
            joints = np.array([n.joint_config.asarray() for n in self.nodes])
        row = np.asarray(metric.rows_from(
            s.flatten(), flat, None if q is None else q.asarray(), joints), dtype=float)
        ranked = np.lexsort((np.arange(len(self.nodes)), row))
        self.nodes.append(node)
        self.adj[idx] = []
        for j in ranked[: min(k, len(self.nodes) - 1)]:
            key = (int(j), idx)
            self.cost[key] = float(row[j])
            self.flags[key] = (False, True)
            self.adj[idx].append((int(j), key))
            self.adj[int(j)].append((idx, key))
        self.query_indices.append(idx)
        return idx

    def valid_neighbors(self, idx: int):
        for other, key in self.adj[idx]:
            checked, valid = self.flags[key]
            if valid:
                yield other, self.cost[key]

    def unchecked_keys_on(self, node_path: list[int]) -> list[tuple[int, int]]:
        keys = []
        for u, v in zip(node_path, node_path[1:]):
            key = (min(u, v), max(u, v))
            if not self.flags[key][0]:
                keys.append(key)
        return keys

    def persist_flags(self) -> None:
        """Copy this session's check results back onto the base roadmap."""
        for e in self.base.edges:
            checked, valid = self.flags[(e.a, e.b)]
            e.checked, e.valid = checked, valid


def connect_endpoint(rm: Roadmap | QueryGraph, s: ImageState, metric: Metric,
                     k: int, q: JointConfig | None = None) -> tuple[QueryGraph, int]:
    """Overlay the roadmap (if not already overlaid) and connect one query
    state; returns the overlay and the new node's index."""
    graph = rm if isinstance(rm, QueryGraph) else QueryGraph(rm)
    idx = graph.add_state(s, metric, k, q)
    return graph, idx


def astar(neighbors_fn, start: int, goal: int, heuristic=None):
    """A* over a graph given as `neighbors_fn(idx) -> iterable[(other, cost)]`.

    Ties break on fewer hops, then lower node index.  Returns
    (node index path, cost) or None when disconnected.
    """
    if heuristic is None:
        heuristic = lambda _: 0.0
    if start == goal:
        return [start], 0.0
    g = {start: 0.0}
    hops = {start: 0}
    parent: dict[int, int] = {}
    heap = [(heuristic(start), 0, start)]
    closed: set[int] = set()
    while heap:
        f, h_ct, u = heapq.heappop(heap)
        if u in closed:
            continue
        closed.add(u)
        if u == goal:
            path = [u]
            while path[-1] != start:
                path.append(parent[path[-1]])
            return path[::-1], g[goal]
        for v, cost in neighbors_fn(u):
            if v in closed:
                continue
            cand = g[u] + cost
            better = v not in g or cand < g[v]
            tie = v in g and cand == g[v] and hops[u] + 1 < hops[v]
            if better or tie:
                g[v] = cand
                hops[v] = hops[u] + 1
                parent[v] = u
                heapq.heappush(heap, (cand + heuristic(v), hops[v], v))
    return None


@dataclass
class QueryResult:
    """Outcome of a lazy query: a verified path or a structured infeasibility
    report, plus checking statistics."""

    status: str                       # "success" | "infeasible"
    path: PlannedPath | None
    iterations: int
    edges_checked: int
    invalidated: int
    reason: str | None = None
    node_path: list[int] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.status == "success"


def _assemble_path(graph: QueryGraph, node_path: list[int],
                   metric_tag: str) -> PlannedPath:
    # collapse zero-cost twin hops (query node duplicating a roadmap node)
    states: list[ImageState] = []
    qs: list[JointConfig | None] = []
    frames: list[int | None] = []
    costs: list[float] = []
    for pos, idx in enumerate(node_path):
        node = graph.nodes[idx]
        if states and node.image_state == states[-1]:
            continue
        if states:
            u, v = node_path[pos - 1], idx
            costs.append(graph.cost[(min(u, v), max(u, v))])
        states.append(node.image_state)
        qs.append(node.joint_config)
        frames.append(node.frame_index)
    path = PlannedPath(
        states=tuple(states),
        metric_tag=metric_tag,
        costs=tuple(costs),
        joint_configs=tuple(qs) if all(q is not None for q in qs) else None,
        frame_indices=tuple(frames) if all(f is not None for f in frames) else None,
    )
    path.validate()
    return path


def query(rm: Roadmap, start: ImageState, goal: ImageState, scene: Scene | None,
          metric: Metric, k: int = 25,
          start_q: JointConfig | None = None, goal_q: JointConfig | None = None,
          persist: bool = False) -> QueryResult:
    """Plan a verified collision-free path from start to goal.

    Repeats A* proposals, collision-checking every unchecked edge on each
    proposal, until a proposal survives or the validity-filtered graph
    disconnects.  Terminates because every edge is checked at most once.
    """
    expected_n = rm.nodes[0].image_state.n if rm.nodes else None
    flags: list[str] = []
    known = {tuple(n.image_state.flatten()) for n in rm.nodes}
    for name, state in (("start", start), ("goal", goal)):
        if scene is not None:
            verdict = validate_image_state(state, scene.image_size, expected_n)
            if not verdict.valid:
                return QueryResult("infeasible", None, 0, 0, 0,
                                   reason=f"{name} invalid: {'; '.join(verdict.violations)}")
            if collision.state_in_collision(state, scene):
                return QueryResult("infeasible", None, 0, 0, 0,
                                   reason=f"{name} state in collision")
        if tuple(state.flatten()) not in known:
            flags.append(f"{name}_off_manifold")

    graph = QueryGraph(rm)
    start_idx = graph.add_state(start, metric, k, start_q)
    goal_idx = graph.add_state(goal, metric, k, goal_q)

    if metric.tag == IMAGE_SPACE:
        goal_flat = goal.flatten()
        heuristic = lambda i: float(np.linalg.norm(
            graph.nodes[i].image_state.flatten() - goal_flat))
    else:
        heuristic = None  # no admissible lower bound: fall back to Dijkstra

    iterations = 0
    edges_checked = 0
    invalidated = 0
    while True:
        iterations += 1
        found = astar(graph.valid_neighbors, start_idx, goal_idx, heuristic)
        if found is None:
            result = QueryResult("infeasible", None, iterations, edges_checked,
                                 invalidated, reason="graph disconnected after invalidations",
                                 flags=flags)
            break
        node_path, _ = found
        clean = True
        for key in graph.unchecked_keys_on(node_path):
            a, b = key
            if scene is None:
                hit = False
            else:
                hit = bool(collision.edge_in_collision(
                    graph.nodes[a].image_state, graph.nodes[b].image_state, scene))
            edges_checked += 1
            graph.flags[key] = (True, not hit)
            if hit:
                invalidated += 1
                clean = False
        if clean:
            path = _assemble_path(graph, node_path, metric.tag)
            result = QueryResult("success", path, iterations, edges_checked,
                                 invalidated, node_path=node_path, flags=flags)
            break

    if persist:
        graph.persist_flags()
    return result


def path_metrics(path: PlannedPath) -> dict:
    """Waypoint counts and per-hop / total pixel and joint distances; joint
    quantities are included only when the path carries oracle configs."""
    path.validate()
    pixel_hops = [dist_image(a, b) for a, b in zip(path.states, path.states[1:])]
    out = {
        "waypoints": len(path.states),
        "pixel_per_hop": pixel_hops,
        "pixel_total": float(sum(pixel_hops)),
        "metric_tag": path.metric_tag,
        "cost_total": path.total_cost,
    }
    if path.joint_configs is not None:
        joint_hops = [dist_joint(a, b)
                      for a, b in zip(path.joint_configs, path.joint_configs[1:])]
        out["joint_per_hop"] = joint_hops
        out["joint_total"] = float(sum(joint_hops))
        if out["pixel_total"] > 0:
            out["rad_per_1000px"] = out["joint_total"] / out["pixel_total"] * 1000.0
    return out
