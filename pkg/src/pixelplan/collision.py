"""Model-free image-space collision checking.

Motion between two image states is covered by one swept quadrilateral per
consecutive keypoint pair; an edge is in collision when any quad's convex
hull intersects an obstacle or comes within the scene's safety margin of it
(distance threshold == Minkowski-disc inflation).  The hull over-approximates
the swept set, so the check is conservative: it may flag free motion, never
the reverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import ValidationError
from .types import ImageState, Scene


@dataclass(frozen=True)
class EdgeCheck:
    """Outcome of an edge collision query; quad/obstacle identify the first
    hit in scan order."""

    hit: bool
    quad_index: int | None = None
    obstacle_index: int | None = None

    def __bool__(self) -> bool:
        return self.hit


FREE = EdgeCheck(False)


def swept_quads(a: ImageState, b: ImageState) -> list[list[tuple[float, float]]]:
    """N-1 motion polygons [a_i, a_i+1, b_i+1, b_i], each normalized to its
    convex hull (bowtie quads and zero-motion edges degrade gracefully)."""
    if a.n != b.n:
        raise ValidationError(f"image states differ in arity: {a.n} vs {b.n}")
    quads = []
    ka, kb = a.keypoints, b.keypoints
    for i in range(a.n - 1):
        corners = [(ka[i].u, ka[i].v), (ka[i + 1].u, ka[i + 1].v),
                   (kb[i + 1].u, kb[i + 1].v), (kb[i].u, kb[i].v)]
        quads.append(geometry.convex_hull(corners))
    return quads


def _polygon_hit(poly, obstacle, margin: float) -> bool:
    if geometry.polygons_intersect(poly, obstacle):
        return True
    return geometry.polygons_distance(poly, obstacle) <= margin


def edge_in_collision(a: ImageState, b: ImageState, scene: Scene) -> EdgeCheck:
    """Check the motion a -> b against margin-inflated scene obstacles."""
    for qi, quad in enumerate(swept_quads(a, b)):
        for oi, obstacle in enumerate(scene.obstacles):
            if _polygon_hit(quad, obstacle, scene.safety_margin):
                return EdgeCheck(True, qi, oi)
    return FREE


def state_in_collision(s: ImageState, scene: Scene) -> bool:
    """True when the arm polyline lies within the safety margin of (or
    intersects) any obstacle."""
    kps = [(kp.u, kp.v) for kp in s.keypoints]
    for i in range(len(kps) - 1):
        seg = [kps[i], kps[i + 1]]
        for obstacle in scene.obstacles:
            if _polygon_hit(seg, obstacle, scene.safety_margin):
                return True
    return False


def oracle_edge_check(a: ImageState, b: ImageState, scene: Scene,
                      steps: int = 100, samples_per_segment: int = 20) -> bool:
    """Dense-sampling reference check (tests only): linearly interpolate the
    image states and sample every arm segment, flagging any sampled point
    within the margin of (or inside) an obstacle.

    Under-approximates the swept set, so production hull checks may only be
    more conservative, never less.
    """
    if steps < 2:
        raise ValidationError("steps must be >= 2")
    fa, fb = a.flatten(), b.flatten()
    ts = np.linspace(0.0, 1.0, steps)
    states = fa[None, :] + ts[:, None] * (fb - fa)[None, :]   # (steps, 2N)
    pts = states.reshape(steps, -1, 2)                        # (steps, N, 2)

    seg_t = np.linspace(0.0, 1.0, samples_per_segment)
    starts = pts[:, :-1, None, :]                             # (steps, N-1, 1, 2)
    deltas = pts[:, 1:, None, :] - starts
    samples = (starts + seg_t[None, None, :, None] * deltas).reshape(-1, 2)

    for obstacle in scene.obstacles:
        dist = geometry.points_polygon_edge_distances(samples, obstacle)
        if (dist <= scene.safety_margin).any():
            return True
        if geometry.points_in_polygon(samples, obstacle).any():
            return True
    return False
