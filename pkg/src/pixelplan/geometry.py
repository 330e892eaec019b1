"""2D geometric primitives for pixel-space collision checking.

All predicates use closed boundary conditions (touching counts as contact)
with a fixed 1e-9 px epsilon for orientation tests.
"""

from __future__ import annotations

import math

import numpy as np

EPS = 1e-9


def cross(o, a, b) -> float:
    """Signed area of the parallelogram (o->a) x (o->b)."""
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _on_segment(a, b, p) -> bool:
    """p assumed collinear with a-b: is it within the segment's box?"""
    return (min(a[0], b[0]) - EPS <= p[0] <= max(a[0], b[0]) + EPS
            and min(a[1], b[1]) - EPS <= p[1] <= max(a[1], b[1]) + EPS)


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Closed segment intersection test (shared endpoints count)."""
    d1 = cross(q1, q2, p1)
    d2 = cross(q1, q2, p2)
    d3 = cross(p1, p2, q1)
    d4 = cross(p1, p2, q2)
    if ((d1 > EPS and d2 < -EPS) or (d1 < -EPS and d2 > EPS)) and \
       ((d3 > EPS and d4 < -EPS) or (d3 < -EPS and d4 > EPS)):
        return True
    if abs(d1) <= EPS and _on_segment(q1, q2, p1):
        return True
    if abs(d2) <= EPS and _on_segment(q1, q2, p2):
        return True
    if abs(d3) <= EPS and _on_segment(p1, p2, q1):
        return True
    if abs(d4) <= EPS and _on_segment(p1, p2, q2):
        return True
    return False


def point_segment_distance(p, a, b) -> float:
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    denom = dx * dx + dy * dy
    if denom <= 0:
        return math.hypot(p[0] - ax, p[1] - ay)
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / denom
    t = min(1.0, max(0.0, t))
    return math.hypot(p[0] - (ax + t * dx), p[1] - (ay + t * dy))


def segment_segment_distance(p1, p2, q1, q2) -> float:
    """Minimum distance between two closed segments (0 when they intersect)."""
    if segments_intersect(p1, p2, q1, q2):
        return 0.0
    return min(point_segment_distance(p1, q1, q2),
               point_segment_distance(p2, q1, q2),
               point_segment_distance(q1, p1, p2),
               point_segment_distance(q2, p1, p2))


def point_in_polygon(p, poly) -> bool:
    """Closed containment test: boundary points count as inside."""
    n = len(poly)
    if n == 1:
        return math.hypot(p[0] - poly[0][0], p[1] - poly[0][1]) <= EPS
    if n == 2:
        return point_segment_distance(p, poly[0], poly[1]) <= EPS
    for i in range(n):
        if point_segment_distance(p, poly[i], poly[(i + 1) % n]) <= EPS:
            return True
    inside = False
    px, py = p
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > py) != (y2 > py):
            x_at = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if px < x_at:
                inside = not inside
    return inside


def convex_hull(points) -> list[tuple[float, float]]:
    """Monotone-chain convex hull, counterclockwise; degenerate inputs yield
    1 or 2 vertices."""
    pts = sorted(set((float(p[0]), float(p[1])) for p in points))
    if len(pts) <= 2:
        return pts
    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= EPS:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= EPS:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return hull if len(hull) >= 2 else pts[:2]


def polygon_edges(poly):
    """Edge list; a 2-vertex polygon is one segment, a point is a zero-length
    segment."""
    n = len(poly)
    if n == 1:
        return [(poly[0], poly[0])]
    if n == 2:
        return [(poly[0], poly[1])]
    return [(poly[i], poly[(i + 1) % n]) for i in range(n)]


def polygons_intersect(pa, pb) -> bool:
    """Closed intersection between two polygons (edge crossing or containment
    either way); handles degenerate point/segment polygons."""
    for a1, a2 in polygon_edges(pa):
        for b1, b2 in polygon_edges(pb):
            if segments_intersect(a1, a2, b1, b2):
                return True
    if len(pb) >= 3 and point_in_polygon(pa[0], pb):
        return True
    if len(pa) >= 3 and point_in_polygon(pb[0], pa):
        return True
    return False


def polygons_distance(pa, pb) -> float:
    """Minimum distance between two polygon regions (0 when intersecting)."""
    if polygons_intersect(pa, pb):
        return 0.0
    best = math.inf
    for a1, a2 in polygon_edges(pa):
        for b1, b2 in polygon_edges(pb):
            best = min(best, segment_segment_distance(a1, a2, b1, b2))
    return best


def closest_point_on_segment(p, a, b) -> tuple[float, float]:
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    denom = dx * dx + dy * dy
    if denom <= 0:
        return (ax, ay)
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / denom
    t = min(1.0, max(0.0, t))
    return (ax + t * dx, ay + t * dy)


def point_polygon_distance(p, poly) -> tuple[float, tuple[float, float], bool]:
    """Distance from a point to a polygon region: (distance to the region,
    closest boundary point, inside flag).  Distance is 0 inside."""
    best = math.inf
    best_pt = poly[0]
    for a, b in polygon_edges(poly):
        c = closest_point_on_segment(p, a, b)
        d = math.hypot(p[0] - c[0], p[1] - c[1])
        if d < best:
            best, best_pt = d, c
    inside = len(poly) >= 3 and point_in_polygon(p, poly)
    return (0.0 if inside else best), best_pt, inside


# Vectorized forms used by the dense-sampling test oracle.

def points_segment_distances(points: np.ndarray, a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    d = np.asarray(b, dtype=float) - a
    denom = float(d @ d)
    if denom <= 0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ d / denom, 0.0, 1.0)
    return np.linalg.norm(points - (a + t[:, None] * d), axis=1)


def points_polygon_edge_distances(points: np.ndarray, poly) -> np.ndarray:
    dist = np.full(points.shape[0], np.inf)
    for a, b in polygon_edges(poly):
        dist = np.minimum(dist, points_segment_distances(points, a, b))
    return dist


def points_in_polygon(points: np.ndarray, poly) -> np.ndarray:
    """Crossing-number containment for many points (boundary handling is left
    to the distance test the callers pair this with)."""
    if len(poly) < 3:
        return np.zeros(points.shape[0], dtype=bool)
    inside = np.zeros(points.shape[0], dtype=bool)
    px, py = points[:, 0], points[:, 1]
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        mask = (y1 > py) != (y2 > py)
        if not mask.any():
            continue
        x_at = x1 + (py[mask] - y1) * (x2 - x1) / (y2 - y1)
        hits = np.zeros_like(inside)
        hits[mask] = px[mask] < x_at
        inside ^= hits
    return inside
