"""Deterministic SVG rendering of scenes, roadmaps, paths, datasets and
trajectory logs.

Palette: obstacles yellow with a purple margin ring, planned path green,
start chain green, goal chain red, intermediate chains light blue.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import PixelPlanError, ParseError
from .types import PlannedPath, Scene

OBSTACLE_FILL = "#f4c20d"
MARGIN_STROKE = "#9b59b6"
PATH_STROKE = "#2ecc71"
START_COLOR = "#2ecc71"
GOAL_COLOR = "#e74c3c"
MID_COLOR = "#7fb3d5"
EDGE_COLOR = "#c8c8c8"
NODE_COLOR = "#8e6bbf"


def _fmt(x: float) -> str:
    return f"{float(x):.2f}".rstrip("0").rstrip(".")


def _poly_points(poly) -> str:
    return " ".join(f"{_fmt(u)},{_fmt(v)}" for u, v in poly)


def _header(size) -> list[str]:
    w, h = size
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white" stroke="black"/>',
    ]


def _scene_elements(scene: Scene) -> list[str]:
    parts = []
    for poly in scene.obstacles:
        pts = _poly_points(poly)
        if scene.safety_margin > 0:
            # stroke of width 2*margin with round joins approximates the
            # margin-inflated contour
            parts.append(
                f'<polygon points="{pts}" fill="{MARGIN_STROKE}" '
                f'stroke="{MARGIN_STROKE}" stroke-width="{_fmt(2 * scene.safety_margin)}" '
                f'stroke-linejoin="round" opacity="0.35"/>')
        parts.append(f'<polygon points="{pts}" fill="{OBSTACLE_FILL}" stroke="black"/>')
    return parts


def _legend(size, entries) -> list[str]:
    parts = ['<g class="legend" font-size="12" font-family="monospace">']
    y = 16
    for color, label in entries:
        parts.append(f'<rect x="8" y="{y - 10}" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="22" y="{y}">{label}</text>')
        y += 16
    parts.append("</g>")
    return parts


def _chain(state_points, color, radius=3.0) -> str:
    pts = " ".join(f"{_fmt(u)},{_fmt(v)}" for u, v in state_points)
    circles = "".join(
        f'<circle cx="{_fmt(u)}" cy="{_fmt(v)}" r="{_fmt(radius)}" fill="{color}"/>'
        for u, v in state_points)
    return (f'<g class="state-chain"><polyline points="{pts}" fill="none" '
            f'stroke="{color}" stroke-width="2"/>{circles}</g>')


def render_scene(scene: Scene) -> str:
    parts = _header(scene.image_size)
    parts += _scene_elements(scene)
    parts += _legend(scene.image_size, [(OBSTACLE_FILL, "obstacle"),
                                        (MARGIN_STROKE, "safety margin")])
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_path(path_doc: dict, scene: Scene | None = None) -> str:
    path = PlannedPath.from_dict(path_doc)
    size = scene.image_size if scene is not None else (640, 480)
    parts = _header(size)
    if scene is not None:
        parts += _scene_elements(scene)
    tips = [s.to_list()[-1] for s in path.states]
    if len(tips) > 1:
        parts.append(f'<polyline points="{_poly_points(tips)}" fill="none" '
                     f'stroke="{PATH_STROKE}" stroke-width="3"/>')
    last = len(path.states) - 1
    for i, state in enumerate(path.states):
        color = START_COLOR if i == 0 else GOAL_COLOR if i == last else MID_COLOR
        parts.append(_chain(state.to_list(), color))
    parts += _legend(size, [(START_COLOR, "start / path"), (GOAL_COLOR, "goal"),
                            (MID_COLOR, "waypoint"), (OBSTACLE_FILL, "obstacle"),
                            (MARGIN_STROKE, "safety margin")])
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_roadmap(doc: dict, scene: Scene | None = None) -> str:
    states = doc["nodes"]
    size = scene.image_size if scene is not None else (640, 480)
    parts = _header(size)
    if scene is not None:
        parts += _scene_elements(scene)
    tips = [s[-1] for s in states]
    for e in doc["edges"]:
        a, b = tips[e["a"]], tips[e["b"]]
        parts.append(f'<line x1="{_fmt(a[0])}" y1="{_fmt(a[1])}" '
                     f'x2="{_fmt(b[0])}" y2="{_fmt(b[1])}" stroke="{EDGE_COLOR}" '
                     f'stroke-width="0.5"/>')
    for tip in tips:
        parts.append(f'<circle cx="{_fmt(tip[0])}" cy="{_fmt(tip[1])}" r="1.5" '
                     f'fill="{NODE_COLOR}"/>')
    parts += _legend(size, [(NODE_COLOR, f'node tip ({doc.get("metric_tag", "?")})'),
                            (EDGE_COLOR, "edge")])
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_points(points, size=(640, 480), color=NODE_COLOR, label="sample") -> str:
    parts = _header(size)
    for u, v in points:
        parts.append(f'<circle cx="{_fmt(u)}" cy="{_fmt(v)}" r="1" fill="{color}"/>')
    parts += _legend(size, [(color, label)])
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_histogram(series: dict[str, list[float]], bins: int = 30,
                     size=(640, 360), title="edge joint displacement") -> str:
    """Overlaid step histograms of several samples (deterministic layout)."""
    import numpy as np

    w, h = size
    parts = _header(size)
    all_values = np.concatenate([np.asarray(v, dtype=float) for v in series.values()])
    lo, hi = float(all_values.min()), float(all_values.max())
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    colors = {"joint-space": "#555555", "learned": PATH_STROKE,
              "image-space": GOAL_COLOR}
    max_count = 1
    hists = {}
    for name, values in series.items():
        counts, _ = np.histogram(np.asarray(values, dtype=float), bins=edges)
        hists[name] = counts
        max_count = max(max_count, int(counts.max()))
    plot_w, plot_h, x0, y0 = w - 60, h - 60, 40, 20
    for name, counts in hists.items():
        color = colors.get(name, MID_COLOR)
        pts = []
        for i, c in enumerate(counts):
            x1 = x0 + plot_w * i / bins
            x2 = x0 + plot_w * (i + 1) / bins
            y = y0 + plot_h * (1 - c / max_count)
            pts.append(f"{_fmt(x1)},{_fmt(y)}")
            pts.append(f"{_fmt(x2)},{_fmt(y)}")
        parts.append(f'<polyline points="{" ".join(pts)}" fill="none" '
                     f'stroke="{color}" stroke-width="2"/>')
    parts.append(f'<text x="{x0}" y="{h - 8}" font-size="12" '
                 f'font-family="monospace">{title} [{_fmt(lo)}, {_fmt(hi)}]</text>')
    parts += _legend(size, [(colors.get(n, MID_COLOR), n) for n in series])
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_artifact(path) -> str:
    """Dispatch on the artifact's schema; unknown documents raise."""
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    if p.suffix == ".jsonl" or "\n{" in text.strip():
        first = json.loads(text.splitlines()[0])
        if "image_state" in first:   # dataset or trajectory log: tip scatter
            points = []
            for line in text.splitlines():
                if line.strip():
                    points.append(json.loads(line)["image_state"][-1])
            return render_points(points)
        raise PixelPlanError(f"unknown JSONL artifact in {path}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", byte_offset=exc.pos) from exc
    if "obstacles" in doc:
        return render_scene(Scene.from_dict(doc))
    if "edges" in doc and "nodes" in doc:
        return render_roadmap(doc)
    if "states" in doc and "costs" in doc:
        return render_path(doc)
    raise PixelPlanError(f"unknown artifact type in {path}")
