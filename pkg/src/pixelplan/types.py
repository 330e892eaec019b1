"""Core domain types: keypoints, image states, joint configurations, camera,
scenes and planned paths.

All types are immutable value objects (frozen dataclasses over tuples) and are
safe to copy or share between threads.  Pixel coordinates are continuous
(sub-pixel); angles are radians; image distances are pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError

Point = tuple[float, float]


@dataclass(frozen=True)
class Keypoint:
    """One pixel-coordinate feature on the robot's body."""

    u: float
    v: float

    def to_list(self) -> list[float]:
        return [self.u, self.v]


@dataclass(frozen=True)
class ImageState:
    """Ordered vector of N keypoints (base to end-effector) — one robot
    configuration as seen by the camera.

    Order is positional along the kinematic chain and is never permuted; two
    states are comparable only when their N matches.
    """

    keypoints: tuple[Keypoint, ...]

    @property
    def n(self) -> int:
        return len(self.keypoints)

    def flatten(self) -> np.ndarray:
        """2N vector [u0, v0, u1, v1, ...]."""
        out = np.empty(2 * len(self.keypoints))
        for i, kp in enumerate(self.keypoints):
            out[2 * i] = kp.u
            out[2 * i + 1] = kp.v
        return out

    @staticmethod
    def from_flat(vec) -> "ImageState":
        vec = np.asarray(vec, dtype=float)
        if vec.ndim != 1 or vec.size % 2 != 0:
            raise ValidationError(f"flat image state must have even length, got shape {vec.shape}")
        kps = tuple(Keypoint(float(vec[2 * i]), float(vec[2 * i + 1]))
                    for i in range(vec.size // 2))
        return ImageState(kps)

    def to_list(self) -> list[list[float]]:
        return [kp.to_list() for kp in self.keypoints]

    @staticmethod
    def from_list(data) -> "ImageState":
        try:
            kps = tuple(Keypoint(float(p[0]), float(p[1])) for p in data)
        except (TypeError, ValueError, IndexError) as exc:
            raise ParseError(f"malformed image state: {exc}") from exc
        return ImageState(kps)


@dataclass(frozen=True)
class JointConfig:
    """Actuated joint angles in radians (oracle-side only at runtime)."""

    q: tuple[float, ...]

    @property
    def m(self) -> int:
        return len(self.q)

    def asarray(self) -> np.ndarray:
        return np.asarray(self.q, dtype=float)

    def to_list(self) -> list[float]:
        return list(self.q)

    @staticmethod
    def from_list(data) -> "JointConfig":
        try:
            return JointConfig(tuple(float(x) for x in data))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"malformed joint config: {exc}") from exc


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera: 3x3 intrinsics K, 4x4 world-to-camera transform, and
    image size in pixels."""

    intrinsics: tuple[tuple[float, ...], ...]   # 3x3, row major
    extrinsics: tuple[tuple[float, ...], ...]   # 4x4 rigid, world -> camera
    image_size: tuple[int, int]                 # (W, H)

    def k_matrix(self) -> np.ndarray:
        return np.asarray(self.intrinsics, dtype=float)

    def t_matrix(self) -> np.ndarray:
        return np.asarray(self.extrinsics, dtype=float)

    def validate(self) -> None:
        """Raise ValidationError on a malformed camera."""
        k = self.k_matrix()
        t = self.t_matrix()
        if k.shape != (3, 3):
            raise ValidationError(f"intrinsics must be 3x3, got {k.shape}")
        if t.shape != (4, 4):
            raise ValidationError(f"extrinsics must be 4x4, got {t.shape}")
        if not (k[0, 0] > 0 and k[1, 1] > 0):
            raise ValidationError("focal entries must be positive")
        if abs(k[1, 0]) > 0 or abs(k[2, 0]) > 0 or abs(k[2, 1]) > 0:
            raise ValidationError("intrinsics must be upper-triangular")
        r = t[:3, :3]
        if np.linalg.norm(r.T @ r - np.eye(3)) > 1e-9:
            raise ValidationError("extrinsic rotation block is not orthonormal")
        if not (np.allclose(t[3, :3], 0.0) and math.isclose(t[3, 3], 1.0)):
            raise ValidationError("extrinsics last row must be [0, 0, 0, 1]")

    def to_dict(self) -> dict:
        return {
            "intrinsics": [list(row) for row in self.intrinsics],
            "extrinsics": [list(row) for row in self.extrinsics],
            "image_size": list(self.image_size),
        }

    @staticmethod
    def from_dict(data) -> "CameraModel":
        try:
            cam = CameraModel(
                intrinsics=tuple(tuple(float(x) for x in row) for row in data["intrinsics"]),
                extrinsics=tuple(tuple(float(x) for x in row) for row in data["extrinsics"]),
                image_size=(int(data["image_size"][0]), int(data["image_size"][1])),
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ParseError(f"malformed camera model: {exc}") from exc
        cam.validate()
        return cam


def _polygon_signed_area(poly: tuple[Point, ...]) -> float:
    area = 0.0
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    return 0.5 * area


@dataclass(frozen=True)
class Scene:
    """Pixel-space obstacle polygons with a safety margin.

    Polygons are simple (non self-intersecting), have at least 3 vertices, and
    are stored counterclockwise (image axes: u right, v down).
    """

    obstacles: tuple[tuple[Point, ...], ...]
    safety_margin: float
    image_size: tuple[int, int]

    def validate(self) -> None:
        if self.safety_margin < 0:
            raise ValidationError(f"safety margin must be >= 0, got {self.safety_margin}")
        for idx, poly in enumerate(self.obstacles):
            if len(poly) < 3:
                raise ValidationError(f"obstacle {idx} has fewer than 3 vertices")
            if abs(_polygon_signed_area(poly)) < 1e-12:
                raise ValidationError(f"obstacle {idx} is degenerate (zero area)")
            if _self_intersects(poly):
                raise ValidationError(f"obstacle {idx} is self-intersecting")

    @staticmethod
    def normalized(obstacles, safety_margin, image_size) -> "Scene":
        """Build a validated scene, reorienting each polygon counterclockwise."""
        polys = []
        for poly in obstacles:
            pts = tuple((float(p[0]), float(p[1])) for p in poly)
            if _polygon_signed_area(pts) < 0:
                pts = tuple(reversed(pts))
            polys.append(pts)
        scene = Scene(tuple(polys), float(safety_margin),
                      (int(image_size[0]), int(image_size[1])))
        scene.validate()
        return scene

    def to_dict(self) -> dict:
        return {
            "image_size": list(self.image_size),
            "safety_margin": self.safety_margin,
            "obstacles": [[list(p) for p in poly] for poly in self.obstacles],
        }

    @staticmethod
    def from_dict(data) -> "Scene":
        try:
            return Scene.normalized(data["obstacles"], data["safety_margin"],
                                    data["image_size"])
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ParseError(f"malformed scene: {exc}") from exc


def _self_intersects(poly: tuple[Point, ...]) -> bool:
    """Check a closed polygon for proper self-intersection between
    non-adjacent edges (O(n^2); obstacle contours are small)."""
    n = len(poly)
    segs = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # adjacent edges share a vertex
            if _segments_cross(segs[i], segs[j]):
                return True
    return False


def _segments_cross(s1, s2) -> bool:
    (p1, p2), (q1, q2) = s1, s2

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


@dataclass(frozen=True)
class StateValidity:
    """Verdict from validate_image_state: valid flag plus every violation."""

    valid: bool
    violations: tuple[str, ...] = field(default=())


def validate_image_state(state: ImageState, bounds: tuple[int, int],
                         expected_n: int | None = None) -> StateValidity:
    """Check finiteness, bounds ([0, W) x [0, H)) and arity; returns a verdict
    listing every violated invariant instead of raising."""
    w, h = bounds
    violations: list[str] = []
    if expected_n is not None and state.n != expected_n:
        violations.append(f"wrong arity: expected {expected_n} keypoints, got {state.n}")
    for i, kp in enumerate(state.keypoints):
        if not (math.isfinite(kp.u) and math.isfinite(kp.v)):
            violations.append(f"keypoint {i} non-finite: ({kp.u}, {kp.v})")
        elif not (0 <= kp.u < w and 0 <= kp.v < h):
            violations.append(f"keypoint {i} out of bounds: ({kp.u}, {kp.v}) on {w}x{h}")
    return StateValidity(valid=not violations, violations=tuple(violations))


@dataclass(frozen=True)
class PlannedPath:
    """Sequence of image states from start to goal with frozen edge costs.

    metric_tag identifies the distance the costs were computed under; joint
    configurations are optional oracle annotations carried along for
    verification and never consulted by the controller.
    """

    states: tuple[ImageState, ...]
    metric_tag: str
    costs: tuple[float, ...]                      # one per hop
    joint_configs: tuple[JointConfig, ...] | None = None
    frame_indices: tuple[int, ...] | None = None

    @property
    def total_cost(self) -> float:
        return float(sum(self.costs))

    def validate(self) -> None:
        if not self.states:
            raise ValidationError("path has no states")
        if len(self.costs) != len(self.states) - 1:
            raise ValidationError("path needs exactly one cost per hop")
        for a, b in zip(self.states, self.states[1:]):
            if a == b:
                raise ValidationError("consecutive path states must be distinct")
        if self.joint_configs is not None and len(self.joint_configs) != len(self.states):
            raise ValidationError("joint annotations must match state count")

    def to_dict(self) -> dict:
        return {
            "metric_tag": self.metric_tag,
            "states": [s.to_list() for s in self.states],
            "costs": list(self.costs),
            "joint_configs": None if self.joint_configs is None
            else [q.to_list() for q in self.joint_configs],
            "frame_indices": None if self.frame_indices is None
            else list(self.frame_indices),
        }

    @staticmethod
    def from_dict(data) -> "PlannedPath":
        try:
            path = PlannedPath(
                states=tuple(ImageState.from_list(s) for s in data["states"]),
                metric_tag=str(data["metric_tag"]),
                costs=tuple(float(c) for c in data["costs"]),
                joint_configs=None if data.get("joint_configs") is None
                else tuple(JointConfig.from_list(q) for q in data["joint_configs"]),
                frame_indices=None if data.get("frame_indices") is None
                else tuple(int(i) for i in data["frame_indices"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed path: {exc}") from exc
        return path
