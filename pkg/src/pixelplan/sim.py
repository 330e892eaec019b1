"""Ground-truth oracle: planar serial arm plus pinhole camera.

Used offline to generate keypoint datasets and to verify planner/controller
outputs.  The planner and controller never consult this module at runtime;
the only runtime surface is SimPlant, which exposes velocity commands and
keypoint observations and hides the joint state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import JointLimitError, ProjectionError, ValidationError, VisibilityError
from .types import CameraModel, ImageState, JointConfig, validate_image_state


@dataclass(frozen=True)
class ArmModel:
    """Planar M-joint serial arm.

    The chain has M+1 links: link 0 is a rigid pedestal from the base anchor
    to the first joint, and joint i pivots at the far end of link i-1.
    Keypoint anchors are (link_index, fraction along link) pairs ordered base
    to tip; the default set is {base, joint 1..M, tip}.
    """

    link_lengths: tuple[float, ...]                 # M+1 entries, meters
    base_xy: tuple[float, float] = (0.0, 0.0)
    base_theta: float = 0.0
    joint_limits: tuple[tuple[float, float], ...] = ()
    keypoint_anchors: tuple[tuple[int, float], ...] = ()
    plane_z: float = 0.0

    @property
    def m(self) -> int:
        return len(self.link_lengths) - 1

    def validate(self) -> None:
        if len(self.link_lengths) < 2:
            raise ValidationError("arm needs at least two links (pedestal + one driven)")
        if any(l <= 0 for l in self.link_lengths):
            raise ValidationError("link lengths must be positive")
        if len(self.joint_limits) != self.m:
            raise ValidationError(f"need {self.m} joint limit pairs, got {len(self.joint_limits)}")
        if not self.keypoint_anchors:
            raise ValidationError("arm needs at least one keypoint anchor")
        last_link = len(self.link_lengths) - 1
        if self.keypoint_anchors[-1] != (last_link, 1.0):
            raise ValidationError("anchor list must end at the end-effector tip")
        for link, frac in self.keypoint_anchors:
            if not (0 <= link < len(self.link_lengths)) or not (0.0 <= frac <= 1.0):
                raise ValidationError(f"anchor ({link}, {frac}) outside the chain")

    def to_dict(self) -> dict:
        return {
            "link_lengths": list(self.link_lengths),
            "base_xy": list(self.base_xy),
            "base_theta": self.base_theta,
            "joint_limits": [list(lim) for lim in self.joint_limits],
            "keypoint_anchors": [[link, frac] for link, frac in self.keypoint_anchors],
            "plane_z": self.plane_z,
        }

    @staticmethod
    def from_dict(data) -> "ArmModel":
        arm = ArmModel(
            link_lengths=tuple(float(x) for x in data["link_lengths"]),
            base_xy=(float(data["base_xy"][0]), float(data["base_xy"][1])),
            base_theta=float(data["base_theta"]),
            joint_limits=tuple((float(a), float(b)) for a, b in data["joint_limits"]),
            keypoint_anchors=tuple((int(l), float(f)) for l, f in data["keypoint_anchors"]),
            plane_z=float(data.get("plane_z", 0.0)),
        )
        arm.validate()
        return arm


@dataclass(frozen=True)
class SweepConfig:
    """Workspace sweep discretization: res lattice steps per joint, dt seconds
    per step, velocity cap, and camera frame rate."""

    res: int = 15
    dt: float = 0.1
    v_max: float = 5.0
    frame_rate: float = 10.0

    def validate(self) -> None:
        if self.res < 1 or self.dt <= 0 or self.v_max <= 0 or self.frame_rate <= 0:
            raise ValidationError("sweep parameters must be positive (res >= 1)")


@dataclass(frozen=True)
class Frame:
    """One dataset record: configuration, its image state, and the velocity
    applied to reach the next frame (zeros on the final frame)."""

    frame_index: int
    joint_config: JointConfig
    image_state: ImageState
    joint_velocity: tuple[float, ...]
    dt: float


def default_arm(m: int = 3) -> ArmModel:
    """Desk-scale planar arm: pedestal plus m driven links, anchors at base,
    each joint, and the tip (m+2 keypoints)."""
    lengths = (0.3, 0.25, 0.2, 0.15)[: m + 1]
    if m > 3:
        lengths = lengths + (0.15,) * (m - 3)
    anchors = [(0, 0.0)] + [(i, 0.0) for i in range(1, m + 1)] + [(m, 1.0)]
    arm = ArmModel(
        link_lengths=lengths,
        base_xy=(0.0, 0.0),
        base_theta=0.0,
        joint_limits=((-2.2, 2.2),) * m,
        keypoint_anchors=tuple(anchors),
    )
    arm.validate()
    return arm


def default_camera(image_size: tuple[int, int] = (640, 480),
                   focal: float = 350.0, depth: float = 1.5) -> CameraModel:
    """Camera looking straight down at the arm plane from `depth` meters; the
    world origin projects to the principal point."""
    w, h = image_size
    k = ((focal, 0.0, w / 2.0), (0.0, focal, h / 2.0), (0.0, 0.0, 1.0))
    # x_cam = x_world, y_cam = -y_world (image v grows downward), z_cam = depth - z_world
    t = ((1.0, 0.0, 0.0, 0.0),
         (0.0, -1.0, 0.0, 0.0),
         (0.0, 0.0, -1.0, depth),
         (0.0, 0.0, 0.0, 1.0))
    cam = CameraModel(intrinsics=k, extrinsics=t, image_size=(w, h))
    cam.validate()
    return cam


def _check_limits(arm: ArmModel, q: JointConfig) -> None:
    if q.m != arm.m:
        raise ValidationError(f"expected {arm.m} joint angles, got {q.m}")
    for j, (angle, (lo, hi)) in enumerate(zip(q.q, arm.joint_limits)):
        if not (lo <= angle <= hi):
            raise JointLimitError(j, angle, lo, hi)


def chain_points(arm: ArmModel, q: JointConfig) -> np.ndarray:
    """Positions of the M+2 chain vertices (base, joints, tip) in world xy."""
    _check_limits(arm, q)
    pts = np.empty((len(arm.link_lengths) + 1, 2))
    pts[0] = arm.base_xy
    theta = arm.base_theta
    for i, length in enumerate(arm.link_lengths):
        if i >= 1:
            theta += q.q[i - 1]
        pts[i + 1, 0] = pts[i, 0] + length * math.cos(theta)
        pts[i + 1, 1] = pts[i, 1] + length * math.sin(theta)
    return pts


def forward_kinematics(arm: ArmModel, q: JointConfig) -> np.ndarray:
    """World 3D positions (N, 3) of the arm's keypoint anchors, base first."""
    verts = chain_points(arm, q)
    out = np.empty((len(arm.keypoint_anchors), 3))
    for i, (link, frac) in enumerate(arm.keypoint_anchors):
        p = verts[link] + frac * (verts[link + 1] - verts[link])
        out[i, 0] = p[0]
        out[i, 1] = p[1]
        out[i, 2] = arm.plane_z
    return out


def project(cam: CameraModel, world_points) -> ImageState:
    """Pinhole projection of world points to an image state (perspective
    division applied).  Raises ProjectionError for non-positive depth."""
    pts = np.atleast_2d(np.asarray(world_points, dtype=float))
    t = cam.t_matrix()
    k = cam.k_matrix()
    homo = np.hstack([pts, np.ones((pts.shape[0], 1))])
    cam_pts = (t @ homo.T).T[:, :3]
    flat = []
    for i, p in enumerate(cam_pts):
        if p[2] <= 0:
            raise ProjectionError(i, float(p[2]))
        uvw = k @ p
        flat.extend((uvw[0] / uvw[2], uvw[1] / uvw[2]))
    return ImageState.from_flat(flat)


def observe(arm: ArmModel, cam: CameraModel, q: JointConfig) -> ImageState:
    """FK followed by projection."""
    return project(cam, forward_kinematics(arm, q))


def sweep_velocity(motion_range: float, cfg: SweepConfig) -> float:
    """Per-joint sweep speed: min(range / (res * dt), v_max)."""
    if motion_range < 0:
        raise ValidationError("motion range must be >= 0")
    return min(motion_range / (cfg.res * cfg.dt), cfg.v_max)


def _snake_order(res: int, m: int):
    """Lattice index tuples where consecutive tuples differ in exactly one
    coordinate by one step (boustrophedon traversal)."""
    if m == 1:
        return [(i,) for i in range(res)]
    inner = _snake_order(res, m - 1)
    order = []
    for i in range(res):
        block = inner if i % 2 == 0 else list(reversed(inner))
        order.extend((i,) + rest for rest in block)
    return order


def lattice_values(arm: ArmModel, res: int) -> list[np.ndarray]:
    """Per-joint lattice: res values spaced range/res starting at the lower
    limit (so one sweep step at the Eq.-style velocity covers exactly one
    lattice step)."""
    values = []
    for lo, hi in arm.joint_limits:
        step = (hi - lo) / res
        values.append(lo + step * np.arange(res))
    return values


def run_sweep(arm: ArmModel, cam: CameraModel, cfg: SweepConfig) -> list[Frame]:
    """Traverse the joint box on a res^M lattice in snake order, recording one
    frame per step.

    Each frame stores the velocity applied to reach the next frame, so
    velocity * dt reconstructs the lattice exactly.  Raises VisibilityError if
    any sampled state projects outside the image.
    """
    arm.validate()
    cfg.validate()
    values = lattice_values(arm, cfg.res)
    order = _snake_order(cfg.res, arm.m)
    configs = [JointConfig(tuple(float(values[j][idx[j]]) for j in range(arm.m)))
               for idx in order]

    frames: list[Frame] = []
    for n, q in enumerate(configs):
        state = observe(arm, cam, q)
        verdict = validate_image_state(state, cam.image_size,
                                       expected_n=len(arm.keypoint_anchors))
        if not verdict.valid:
            raise VisibilityError(q.q, "; ".join(verdict.violations))
        if n + 1 < len(configs):
            dq = np.asarray(configs[n + 1].q) - np.asarray(q.q)
            vel = tuple(float(x) for x in dq / cfg.dt)
        else:
            vel = (0.0,) * arm.m
        frames.append(Frame(n, q, state, vel, cfg.dt))
    return frames


def occupied_pixels(arm: ArmModel, cam: CameraModel, q: JointConfig,
                    thickness: float) -> set[tuple[int, int]]:
    """Integer pixels within `thickness` px of the projected anchor polyline
    (thickness 0 keeps only pixels whose center lies on the polyline)."""
    state = observe(arm, cam, q)
    pts = np.array([[kp.u, kp.v] for kp in state.keypoints])
    u_min = int(math.floor(pts[:, 0].min() - thickness))
    u_max = int(math.ceil(pts[:, 0].max() + thickness))
    v_min = int(math.floor(pts[:, 1].min() - thickness))
    v_max = int(math.ceil(pts[:, 1].max() + thickness))
    us, vs = np.meshgrid(np.arange(u_min, u_max + 1), np.arange(v_min, v_max + 1))
    grid = np.stack([us.ravel(), vs.ravel()], axis=1).astype(float)

    dist = np.full(grid.shape[0], np.inf)
    for a, b in zip(pts[:-1], pts[1:]):
        ab = b - a
        denom = float(ab @ ab)
        if denom == 0.0:
            t = np.zeros(grid.shape[0])
        else:
            t = np.clip((grid - a) @ ab / denom, 0.0, 1.0)
        closest = a + t[:, None] * ab
        dist = np.minimum(dist, np.linalg.norm(grid - closest, axis=1))
    keep = grid[dist <= thickness]
    return {(int(p[0]), int(p[1])) for p in keep}


class SimPlant:
    """Closed-loop stand-in for the real robot and camera.

    Exposes only `apply` (joint velocity command) and `observe` (keypoint
    measurement); joint state is internal and intentionally unreadable, which
    is what keeps the controller model-free.  Commands are integrated over dt
    and clipped at the joint limits.
    """

    def __init__(self, arm: ArmModel, cam: CameraModel, q0: JointConfig,
                 noise_std: float = 0.0, seed: int = 0):
        arm.validate()
        _check_limits(arm, q0)
        self._arm = arm
        self._cam = cam
        self._q = np.asarray(q0.q, dtype=float)
        self._noise_std = noise_std
        self._rng = np.random.default_rng(seed)

    def apply(self, qdot, dt: float) -> None:
        dq = np.asarray(qdot, dtype=float) * dt
        if self._noise_std > 0:
            dq = dq + self._rng.normal(0.0, self._noise_std, size=dq.shape)
        self._q = self._q + dq
        lims = np.asarray(self._arm.joint_limits)
        self._q = np.clip(self._q, lims[:, 0], lims[:, 1])

    def observe(self) -> ImageState:
        return observe(self._arm, self._cam, JointConfig(tuple(self._q)))
