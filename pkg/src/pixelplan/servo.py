"""Model-free adaptive visual servoing along planned waypoint sequences, plus
the reactive potential-field baseline.

The controller sees the plant only through `apply(qdot, dt)` and
`observe() -> ImageState`; the displacement side of the estimation window is
the integral of commanded velocities, never an encoder reading.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import collision, geometry
from .errors import ValidationError
from .types import ImageState, PlannedPath, Scene


@dataclass(frozen=True)
class ServoConfig:
    """Controller tuning.  eps_goal applies to the final waypoint only and
    must not exceed eps_waypoint."""

    gain: float = 1.5                 # lambda
    v_sat: float = 0.8                # rad/s, per-component clamp
    window: int = 30                  # estimation window length (samples)
    eps_waypoint: float = 15.0        # px
    eps_goal: float = 5.0             # px
    excitation_amplitude: float = 0.02  # rad per probe pulse
    max_steps_per_waypoint: int = 400
    dt: float = 0.05                  # control period, seconds
    control_damping: float = 1e-6     # damped pseudo-inverse
    estimator_damping: float = 1e-9   # Tikhonov term in the window solve
    apf_influence_radius: float = 60.0   # px
    apf_repulsive_gain: float = 2.0e5
    apf_max_steps: int = 2000
    stall_velocity: float = 1e-3      # rad/s
    stall_steps: int = 40

    def validate(self) -> None:
        positive = (self.gain, self.v_sat, self.window, self.eps_waypoint,
                    self.eps_goal, self.excitation_amplitude,
                    self.max_steps_per_waypoint, self.dt)
        if any(v <= 0 for v in positive):
            raise ValidationError("servo parameters must be positive")
        if self.eps_goal > self.eps_waypoint:
            raise ValidationError("eps_goal must be <= eps_waypoint")


@dataclass
class JacobianEstimate:
    """Least-squares image Jacobian (2N x M, px per rad) with a conditioning
    report; flagged estimates must not be used for control."""

    j: np.ndarray
    samples: int
    sigma_min: float
    sigma_max: float
    flagged: bool


def estimate_jacobian(window, damping: float = 1e-9,
                      rank_tol: float = 1e-8) -> JacobianEstimate:
    """Solve J = argmin sum ||dk - J dq||^2 over the window via damped normal
    equations; windows without M independent excitations come back flagged."""
    samples = list(window)
    if not samples:
        raise ValidationError("estimation window is empty")
    a = np.array([np.asarray(dq, dtype=float) for dq, _ in samples])
    y = np.array([np.asarray(dk, dtype=float) for _, dk in samples])
    m = a.shape[1]
    if a.shape[0] < m:
        raise ValidationError(f"window needs >= {m} samples, has {a.shape[0]}")
    svals = np.linalg.svd(a, compute_uv=False)
    sigma_min, sigma_max = float(svals[-1]), float(svals[0])
    flagged = sigma_min <= rank_tol
    gram = a.T @ a + damping * np.eye(m)
    j = np.linalg.solve(gram, a.T @ y).T
    return JacobianEstimate(j, a.shape[0], sigma_min, sigma_max, flagged)


def _damped_pinv_apply(j: np.ndarray, e: np.ndarray, damping: float) -> np.ndarray:
    m = j.shape[1]
    return np.linalg.solve(j.T @ j + damping * np.eye(m), j.T @ e)


def _clamp(qdot: np.ndarray, v_sat: float) -> np.ndarray:
    return np.clip(qdot, -v_sat, v_sat)


def servo_step(current: ImageState, target: ImageState,
               est: JacobianEstimate, cfg: ServoConfig) -> np.ndarray:
    """Velocity command -gain * J^+ (current - target), clamped to v_sat."""
    if est.flagged:
        raise ValidationError("jacobian estimate is flagged; re-excite before servoing")
    e = current.flatten() - target.flatten()
    qdot = -cfg.gain * _damped_pinv_apply(est.j, e, cfg.control_damping)
    return _clamp(qdot, cfg.v_sat)


def apf_step(current: ImageState, goal: ImageState, scene: Scene,
             est: JacobianEstimate, cfg: ServoConfig) -> np.ndarray:
    """Potential-field command: per-keypoint attractive pull toward the goal
    plus repulsion from obstacles inside the influence radius (strictly; the
    contribution is zero at exactly the radius), mapped through the same
    estimated Jacobian."""
    if est.flagged:
        raise ValidationError("jacobian estimate is flagged; re-excite before servoing")
    rho = cfg.apf_influence_radius
    force = np.zeros(2 * current.n)
    for i, (kp, gkp) in enumerate(zip(current.keypoints, goal.keypoints)):
        force[2 * i] += gkp.u - kp.u
        force[2 * i + 1] += gkp.v - kp.v
        for poly in scene.obstacles:
            dist, closest, inside = geometry.point_polygon_distance((kp.u, kp.v), poly)
            if inside:
                d_eff = 1.0
                cx = sum(p[0] for p in poly) / len(poly)
                cy = sum(p[1] for p in poly) / len(poly)
                direction = (kp.u - cx, kp.v - cy)
            elif dist < rho:
                d_eff = max(dist, 1.0)
                direction = (kp.u - closest[0], kp.v - closest[1])
            else:
                continue
            norm = math.hypot(*direction)
            if norm <= geometry.EPS:
                continue
            mag = cfg.apf_repulsive_gain * (1.0 / d_eff - 1.0 / rho) / d_eff ** 2
            force[2 * i] += mag * direction[0] / norm
            force[2 * i + 1] += mag * direction[1] / norm
    qdot = cfg.gain * _damped_pinv_apply(est.j, force, cfg.control_damping)
    return _clamp(qdot, cfg.v_sat)


@dataclass(frozen=True)
class StepRecord:
    """One logged control step (probe pulses included)."""

    t: float
    waypoint: int
    phase: str                      # "init" | "probe" | "servo"
    image_state: ImageState
    command: tuple[float, ...]
    error_norm: float               # to the current target
    goal_error_norm: float          # to the final goal
    ee_goal_error_norm: float       # end-effector keypoint only
    window_len: int

    def to_dict(self) -> dict:
        return {"t": self.t, "waypoint": self.waypoint, "phase": self.phase,
                "image_state": self.image_state.to_list(),
                "command": list(self.command), "error_norm": self.error_norm,
                "goal_error_norm": self.goal_error_norm,
                "ee_goal_error_norm": self.ee_goal_error_norm,
                "window_len": self.window_len}


@dataclass
class TrackResult:
    """Trajectory log plus a verdict: converged, stalled(waypoint), collided,
    or fault (plant error, partial log kept)."""

    verdict: str
    log: list[StepRecord]
    sim_seconds: float
    stalled_waypoint: int | None = None
    reason: str | None = None

    @property
    def converged(self) -> bool:
        return self.verdict == "converged"

    def summary_dict(self) -> dict:
        return {"verdict": self.verdict, "steps": len(self.log),
                "sim_seconds": self.sim_seconds,
                "stalled_waypoint": self.stalled_waypoint,
                "reason": self.reason}


class _Session:
    """Shared bookkeeping for the waypoint tracker and the APF runner."""

    def __init__(self, plant, cfg: ServoConfig, goal: ImageState,
                 scene: Scene | None):
        self.plant = plant
        self.cfg = cfg
        self.goal_flat = goal.flatten()
        self.ee_goal = goal.keypoints[-1]
        self.scene = scene
        self.window: deque = deque(maxlen=cfg.window)
        self.log: list[StepRecord] = []
        self.t = 0.0
        self.obs = plant.observe()

    def goal_errors(self, state: ImageState) -> tuple[float, float]:
        full = float(np.linalg.norm(state.flatten() - self.goal_flat))
        ee = state.keypoints[-1]
        ee_err = math.hypot(ee.u - self.ee_goal.u, ee.v - self.ee_goal.v)
        return full, ee_err

    def record(self, waypoint: int, phase: str, command, target_err: float) -> None:
        full, ee = self.goal_errors(self.obs)
        self.log.append(StepRecord(self.t, waypoint, phase, self.obs,
                                   tuple(float(c) for c in command),
                                   target_err, full, ee, len(self.window)))

    def collided(self) -> bool:
        return self.scene is not None and collision.state_in_collision(self.obs, self.scene)

    def step(self, qdot: np.ndarray) -> None:
        """Apply one command and log the observation-side sample."""
        before = self.obs.flatten()
        self.plant.apply(qdot, self.cfg.dt)
        self.obs = self.plant.observe()
        self.window.append((qdot * self.cfg.dt, self.obs.flatten() - before))
        self.t += self.cfg.dt

    def probe(self, waypoint: int, joint: int, m: int, target_flat: np.ndarray) -> None:
        qdot = np.zeros(m)
        qdot[joint] = self.cfg.excitation_amplitude / self.cfg.dt
        qdot = _clamp(qdot, self.cfg.v_sat)
        self.step(qdot)
        err = float(np.linalg.norm(self.obs.flatten() - target_flat))
        self.record(waypoint, "probe", qdot, err)


def track_path(path: PlannedPath, plant, cfg: ServoConfig,
               scene: Scene | None = None, m_joints: int = 3) -> TrackResult:
    """Track a planned path waypoint by waypoint.

    Per waypoint: reset the estimation window, seed it with one small pulse
    per joint, then servo until the feature error is under the waypoint
    threshold (goal threshold on the last waypoint) or the step budget runs
    out.  The scene, when given, is only used to report collisions.
    """
    cfg.validate()
    path.validate()
    targets = list(path.states[1:]) if len(path.states) > 1 else [path.states[0]]
    try:
        sess = _Session(plant, cfg, path.states[-1], scene)
        init_err = float(np.linalg.norm(sess.obs.flatten() - targets[0].flatten()))
        sess.record(0, "init", np.zeros(m_joints), init_err)
        if sess.collided():
            return TrackResult("collided", sess.log, sess.t)

        for wi, target in enumerate(targets):
            eps = cfg.eps_goal if wi == len(targets) - 1 else cfg.eps_waypoint
            target_flat = target.flatten()
            sess.window.clear()
            for j in range(m_joints):
                sess.probe(wi, j, m_joints, target_flat)
                if sess.collided():
                    return TrackResult("collided", sess.log, sess.t)
            steps = 0
            while True:
                err = float(np.linalg.norm(sess.obs.flatten() - target_flat))
                if err <= eps:
                    break
                if steps >= cfg.max_steps_per_waypoint:
                    return TrackResult("stalled", sess.log, sess.t, stalled_waypoint=wi,
                                       reason=f"step budget exhausted at waypoint {wi}")
                est = estimate_jacobian(sess.window, cfg.estimator_damping)
                if est.flagged:
                    sess.probe(wi, steps % m_joints, m_joints, target_flat)
                else:
                    qdot = servo_step(sess.obs, target, est, cfg)
                    sess.step(qdot)
                    sess.record(wi, "servo", qdot,
                                float(np.linalg.norm(sess.obs.flatten() - target_flat)))
                steps += 1
                if sess.collided():
                    return TrackResult("collided", sess.log, sess.t)
        return TrackResult("converged", sess.log, sess.t)
    except (ValidationError,):
        raise
    except Exception as exc:  # plant fault: keep the partial log
        return TrackResult("fault", sess.log, sess.t, reason=str(exc))


def run_apf(plant, goal: ImageState, scene: Scene, cfg: ServoConfig,
            m_joints: int = 3) -> TrackResult:
    """Reactive potential-field baseline toward a single goal state; stalls
    when the commanded velocity stays below the stall threshold."""
    cfg.validate()
    sess = _Session(plant, cfg, goal, scene)
    goal_flat = goal.flatten()
    sess.record(0, "init", np.zeros(m_joints),
                float(np.linalg.norm(sess.obs.flatten() - goal_flat)))
    for j in range(m_joints):
        sess.probe(0, j, m_joints, goal_flat)
    slow = 0
    for _ in range(cfg.apf_max_steps):
        err = float(np.linalg.norm(sess.obs.flatten() - goal_flat))
        if err <= cfg.eps_goal:
            return TrackResult("converged", sess.log, sess.t)
        est = estimate_jacobian(sess.window, cfg.estimator_damping)
        if est.flagged:
            sess.probe(0, len(sess.log) % m_joints, m_joints, goal_flat)
            continue
        qdot = apf_step(sess.obs, goal, scene, est, cfg)
        sess.step(qdot)
        sess.record(0, "servo", qdot,
                    float(np.linalg.norm(sess.obs.flatten() - goal_flat)))
        if float(np.max(np.abs(qdot))) < cfg.stall_velocity:
            slow += 1
            if slow >= cfg.stall_steps:
                return TrackResult("stalled", sess.log, sess.t, stalled_waypoint=0,
                                   reason="velocity collapsed without convergence")
        else:
            slow = 0
    return TrackResult("stalled", sess.log, sess.t, stalled_waypoint=0,
                       reason="step budget exhausted")


def rise_settle_overshoot(log: list[StepRecord]) -> dict:
    """Transient metrics on the normalized goal error: rise time (first
    crossing of 10%), settling time (stays within 2%), overshoot (% rebound
    above the level at first 2% crossing), for the full feature vector and
    the end-effector keypoint separately.  Metrics that never happen are None.
    """
    if not log:
        raise ValidationError("empty trajectory log")

    def channel(values: np.ndarray, times: np.ndarray) -> dict:
        e0 = values[0]
        if e0 <= 1e-12:
            return {"rise_time": 0.0, "settling_time": 0.0, "overshoot_pct": 0.0}
        s = values / e0
        rise_idx = np.nonzero(s <= 0.10)[0]
        rise = float(times[rise_idx[0]]) if rise_idx.size else None
        above = np.nonzero(s > 0.02)[0]
        if above.size == 0:
            settling = float(times[0])
        elif above[-1] + 1 < len(s):
            settling = float(times[above[-1] + 1])
        else:
            settling = None
        cross_idx = np.nonzero(s <= 0.02)[0]
        overshoot = None
        if cross_idx.size:
            c = cross_idx[0]
            overshoot = float(100.0 * max(0.0, float(s[c:].max() - s[c])))
        return {"rise_time": rise, "settling_time": settling,
                "overshoot_pct": overshoot}

    times = np.array([r.t for r in log])
    system = channel(np.array([r.goal_error_norm for r in log]), times)
    ee = channel(np.array([r.ee_goal_error_norm for r in log]), times)
    return {"system": system, "end_effector": ee,
            "execution_time": float(times[-1])}
