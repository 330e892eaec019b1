"""Pluggable distance metrics over image states: plain pixel-space distance,
the learned joint-displacement predictor, and the joint-space oracle used for
benchmarking only."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .mlp import DisplacementModel
from .types import ImageState, JointConfig

IMAGE_SPACE = "image-space"
LEARNED = "learned"
JOINT_SPACE = "joint-space"
METRIC_TAGS = (IMAGE_SPACE, LEARNED, JOINT_SPACE)


def dist_image(a: ImageState, b: ImageState) -> float:
    """Euclidean distance between flattened keypoint vectors (pixels)."""
    if a.n != b.n:
        raise ValidationError(f"image states differ in arity: {a.n} vs {b.n}")
    return float(np.linalg.norm(a.flatten() - b.flatten()))


def dist_joint(qa: JointConfig, qb: JointConfig) -> float:
    """Euclidean joint displacement (radians); oracle-side only."""
    if qa.m != qb.m:
        raise ValidationError(f"joint configs differ in arity: {qa.m} vs {qb.m}")
    return float(np.linalg.norm(qa.asarray() - qb.asarray()))


def dist_learned(model: DisplacementModel, a: ImageState, b: ImageState) -> float:
    """Norm of the predicted joint displacement, symmetrized by averaging both
    directions (roadmap edges are undirected; the raw network need not be
    symmetric)."""
    if 4 * a.n != model.net.input_size or a.n != b.n:
        raise ValidationError(
            f"model expects input width {model.net.input_size}, states have N={a.n}/{b.n}")
    fwd = np.linalg.norm(model.predict_pair(a, b))
    rev = np.linalg.norm(model.predict_pair(b, a))
    return float(0.5 * (fwd + rev))


class Metric:
    """Distance evaluated on flattened-state arrays (and, for the joint-space
    oracle, per-node joint configs)."""

    tag: str = ""
    needs_joints = False

    def distance(self, a: ImageState, b: ImageState,
                 qa: JointConfig | None = None, qb: JointConfig | None = None) -> float:
        raise NotImplementedError

    def rows_from(self, query_flat: np.ndarray, flat: np.ndarray,
                  query_q=None, joints=None) -> np.ndarray:
        """Distances from one query to every row of `flat` (vectorized)."""
        raise NotImplementedError


class ImageSpaceMetric(Metric):
    tag = IMAGE_SPACE

    def distance(self, a, b, qa=None, qb=None) -> float:
        return dist_image(a, b)

    def rows_from(self, query_flat, flat, query_q=None, joints=None):
        return np.linalg.norm(flat - query_flat, axis=1)


class JointSpaceMetric(Metric):
    """Benchmark-only metric using oracle joint configs attached to nodes."""

    tag = JOINT_SPACE
    needs_joints = True

    def distance(self, a, b, qa=None, qb=None) -> float:
        if qa is None or qb is None:
            raise ValidationError("joint-space metric needs oracle joint configs")
        return dist_joint(qa, qb)

    def rows_from(self, query_flat, flat, query_q=None, joints=None):
        if query_q is None or joints is None:
            raise ValidationError("joint-space metric needs oracle joint configs")
        return np.linalg.norm(joints - np.asarray(query_q), axis=1)


class LearnedMetric(Metric):
    tag = LEARNED

    def __init__(self, model: DisplacementModel):
        for w in model.net.parameters():
            if not np.all(np.isfinite(w)):
                raise ValidationError("displacement model has non-finite weights")
        self.model = model

    def distance(self, a, b, qa=None, qb=None) -> float:
        return dist_learned(self.model, a, b)

    def rows_from(self, query_flat, flat, query_q=None, joints=None):
        n = flat.shape[0]
        tiled = np.broadcast_to(query_flat, (n, query_flat.size))
        fwd = np.linalg.norm(self.model.predict_batch(np.hstack([tiled, flat])), axis=1)
        if self.model.antisymmetrize:
            return fwd  # both directions coincide by construction
        rev = np.linalg.norm(self.model.predict_batch(np.hstack([flat, tiled])), axis=1)
        return 0.5 * (fwd + rev)


def make_metric(tag: str, model: DisplacementModel | None = None) -> Metric:
    """Factory for the three roadmap metrics."""
    if tag == IMAGE_SPACE:
        return ImageSpaceMetric()
    if tag == JOINT_SPACE:
        return JointSpaceMetric()
    if tag == LEARNED:
        if model is None:
            raise ValidationError("learned metric requires a trained model")
        return LearnedMetric(model)
    raise ValidationError(f"unknown metric tag {tag!r}; expected one of {METRIC_TAGS}")
