"""Supervised (start state, end state, joint displacement) pairs extracted
from sweep frames, with multi-frame span augmentation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .sim import Frame
from .types import ImageState


@dataclass(frozen=True)
class PairSample:
    """One supervised example: two image states and the signed joint
    displacement vector between them."""

    k_start: ImageState
    k_end: ImageState
    dq: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"k_start": self.k_start.to_list(),
                "k_end": self.k_end.to_list(),
                "dq": list(self.dq)}

    @staticmethod
    def from_dict(data) -> "PairSample":
        return PairSample(ImageState.from_list(data["k_start"]),
                          ImageState.from_list(data["k_end"]),
                          tuple(float(x) for x in data["dq"]))


def _check_ordered(frames: list[Frame]) -> None:
    for a, b in zip(frames, frames[1:]):
        if b.frame_index <= a.frame_index:
            raise ValidationError("frames must be ordered by frame_index")


def consecutive_pairs(frames: list[Frame]) -> list[PairSample]:
    """One sample per adjacent frame pair; dq is the recorded transition
    velocity integrated over its dt."""
    _check_ordered(frames)
    out = []
    for a, b in zip(frames, frames[1:]):
        dq = tuple(v * a.dt for v in a.joint_velocity)
        out.append(PairSample(a.image_state, b.image_state, dq))
    return out


def augment_spans(frames: list[Frame], max_span: int = 10,
                  samples: int | None = None, rng_seed: int = 0,
                  flip_direction: bool = False) -> list[PairSample]:
    """Random multi-frame windows [i, j] with 1 <= j - i <= max_span; dq is
    the signed telescoping sum of per-step displacements, so it equals
    q_j - q_i exactly.

    samples defaults to 5x the consecutive-pair count.  With flip_direction,
    each window is emitted reversed (end state first, dq negated) with
    probability 1/2, so both traversal directions are covered.
    """
    if max_span < 2:
        raise ValidationError("max_span must be >= 2")
    _check_ordered(frames)
    n = len(frames)
    if n < 2:
        return []
    if samples is None:
        samples = 5 * (n - 1)

    # prefix[i] = sum of step displacements before frame i, so a window's dq
    # is prefix[j] - prefix[i] (telescoping).
    steps = np.array([np.asarray(f.joint_velocity) * f.dt for f in frames[:-1]])
    prefix = np.vstack([np.zeros(steps.shape[1]), np.cumsum(steps, axis=0)])

    rng = np.random.default_rng(rng_seed)
    out = []
    for _ in range(samples):
        span = int(rng.integers(1, max_span + 1))
        span = min(span, n - 1)
        i = int(rng.integers(0, n - span))
        j = i + span
        dq = prefix[j] - prefix[i]
        if flip_direction and rng.integers(0, 2) == 1:
            out.append(PairSample(frames[j].image_state, frames[i].image_state,
                                  tuple(float(x) for x in -dq)))
        else:
            out.append(PairSample(frames[i].image_state, frames[j].image_state,
                                  tuple(float(x) for x in dq)))
    return out


def identity_pairs(frames: list[Frame], count: int, rng_seed: int = 0) -> list[PairSample]:
    """Zero-displacement samples (a frame paired with itself); they anchor the
    learned metric at zero, which no positive span can supply."""
    if count <= 0 or not frames:
        return []
    rng = np.random.default_rng(rng_seed)
    m = len(frames[0].joint_config.q)
    idx = rng.integers(0, len(frames), count)
    return [PairSample(frames[i].image_state, frames[i].image_state, (0.0,) * m)
            for i in idx]


def split(pairs: list[PairSample], train_fraction: float,
          rng_seed: int = 0) -> tuple[list[PairSample], list[PairSample]]:
    """Deterministic disjoint train/validation split."""
    if not (0.0 < train_fraction < 1.0):
        raise ValidationError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(rng_seed)
    perm = rng.permutation(len(pairs))
    n_train = int(len(pairs) * train_fraction)
    train = [pairs[i] for i in perm[:n_train]]
    val = [pairs[i] for i in perm[n_train:]]
    return train, val
